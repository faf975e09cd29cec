#pragma once

#include "mcre/coupling.hpp"
#include "mcre/environment.hpp"
#include "mcre/kernel.hpp"
#include "mcre/oracle.hpp"
#include "mcre/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcre {

/// Approximation of pi_{xi_t}: an exact probability vector when the kernel
/// has matrices, otherwise a sample of E-points.
struct RandomMeasureEstimate {
    std::optional<oracle::DistributionVector> exact;
    std::vector<Point> samples;
    std::size_t n_backward = 0;
    std::string env_window_id;
};

/// Law of Y_{t_end + 1} started at z at time t_end + 1 - n:
/// delta_z P_{X_{t_end+1-n}} ... P_{X_{t_end}}. With t_end = -1 this is the
/// backward estimate of pi_{xi_{-1}}.
RandomMeasureEstimate backward_law_exact(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                                         std::size_t n, std::int64_t t_end = -1);

/// `replicas` independent draws of the same law; replica i uses rng.split(i).
RandomMeasureEstimate backward_law_sampled(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                                           std::size_t n, std::size_t replicas, const Stream& rng,
                                           std::int64_t t_end = -1, Parallelism par = {});

/// One draw from delta_z P_{X_{-n}} ... P_{X_{-1}}, simulated forward from
/// time -n. The step into time t uses rng.split_signed(t).
Point backward_sample(const KernelFamily& k, const EnvironmentRealization& env, const Point& z, std::size_t n,
                      const Stream& rng);

enum class TvMode { kExact, kCoupling };

struct TvEstimate {
    double tv = 0.0;
    double se = 0.0;
    /// Expected level of pure sampling noise (binned estimates only).
    double noise_floor = 0.0;
    std::string method;
};

struct CouplingSetup {
    const MinorizationSpec* minorization = nullptr;
    ScalarFn V;
    CouplingSchedule schedule = CouplingSchedule::fixed_level(1.0);
    std::size_t replicas = 10000;
    std::uint64_t seed = 0;
    Parallelism par;
};

/// Distance between the backward laws started at z and z_prime. Exact mode
/// needs matrices; coupling mode returns P(Y_0 != Y_bar_0) with its SE,
/// an upper bound on the distance.
TvEstimate backward_tv_pair(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                            const Point& z_prime, std::size_t n, TvMode mode, const CouplingSetup& coupling = {});

struct InvarianceOptions {
    std::size_t replicas = 100000;
    std::size_t bins = 0;  // 0: ceil(sqrt(replicas))
    Point z;               // start point; zero when empty
    Parallelism par;
};

/// TV(pi_hat_{xi_{-1}} P_{X_0}, pi_hat_{xi_0}), where pi_hat_{xi_0} starts n
/// steps before time 1 and pi_hat_{xi_{-1}} P_{X_0} starts one step earlier.
/// Exact with matrices, binned-histogram estimate otherwise.
TvEstimate invariance_check(const KernelFamily& k, const EnvironmentRealization& env, std::size_t n,
                            const Stream& rng, const InvarianceOptions& options = {});

struct ForwardOptions {
    std::size_t env_draws = 100;
    std::size_t replicas_per_env = 1000;
    std::size_t n_backward = 1000;
    std::size_t bins = 0;
    Parallelism par;
};

/// d_TV between the law of Y_t (started at z at time 0, environment
/// stationary and unobserved) and pi^inf = E[pi_{xi_{-1}}].
///
/// For finite environments and matrix kernels both laws are computed exactly
/// on the joint (environment, chain) state space. Otherwise pi^inf is
/// estimated by pooling backward samples over env_draws environments.
TvEstimate forward_convergence(const KernelFamily& k, const EnvironmentSpec& env_spec, const Point& z,
                               std::size_t t, std::uint64_t seed, const ForwardOptions& options = {});

/// Exact law of Y_t for every t in [0, t_max] and the exact pi^inf, finite case.
struct ForwardExact {
    std::vector<oracle::DistributionVector> law;
    oracle::DistributionVector limit;
};
ForwardExact forward_exact(const KernelFamily& k, const EnvironmentSpec& env_spec, std::size_t z, std::size_t t_max);

/// Approximate stationary path (Y_u, ..., Y_t): Y_u is a backward sample
/// started at z at time u - n_backward, then the chain moves forward through
/// P_{X_u}, ..., P_{X_{t-1}}.
std::vector<Point> stationary_path_sample(const KernelFamily& k, const EnvironmentRealization& env, std::int64_t u,
                                          std::int64_t t, std::size_t n_backward, const Stream& rng,
                                          const Point& z = {});

struct LlnResult {
    double average = 0.0;
    double se = 0.0;  // batch means
    /// (n, running average) at the requested checkpoints.
    std::vector<std::pair<std::size_t, double>> running;
};

/// n^{-1} sum_{t=1}^{n} f(Y_t) along one stationary path sample.
LlnResult lln_average(const KernelFamily& k, const EnvironmentRealization& env, const ScalarFn& f, std::size_t n,
                      std::size_t n_backward, const Stream& rng, const Point& z = {},
                      const std::vector<std::size_t>& checkpoints = {});

/// Exact backward laws at n and 2n differ by at most tol.
bool backward_doubling_check(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                             std::size_t n, double tol);

}  // namespace mcre
