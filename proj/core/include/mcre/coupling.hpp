#pragma once

#include "mcre/conditions.hpp"
#include "mcre/environment.hpp"
#include "mcre/goodtimes.hpp"
#include "mcre/kernel.hpp"
#include "mcre/parallel.hpp"

#include <array>
#include <optional>
#include <vector>

namespace mcre {

struct CoupledState {
    Point y;
    Point y_bar;
    bool coalesced = false;
};

enum class Branch : std::size_t {
    kEqual = 0,           // y == y_bar: one shared draw
    kOutside = 1,         // max(V(y), V(y_bar)) > R: independent draws
    kInsideCoalesce = 2,  // inside the level set, the eta coin succeeded
    kInsideResidual = 3,  // inside, the coin failed: independent residual draws
    kIndependent = 4,     // inside, but the minorization is not used at this time
};
inline constexpr std::size_t kBranchCount = 5;
const char* branch_name(Branch b);

/// One step of the coupled pair under P_x.
///
/// Substreams of `rng`: 0 drives y, 1 drives y_bar, 2 drives the coin and
/// the nu draw, so each coordinate's draw does not depend on which branch
/// the other coordinate took. `minorize` selects whether an unequal pair
/// inside {max V <= R} may use the eta/nu split. eta(R, x) == 1 is allowed
/// and coalesces with certainty.
CoupledState coupled_step(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V, double R,
                          PointView x, const CoupledState& s, const Stream& rng, bool minorize = true,
                          Branch* branch = nullptr, ResidualStats* residual = nullptr);

/// Which times may use the minorization branch, at which level R, and
/// which times form the skeleton on which return times are recorded.
class CouplingSchedule {
public:
    /// Minorization only at the good times of `g`, level g.R; skeleton = good times.
    static CouplingSchedule from_good_times(const GoodTimeIndex& g);
    /// Minorization at every time whose eta(R, X_t) >= eta_min; skeleton = every
    /// `stride`-th time counted from the start.
    static CouplingSchedule fixed_level(double R, double eta_min = 0.0, std::size_t stride = 1);

    double R() const { return R_; }
    std::uint64_t C1() const { return C1_; }
    bool eligible(std::int64_t t, double eta) const;
    /// Skeleton times in (start, end]; start itself is index 0.
    std::vector<std::int64_t> skeleton(std::int64_t start, std::int64_t end) const;

private:
    double R_ = 0.0;
    std::uint64_t C1_ = 0;
    bool all_times_ = true;
    double eta_min_ = 0.0;
    std::size_t stride_ = 1;
    std::vector<std::int64_t> good_;  // sorted
};

struct CouplingTrace {
    std::int64_t start = 0;  // -n
    /// states[i] is the pair at time start + i.
    std::vector<CoupledState> states;
    std::optional<std::int64_t> coalescence_time;
    /// Skeleton times; index 0 is the start.
    std::vector<std::int64_t> skeleton;
    /// W_i = V(y) + V(y_bar) at skeleton index i.
    std::vector<double> W;
    /// Skeleton indices i >= 1 with W_i <= R, increasing.
    std::vector<std::size_t> rho;
    std::array<std::size_t, kBranchCount> branch_counts{};
    ResidualStats residual;

    const CoupledState& final_state() const { return states.back(); }
};

/// Coupled pair from (z, z_bar) at time -n to time 0, stepping with
/// x = X_{t-1} into time t. Step t uses rng.split_signed(t).
CouplingTrace run_coupling(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V,
                           const EnvironmentRealization& env, const Point& z, const Point& z_bar, std::size_t n,
                           const CouplingSchedule& schedule, const Stream& rng);

struct CurvePoint {
    std::size_t n = 0;
    std::size_t replicas = 0;
    std::size_t non_coalesced = 0;
    double fraction = 0.0;
    double se = 0.0;
};

struct DecayFit {
    double kappa_hat = 1.0;
    double F_hat = 0.0;
    double r_squared = 0.0;
    /// True when fewer than two n had a positive fraction; kappa_hat is then
    /// the rule-of-three upper bound (3 / replicas)^{1/n} at the first empty n.
    bool degenerate = false;
    /// The fitted rate exceeded 1 and was clipped.
    bool clipped = false;
    std::vector<CurvePoint> curve;
};

enum class ScheduleKind { kFixedLevel, kGoodTimes };

struct CurveOptions {
    ScheduleKind schedule = ScheduleKind::kFixedLevel;
    double R = 1.0;          // fixed level
    double eta_min = 0.0;    // fixed level
    /// Good-time schedule: drift inputs and search caps.
    ScalarFn lambda;
    ScalarFn b;
    GoodTimeOptions good;
    /// Extra environment history left of -n (series evaluation for good times).
    std::size_t burn_in = 1000;
    /// Environment steps per kernel step (skeleton kernels use skeleton_environment).
    std::size_t block = 1;
};

/// Fraction of replicas with Y_0 != Y_bar_0 for each n. Replica j draws its
/// environment and coupling randomness from derive_seed(master_seed, j), so
/// results do not depend on the thread count. Fits log fraction against n
/// by least squares over the positive fractions.
DecayFit coalescence_curve(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V,
                           const EnvironmentSpec& env_spec, const Point& z, const Point& z_bar,
                           const std::vector<std::size_t>& ns, std::size_t replicas, std::uint64_t master_seed,
                           const CurveOptions& options = {}, Parallelism par = {});

/// Least-squares fit of log fraction against n; F_hat divides out 1 + V(z) + V(z_bar).
DecayFit fit_decay(std::vector<CurvePoint> curve, double start_weight);

/// Moment checks on the return times of the skeleton pair.
struct ReturnTimeReport {
    double eta = 0.0;  // 2 / (2 - 1/C1)
    double D = 0.0;    // 1 + (1 - 1/C1) R + 2 C1
    double first_mean = 0.0;
    double first_se = 0.0;
    double first_bound = 0.0;  // V(z) + V(z_bar)
    std::size_t first_count = 0;
    double gap_mean = 0.0;
    double gap_se = 0.0;
    double gap_bound = 0.0;  // D eta
    std::size_t gap_count = 0;
    /// Traces without any return, and traces whose last return was not followed by another.
    std::size_t censored_first = 0;
    std::size_t censored_gap = 0;
    bool first_pass = false;
    bool gap_pass = false;
};

ReturnTimeReport return_time_moments(const std::vector<CouplingTrace>& traces, std::uint64_t C1, double R,
                                     double start_weight);

/// Empirical E[W_i | W_{i-1}] against (1 - 1/C1) W_{i-1} + 2 C1 on quantile
/// bins of W_{i-1}, with a 3-SE allowance per bin.
ConditionReport skeleton_drift_check(const std::vector<CouplingTrace>& traces, std::uint64_t C1,
                                     std::size_t bins = 10);

}  // namespace mcre
