#pragma once

#include "mcre/environment.hpp"
#include "mcre/kernel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcre::models {

enum class NoiseFamily { kGaussian, kLaplace, kStudentT };

/// Centered, symmetric, unimodal noise law from a closed-form catalog.
/// Because the density decreases in |e|, its infimum over [-J, J] is f(J).
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::kGaussian;
    double scale = 1.0;
    double df = 0.0;  // student-t only, must exceed 1

    static NoiseSpec gaussian(double scale = 1.0);
    static NoiseSpec laplace(double scale = 1.0);
    static NoiseSpec student_t(double df, double scale = 1.0);

    /// ConfigurationError on non-positive scale or df <= 1.
    void validate() const;

    double density(double e) const;
    double cdf(double e) const;
    double mean_abs() const;
    double sample(Stream& rng) const;
    /// inf_{|e| <= J} f(e).
    double floor(double J) const { return density(std::abs(J)); }
    std::string name() const;
};

/// Kernel, drift and minorization data of one model.
///
/// `block` is the number of environment values consumed by one step of
/// `kernel`: 1 for one-step models, k for a k-step skeleton whose
/// environment comes from skeleton_environment(r, k).
struct ModelBundle {
    std::string name;
    KernelFamily kernel;
    DriftSpec drift;
    MinorizationSpec minorization;
    double default_R = 1.0;
    std::size_t block = 1;
    /// Unblocked kernel (FAR-X: the companion-form one-step kernel on R^p).
    std::optional<KernelFamily> one_step;
    /// Companion matrix A(x) (FAR-X only).
    std::optional<MatrixFn> companion;
    /// Free-form notes, e.g. the grid used for numerical envelopes.
    std::vector<std::string> notes;
};

struct TarxCoefficients {
    ScalarFn a1, b1, a2, b2, r;
};

enum class EtaMode {
    kTight,   // min(2R * inf f, 1 - 1e-12): the constant for a normalized uniform nu
    kStrict,  // inf f itself, as written for the unnormalized construction
};

/// Y' = (b1 + a1 y) 1{y <= r} + (b2 + a2 y) 1{y > r} + e, all coefficients
/// evaluated at the environment value x. V(y) = |y|, nu_R uniform on [-R, R].
ModelBundle make_tarx(TarxCoefficients c, NoiseSpec noise, EtaMode mode = EtaMode::kTight, double default_R = 1.0);

/// Y' = a(x) y + e: TAR-X with a1 = a2 = a and b1 = b2 = 0.
ModelBundle make_rca(ScalarFn a, NoiseSpec noise, EtaMode mode = EtaMode::kTight, double default_R = 1.0);

/// a_j(x, lags), lags = (y_1, ..., y_p) newest first.
using FarxCoefficient = std::function<double(PointView x, PointView lags)>;

struct FarxOptions {
    /// b_j(x) = sup over lags |a_j(x, lags)|; computed numerically when empty.
    std::vector<ScalarFn> envelopes;
    /// Numerical sup: lag box [-lag_box, lag_box]^p with `grid_points` per axis.
    double lag_box = 10.0;
    std::size_t grid_points = 21;
    /// Number k of one-step kernels per skeleton step; a positive multiple of p.
    std::size_t block = 0;  // 0 selects p
    double default_R = 1.0;
};

/// Y_t = sum_j a_j(X_{t-1}, Y_{t-1}, ..., Y_{t-p}) Y_{t-j} + e_t in companion
/// form on E = R^p, states stored newest first.
///
/// The bundle kernel is the k-step skeleton P_{x_1} ... P_{x_k} indexed by
/// k-tuples stored newest first. Its drift uses V = l1 norm,
/// lambda = ||A(x_k) ... A(x_1)|| and b = E|e| (1 + sum_{j=2}^k prod ||A||).
/// Its minorization uses nu_R uniform on [-R, R]^p and, per p-block,
/// (2R)^p prod_i f(R (1 + sum_j b_j(x_i))); blocks are chained with the
/// factor nu_R({V <= R}) = 1/p!. A density is available when k == p.
ModelBundle make_farx(std::vector<FarxCoefficient> a, NoiseSpec noise, FarxOptions options = {});

/// Companion matrix with first row (b_1(x), ..., b_p(x)) over (I_{p-1} | 0).
Matrix companion_matrix(const std::vector<double>& b);

/// Scalar recursion of the FAR-X model driven by env[t0], ..., env[t0 + steps - 1]
/// with one noise draw per step from `rng`. `history` holds (Y_{t0-1}, ..., Y_{t0-p}).
/// Returns Y_{t0}, ..., Y_{t0 + steps - 1}.
std::vector<double> farx_simulate_scalar(const std::vector<FarxCoefficient>& a, const NoiseSpec& noise,
                                         const EnvironmentRealization& env, std::int64_t t0, std::size_t steps,
                                         std::vector<double> history, Stream& rng);

/// Grid infimum of the p = 2 product density over |y_1|, |y_2|, |v_1|, |v_2| <= R,
/// `points` values per axis, times (2R)^2. Validates the closed-form constant.
double farx2_grid_eta(const std::vector<FarxCoefficient>& a, const NoiseSpec& noise, double R, PointView x1,
                      PointView x2, std::size_t points = 20);

struct FiniteOptions {
    /// Drift function on the labels; all ones when empty.
    std::vector<double> V;
};

/// Exact-matrix model selected by environment label. lambda = 1/2 and
/// b = max(1e-12, max_i (P V)_i - V_i / 2). eta is the column-minimum mass
/// over the rows with V <= R and nu the normalized minima.
ModelBundle make_finite(std::vector<Matrix> by_label, FiniteOptions options = {});

}  // namespace mcre::models
