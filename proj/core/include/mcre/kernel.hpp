#pragma once

#include "mcre/rng.hpp"
#include "mcre/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mcre {

enum class StateSpaceKind { kReal, kFinite };

/// Descriptor of E: R^dim, or the label set {0, ..., dim - 1}.
struct StateSpace {
    StateSpaceKind kind = StateSpaceKind::kReal;
    std::size_t dim = 1;

    /// Number of doubles used to store one point.
    std::size_t point_size() const { return kind == StateSpaceKind::kReal ? dim : 1; }
    bool operator==(const StateSpace&) const = default;

    static StateSpace real(std::size_t m) { return {StateSpaceKind::kReal, m}; }
    static StateSpace finite(std::size_t n) { return {StateSpaceKind::kFinite, n}; }
};

using SampleFn = std::function<void(PointView x, PointView y, Stream& rng, std::span<double> out)>;
using DensityFn = std::function<double(PointView x, PointView y, PointView y_next)>;
using MatrixFn = std::function<Matrix(PointView x)>;

/// The random kernel family x -> P_x on E.
///
/// Sampling is always available. A density of P_x(y, .) with respect to
/// `reference()` and an exact row-stochastic matrix (finite E) are optional.
/// Immutable; all sampling state lives in the caller's stream.
class KernelFamily {
public:
    KernelFamily(StateSpace space, SampleFn sample, std::optional<DensityFn> density = std::nullopt,
                 std::optional<MatrixFn> matrix = std::nullopt, std::string reference = "lebesgue");

    /// Finite kernel selected by environment label: P_x = matrices[label(x)].
    /// ConfigurationError on non-stochastic rows.
    static KernelFamily finite(std::vector<Matrix> by_label);

    /// Finite kernel whose matrix is an arbitrary function of x.
    static KernelFamily finite(std::size_t states, MatrixFn matrix);

    const StateSpace& state_space() const { return space_; }
    bool has_density() const { return density_.has_value(); }
    bool has_matrix() const { return matrix_.has_value(); }
    const std::string& reference() const { return reference_; }

    void sample(PointView x, PointView y, Stream& rng, std::span<double> out) const { sample_(x, y, rng, out); }
    Point sample(PointView x, PointView y, Stream& rng) const;

    /// CapabilityError when no density is available.
    double density(PointView x, PointView y, PointView y_next) const;
    /// CapabilityError when no matrix is available.
    Matrix matrix(PointView x) const;

private:
    StateSpace space_;
    SampleFn sample_;
    std::optional<DensityFn> density_;
    std::optional<MatrixFn> matrix_;
    std::string reference_;
};

/// (V, lambda, b, p): [P_{x_1} ... P_{x_p}] V <= lambda V + b.
///
/// lambda and b take an F^p tuple stored newest first, (x_p, ..., x_1),
/// which is the layout produced by block(). p == 1 is the one-step drift.
struct DriftSpec {
    ScalarFn V;
    ScalarFn lambda;
    ScalarFn b;
    std::size_t p = 1;
};

using EtaFn = std::function<double(double R, PointView x)>;
using NuSampleFn = std::function<void(double R, PointView x, Stream& rng, std::span<double> out)>;
using NuDensityFn = std::function<double(double R, PointView x, PointView y)>;

/// (eta, nu_R): P_x(y, .) >= eta(R, x) nu_R(x, .) whenever V(y) <= R.
/// nu_R is always a probability measure; any unnormalized dominating
/// measure is folded into eta.
struct MinorizationSpec {
    EtaFn eta;
    NuSampleFn nu_sample;
    std::optional<NuDensityFn> nu_density;
    std::string reference = "lebesgue";
    std::size_t p = 1;
};

/// One draw from P_x(y, .).
Point kernel_step(const KernelFamily& k, PointView x, PointView y, Stream& rng);

/// A single Markov kernel on E (environment fixed).
struct ComposedKernel {
    StateSpace space;
    std::function<void(PointView y, Stream& rng, std::span<double> out)> sample;
    std::optional<Matrix> matrix;

    Point draw(PointView y, Stream& rng) const;
};

/// P_{xs[0]} P_{xs[1]} ... : xs[0] is applied first. Matrices are multiplied
/// eagerly when available; samplers are chained otherwise.
ComposedKernel compose(const KernelFamily& k, const std::vector<Point>& xs);

/// Same as compose() for a tuple stored newest first, (x_p, ..., x_1),
/// each entry `point_dim` doubles wide.
ComposedKernel compose_tuple(const KernelFamily& k, PointView tuple, std::size_t point_dim);

/// Product a b (a applied first). CapabilityError if the state spaces differ.
ComposedKernel compose(const ComposedKernel& a, const ComposedKernel& b);

struct ResidualStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
};

/// Draw from Q_x(y, .) = (P_x(y, .) - eta nu_R(x, .)) / (1 - eta).
///
/// Finite kernels sample the residual row directly. Density kernels propose
/// w ~ P_x(y, .) and accept with probability (p(w) - eta nu(w)) / p(w).
/// MinorizationViolation when the residual mass is below -1e-9;
/// NumericError after 10^6 consecutive rejections.
Point residual_sample(const KernelFamily& k, const MinorizationSpec& m, double R, PointView x, PointView y,
                      Stream& rng, ResidualStats* stats = nullptr);

/// (row - eta nu) / (1 - eta), validated and clipped at zero.
Eigen::RowVectorXd finite_residual_row(const Eigen::RowVectorXd& row, double eta, const Eigen::RowVectorXd& nu);

/// nu_R(x, .) as a probability vector over the labels of a finite E.
Eigen::RowVectorXd finite_nu(const MinorizationSpec& m, double R, PointView x, std::size_t states);

struct MinorizationReport {
    double min_margin = 0.0;
    std::size_t x_index = 0;
    std::size_t y_index = 0;
    std::size_t y_next_index = 0;
    std::size_t evaluated = 0;
    bool pass = false;
};

/// Minimum over x in xs, y in ys and y' of p_x(y, y') - eta(R, x) nu_R(x, y').
/// For finite kernels y' ranges over all labels; otherwise over ys.
/// pass iff the minimum is >= -1e-9.
MinorizationReport minorization_validate(const KernelFamily& k, const MinorizationSpec& m, double R,
                                         const std::vector<Point>& xs, const std::vector<Point>& ys);

/// Composite Simpson integral of y' -> p_x(y, y') over [lo, hi] (1-d E).
double integrate_density_1d(const KernelFamily& k, PointView x, PointView y, double lo, double hi,
                            std::size_t intervals = 20000);

}  // namespace mcre
