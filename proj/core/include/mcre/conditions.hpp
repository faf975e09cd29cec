#pragma once

#include "mcre/environment.hpp"
#include "mcre/kernel.hpp"
#include "mcre/parallel.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mcre {

/// Per-point diagnostic of a condition check.
struct Diagnostic {
    std::size_t index = 0;
    double value = 0.0;  // estimated left-hand side
    double bound = 0.0;  // right-hand side
    double se = 0.0;
};

/// Outcome of a numerical condition check.
///
/// `pass` is a function of (estimate, halfwidth, threshold, direction)
/// only: for "<=" it is estimate - halfwidth <= threshold (a one-sided
/// allowance in favour of the condition); for "<" it is
/// estimate + halfwidth < threshold (the condition must hold with margin).
struct ConditionReport {
    std::string name;
    double estimate = 0.0;
    double halfwidth = 0.0;
    double threshold = 0.0;
    std::string direction = "<=";
    bool pass = false;
    std::vector<Diagnostic> details;
    /// (n, estimate at n) pairs, for limits evaluated at finite n.
    std::vector<std::pair<std::size_t, double>> trajectory;
    std::vector<std::string> notes;

    void decide();
};

struct DriftPoint {
    Point x_tuple;  // p environment values, newest first
    Point y;
};

/// Checks [P_{x_1} ... P_{x_p}] V(y) <= lambda V(y) + b at every point.
///
/// Exact when the kernel has matrices; otherwise n_mc draws per point with a
/// one-sided 3-SE allowance. The report estimate is the excess
/// (PV - bound) at the least favourable point and the halfwidth its 3 SE.
/// `k` is the one-step kernel; each tuple holds d.p points.
ConditionReport drift_check(const KernelFamily& k, const DriftSpec& d, const std::vector<DriftPoint>& points,
                            std::size_t n_mc, Stream rng, Parallelism par = {});

/// Geometric mean of lambda over the non-overlapping blocks
/// (X_{-1-kp}, ..., X_{-(k+1)p}), k = 0..n-1, passed to lambda newest first.
/// Pass iff estimate + halfwidth < 1, with the halfwidth covering both a
/// 3-SE band on the mean log and the spread across n/4, n/2 and n.
ConditionReport geometric_mean_condition(const EnvironmentRealization& r, const ScalarFn& lambda, std::size_t p,
                                         std::size_t n);

struct SeriesOptions {
    std::size_t max_terms = 10000;
    double tol = 1e-9;
    /// Upper bound on b used in the tail estimate; the running max of b when NaN.
    double b_envelope = std::numeric_limits<double>::quiet_NaN();
};

struct SeriesResult {
    double value = 0.0;
    /// Estimated bound on the omitted tail.
    double truncation_bound = std::numeric_limits<double>::infinity();
    std::size_t terms = 0;
    /// max_terms reached before the tail estimate fell below tol.
    bool diverged = false;
    /// The supplied past ended before convergence (span overload only).
    bool exhausted = false;
    /// products[j - 1] = lambda(X_{t-1}) ... lambda(X_{t-j}), j = 1..terms.
    std::vector<double> products;
};

/// b(X_{t-1}) + sum_{i>=2} lambda(X_{t-1}) ... lambda(X_{t-i+1}) b(X_{t-i})
/// along the past of `origin`. Terms are added until the running product
/// times the b envelope, divided by one minus the running geometric mean of
/// lambda, falls below tol. The tail estimate is heuristic when lambda varies.
/// RangeError when the window ends before the sum converges.
SeriesResult series_bound(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                          SeriesOptions options = {}, std::int64_t origin = 0);

/// Same computation on precomputed values: lambda_past[i] = lambda(X_{t-1-i}).
SeriesResult series_bound(std::span<const double> lambda_past, std::span<const double> b_past,
                          SeriesOptions options = {});

enum class MatrixNorm { kL1Induced, kLinfInduced, kFrobenius };

double matrix_norm(const Matrix& m, MatrixNorm norm = MatrixNorm::kL1Induced);

/// n^{-1} log ||A(X_{-1}) ... A(X_{-n})|| with the product renormalized
/// after every factor. Returns -infinity when a partial product vanishes.
double lyapunov_exponent(const MatrixFn& A, const EnvironmentRealization& r, std::size_t n,
                         MatrixNorm norm = MatrixNorm::kL1Induced);

/// The same quantity from the raw product; under/overflows for large n.
double lyapunov_exponent_naive(const MatrixFn& A, const EnvironmentRealization& r, std::size_t n,
                               MatrixNorm norm = MatrixNorm::kL1Induced);

/// Heuristic membership check for the moment condition E log+ lambda < inf:
/// the empirical mean of log+ lambda(X_{-i}) must be finite and move by at
/// most 10% (or 1e-3 absolute) across n/4, n/2 and n.
ConditionReport log_plus_moment(const EnvironmentRealization& r, const ScalarFn& lambda, std::size_t n);

}  // namespace mcre
