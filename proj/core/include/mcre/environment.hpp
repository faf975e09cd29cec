#pragma once

#include "mcre/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mcre {

enum class EnvironmentKind { kIid, kGaussianAr1, kFiniteMarkov, kDeterministicCycle };
enum class IidDistribution { kNormal, kUniform, kLogNormal, kCategorical };

/// Law of the stationary exogenous process X.
///
/// `ergodic` and `mixing` are declared metadata; nothing in the library
/// tries to infer them from data.
struct EnvironmentSpec {
    EnvironmentKind kind = EnvironmentKind::kIid;
    std::size_t state_dim = 1;
    bool ergodic = true;
    bool mixing = true;

    // iid: every coordinate drawn independently (categorical draws one label).
    IidDistribution distribution = IidDistribution::kNormal;
    double location = 0.0;  // mean (normal), log-mean (lognormal)
    double scale = 1.0;     // sd (normal), log-sd (lognormal)
    double lower = 0.0;     // uniform
    double upper = 1.0;
    std::vector<double> probabilities;  // categorical

    // gaussian-ar1: X_t - mean = phi (X_{t-1} - mean) + sigma e_t, per coordinate.
    double phi = 0.0;
    double sigma = 1.0;
    double mean = 0.0;

    // finite-markov on labels 0..n-1.
    Matrix transition;
    std::optional<std::size_t> initial_label;

    // deterministic-cycle: X_t = cycle[(t + phase) mod L].
    std::vector<Point> cycle;
    bool random_phase = false;

    /// Throws ConfigurationError on invalid parameters.
    void validate() const;

    /// Number of labels for finite-valued environments, 0 otherwise.
    std::size_t label_count() const;

    static EnvironmentSpec iid_normal(double mean, double sd, std::size_t dim = 1);
    static EnvironmentSpec iid_uniform(double lower, double upper, std::size_t dim = 1);
    static EnvironmentSpec iid_lognormal(double log_mean, double log_sd, std::size_t dim = 1);
    static EnvironmentSpec iid_categorical(std::vector<double> probabilities);
    static EnvironmentSpec gaussian_ar1(double phi, double sigma, double mean = 0.0, std::size_t dim = 1);
    static EnvironmentSpec finite_markov(Matrix transition, std::optional<std::size_t> initial = std::nullopt);
    static EnvironmentSpec deterministic_cycle(std::vector<Point> values);
    static EnvironmentSpec constant(Point value);
};

/// Finite-state description of a finite-valued stationary environment:
/// values per state, transition matrix and stationary law.
struct FiniteEnvironmentChain {
    std::vector<Point> values;
    Matrix transition;
    Eigen::RowVectorXd stationary;
};

/// Available for finite-markov, categorical iid and deterministic-cycle specs.
std::optional<FiniteEnvironmentChain> finite_chain(const EnvironmentSpec& spec);

/// Stationary law of a row-stochastic matrix reached from `start`
/// (power iteration on the lazy chain (I + T) / 2).
Eigen::RowVectorXd stationary_distribution(const Matrix& transition, const Eigen::RowVectorXd& start);

/// Immutable window [t_min, t_max] of one realization of X.
///
/// Values at index t are a pure function of (spec, seed, t): two
/// realizations with equal spec and seed agree on their common window.
/// The past xi_t = (X_{t-j})_{j>=0} of a time t is the sub-window ending at t.
class EnvironmentRealization {
public:
    EnvironmentRealization() = default;

    const EnvironmentSpec& spec() const { return *spec_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t t_min() const { return t_min_; }
    std::int64_t t_max() const { return t_min_ + static_cast<std::int64_t>(size()) - 1; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : values_->size() / dim_ - offset_ - trim_; }
    bool contains(std::int64_t t) const { return t >= t_min() && t <= t_max(); }

    /// Value X_t; throws RangeError outside the window.
    PointView at(std::int64_t t) const;
    PointView operator[](std::int64_t t) const { return at(t); }

    /// Identifier of (spec kind, seed, window, derivation) for provenance.
    const std::string& id() const { return id_; }

private:
    friend EnvironmentRealization realize(const EnvironmentSpec&, std::uint64_t, std::int64_t, std::int64_t);
    friend EnvironmentRealization shift(const EnvironmentRealization&, std::int64_t);
    friend EnvironmentRealization restrict_window(const EnvironmentRealization&, std::int64_t, std::int64_t);
    friend EnvironmentRealization block(const EnvironmentRealization&, std::size_t);
    friend EnvironmentRealization decimate(const EnvironmentRealization&, std::size_t);

    std::shared_ptr<const EnvironmentSpec> spec_;
    std::shared_ptr<const std::vector<double>> values_;
    std::uint64_t seed_ = 0;
    std::int64_t t_min_ = 0;
    std::size_t dim_ = 0;
    std::size_t offset_ = 0;  // leading points of values_ outside the window
    std::size_t trim_ = 0;    // trailing points of values_ outside the window
    std::string id_;
};

/// Stationary realization of X on [t_min, t_max].
EnvironmentRealization realize(const EnvironmentSpec& spec, std::uint64_t seed, std::int64_t t_min,
                               std::int64_t t_max);

/// Re-indexed view: shift(r, k)[t] == r[t + k]. Shares storage.
EnvironmentRealization shift(const EnvironmentRealization& r, std::int64_t k);

/// shift(r, k) restricted to [t_min, t_max]; RangeError if the shifted
/// window does not cover it.
EnvironmentRealization shift(const EnvironmentRealization& r, std::int64_t k, std::int64_t t_min,
                             std::int64_t t_max);

/// Sub-window; RangeError when it is not inside the realized window.
EnvironmentRealization restrict_window(const EnvironmentRealization& r, std::int64_t t_min, std::int64_t t_max);

/// Overlapping p-tuples U_t = (X_t, X_{t-1}, ..., X_{t-p+1}), newest first.
/// The blocked window is [t_min + p - 1, t_max].
EnvironmentRealization block(const EnvironmentRealization& r, std::size_t p);

/// Every `stride`-th value: decimate(r, s)[i] == r[i * s].
EnvironmentRealization decimate(const EnvironmentRealization& r, std::size_t stride);

/// Environment of the k-step skeleton Y'_i = Y_{ik}: entry i is the tuple
/// (X_{(i+1)k-1}, ..., X_{ik}), newest first, that drives Y_{ik} to
/// Y_{(i+1)k}.
EnvironmentRealization skeleton_environment(const EnvironmentRealization& r, std::size_t k);

/// n^{-1} sum_{i=1}^{n} f(X_{-i}). NumericError names the first index with a
/// non-finite f value; RangeError when the window misses [-n, -1].
double birkhoff_average(const EnvironmentRealization& r, const ScalarFn& f, std::size_t n);

}  // namespace mcre
