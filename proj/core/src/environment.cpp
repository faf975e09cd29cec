#include "mcre/environment.hpp"

#include "mcre/error.hpp"
#include "mcre/rng.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace mcre {
namespace {

constexpr const char* kModule = "environment";

const char* kind_name(EnvironmentKind k) {
    switch (k) {
        case EnvironmentKind::kIid: return "iid";
        case EnvironmentKind::kGaussianAr1: return "gaussian-ar1";
        case EnvironmentKind::kFiniteMarkov: return "finite-markov";
        case EnvironmentKind::kDeterministicCycle: return "deterministic-cycle";
    }
    return "?";
}

void check_stochastic(const Matrix& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw ConfigurationError(kModule, std::string(what) + " must be a non-empty square matrix");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!(m(i, j) >= 0.0)) throw ConfigurationError(kModule, std::string(what) + " has a negative entry");
            s += m(i, j);
        }
        if (std::abs(s - 1.0) > 1e-12) {
            std::ostringstream os;
            os << what << " row " << i << " sums to " << s << ", not 1";
            throw ConfigurationError(kModule, os.str());
        }
    }
}

std::size_t sample_row(const Matrix& m, Eigen::Index row, double u) {
    double c = 0.0;
    const Eigen::Index n = m.cols();
    for (Eigen::Index j = 0; j < n; ++j) {
        c += m(row, j);
        if (u < c) return static_cast<std::size_t>(j);
    }
    // u lands in the rounding gap above the last cumulative sum
    for (Eigen::Index j = n - 1; j >= 0; --j)
        if (m(row, j) > 0.0) return static_cast<std::size_t>(j);
    return 0;
}

std::size_t sample_probabilities(const std::vector<double>& p, double u) {
    double c = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        c += p[j];
        if (u < c) return j;
    }
    for (std::size_t j = p.size(); j-- > 0;)
        if (p[j] > 0.0) return j;
    return 0;
}

std::string make_id(const EnvironmentSpec& spec, std::uint64_t seed, std::int64_t lo, std::int64_t hi,
                    const std::string& derivation) {
    std::ostringstream os;
    os << kind_name(spec.kind) << ":seed=" << seed << ":[" << lo << "," << hi << "]" << derivation;
    return os.str();
}

}  // namespace

void EnvironmentSpec::validate() const {
    if (state_dim == 0) throw ConfigurationError(kModule, "state_dim must be positive");
    switch (kind) {
        case EnvironmentKind::kIid:
            switch (distribution) {
                case IidDistribution::kNormal:
                case IidDistribution::kLogNormal:
                    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(location))
                        throw ConfigurationError(kModule, "iid scale must be positive and finite");
                    break;
                case IidDistribution::kUniform:
                    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
                        throw ConfigurationError(kModule, "iid uniform needs lower < upper");
                    break;
                case IidDistribution::kCategorical: {
                    if (probabilities.empty()) throw ConfigurationError(kModule, "categorical needs probabilities");
                    double s = 0.0;
                    for (double p : probabilities) {
                        if (!(p >= 0.0)) throw ConfigurationError(kModule, "categorical probability is negative");
                        s += p;
                    }
                    if (std::abs(s - 1.0) > 1e-12) throw ConfigurationError(kModule, "categorical probabilities must sum to 1");
                    if (state_dim != 1) throw ConfigurationError(kModule, "categorical environments have state_dim 1");
                    break;
                }
            }
            break;
        case EnvironmentKind::kGaussianAr1:
            if (!(std::abs(phi) < 1.0))
                throw ConfigurationError(kModule, "gaussian-ar1 coefficient must satisfy |phi| < 1");
            if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mean))
                throw ConfigurationError(kModule, "gaussian-ar1 sigma must be positive and finite");
            break;
        case EnvironmentKind::kFiniteMarkov:
            check_stochastic(transition, "finite-markov transition");
            if (state_dim != 1) throw ConfigurationError(kModule, "finite-markov environments have state_dim 1");
            if (initial_label && *initial_label >= static_cast<std::size_t>(transition.rows()))
                throw ConfigurationError(kModule, "finite-markov initial label out of range");
            break;
        case EnvironmentKind::kDeterministicCycle:
            if (cycle.empty()) throw ConfigurationError(kModule, "deterministic-cycle needs at least one value");
            for (const auto& v : cycle)
                if (v.size() != state_dim)
                    throw ConfigurationError(kModule, "deterministic-cycle value has wrong dimension");
            break;
    }
}

std::size_t EnvironmentSpec::label_count() const {
    if (kind == EnvironmentKind::kFiniteMarkov) return static_cast<std::size_t>(transition.rows());
    if (kind == EnvironmentKind::kIid && distribution == IidDistribution::kCategorical) return probabilities.size();
    return 0;
}

EnvironmentSpec EnvironmentSpec::iid_normal(double mean, double sd, std::size_t dim) {
    EnvironmentSpec s;
    s.kind = EnvironmentKind::kIid;
    s.distribution = IidDistribution::kNormal;
    s.location = mean;
    s.scale = sd;
    s.state_dim = dim;
    return s;
}

EnvironmentSpec EnvironmentSpec::iid_uniform(double lower, double upper, std::size_t dim) {
    EnvironmentSpec s;
    s.distribution = IidDistribution::kUniform;
    s.lower = lower;
    s.upper = upper;
    s.state_dim = dim;
    return s;
}

EnvironmentSpec EnvironmentSpec::iid_lognormal(double log_mean, double log_sd, std::size_t dim) {
    EnvironmentSpec s = iid_normal(log_mean, log_sd, dim);
    s.distribution = IidDistribution::kLogNormal;
    return s;
}

EnvironmentSpec EnvironmentSpec::iid_categorical(std::vector<double> probabilities) {
    EnvironmentSpec s;
    s.distribution = IidDistribution::kCategorical;
    s.probabilities = std::move(probabilities);
    return s;
}

EnvironmentSpec EnvironmentSpec::gaussian_ar1(double phi, double sigma, double mean, std::size_t dim) {
    EnvironmentSpec s;
    s.kind = EnvironmentKind::kGaussianAr1;
    s.phi = phi;
    s.sigma = sigma;
    s.mean = mean;
    s.state_dim = dim;
    return s;
}

EnvironmentSpec EnvironmentSpec::finite_markov(Matrix transition, std::optional<std::size_t> initial) {
    EnvironmentSpec s;
    s.kind = EnvironmentKind::kFiniteMarkov;
    s.transition = std::move(transition);
    s.initial_label = initial;
    return s;
}

EnvironmentSpec EnvironmentSpec::deterministic_cycle(std::vector<Point> values) {
    EnvironmentSpec s;
    s.kind = EnvironmentKind::kDeterministicCycle;
    s.state_dim = values.empty() ? 1 : values.front().size();
    s.cycle = std::move(values);
    return s;
}

EnvironmentSpec EnvironmentSpec::constant(Point value) {
    return deterministic_cycle({std::move(value)});
}

Eigen::RowVectorXd stationary_distribution(const Matrix& transition, const Eigen::RowVectorXd& start) {
    const Matrix lazy = 0.5 * (Matrix::Identity(transition.rows(), transition.cols()) + transition);
    Eigen::RowVectorXd p = start / start.sum();
    for (int it = 0; it < 1'000'000; ++it) {
        Eigen::RowVectorXd next = p * lazy;
        const double change = (next - p).cwiseAbs().sum();
        p = next;
        if (change < 1e-15) break;
    }
    return p / p.sum();
}

std::optional<FiniteEnvironmentChain> finite_chain(const EnvironmentSpec& spec) {
    spec.validate();
    FiniteEnvironmentChain c;
    if (spec.kind == EnvironmentKind::kFiniteMarkov) {
        const auto n = spec.transition.rows();
        c.transition = spec.transition;
        Eigen::RowVectorXd start = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
        if (spec.initial_label) {
            start.setZero();
            start(static_cast<Eigen::Index>(*spec.initial_label)) = 1.0;
        }
        c.stationary = stationary_distribution(c.transition, start);
        for (Eigen::Index i = 0; i < n; ++i) c.values.push_back({static_cast<double>(i)});
        return c;
    }
    if (spec.kind == EnvironmentKind::kIid && spec.distribution == IidDistribution::kCategorical) {
        const auto n = static_cast<Eigen::Index>(spec.probabilities.size());
        c.stationary = Eigen::Map<const Eigen::RowVectorXd>(spec.probabilities.data(), n);
        c.transition = Matrix(n, n);
        for (Eigen::Index i = 0; i < n; ++i) c.transition.row(i) = c.stationary;
        for (Eigen::Index i = 0; i < n; ++i) c.values.push_back({static_cast<double>(i)});
        return c;
    }
    if (spec.kind == EnvironmentKind::kDeterministicCycle) {
        const auto n = static_cast<Eigen::Index>(spec.cycle.size());
        c.values = spec.cycle;
        c.transition = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) c.transition(i, (i + 1) % n) = 1.0;
        c.stationary = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
        return c;
    }
    return std::nullopt;
}

PointView EnvironmentRealization::at(std::int64_t t) const {
    if (!values_ || !contains(t)) {
        std::ostringstream os;
        os << "index " << t << " outside realized window [" << t_min() << ", " << t_max() << "]";
        throw RangeError(kModule, os.str());
    }
    const std::size_t pos = offset_ + static_cast<std::size_t>(t - t_min_);
    return PointView(values_->data() + pos * dim_, dim_);
}

EnvironmentRealization realize(const EnvironmentSpec& spec, std::uint64_t seed, std::int64_t t_min,
                               std::int64_t t_max) {
    spec.validate();
    if (t_min > t_max) throw ArgumentError(kModule, "realize: t_min > t_max");
    const std::size_t d = spec.state_dim;
    const std::size_t len = static_cast<std::size_t>(t_max - t_min + 1);
    auto values = std::make_shared<std::vector<double>>(len * d);
    auto slot = [&](std::int64_t t) { return values->data() + static_cast<std::size_t>(t - t_min) * d; };
    const Stream root(seed);

    switch (spec.kind) {
        case EnvironmentKind::kIid: {
            for (std::int64_t t = t_min; t <= t_max; ++t) {
                Stream s = root.split_signed(t);
                double* out = slot(t);
                for (std::size_t k = 0; k < d; ++k) {
                    switch (spec.distribution) {
                        case IidDistribution::kNormal: out[k] = spec.location + spec.scale * s.normal(); break;
                        case IidDistribution::kLogNormal:
                            out[k] = std::exp(spec.location + spec.scale * s.normal());
                            break;
                        case IidDistribution::kUniform:
                            out[k] = spec.lower + (spec.upper - spec.lower) * s.uniform();
                            break;
                        case IidDistribution::kCategorical:
                            out[k] = static_cast<double>(sample_probabilities(spec.probabilities, s.uniform()));
                            break;
                    }
                }
            }
            break;
        }
        case EnvironmentKind::kGaussianAr1: {
            // Anchored at t = 0 with the exact stationary marginal; the
            // chain is reversible, so the past is generated by the same
            // recursion run backwards with its own innovations.
            const Stream anchor = root.split(3), fwd = root.split(1), bwd = root.split(2);
            const double sd0 = spec.sigma / std::sqrt(1.0 - spec.phi * spec.phi);
            for (std::size_t k = 0; k < d; ++k) {
                Stream a = anchor.split(k);
                const double x0 = spec.mean + sd0 * a.normal();
                double x = x0;
                if (t_min <= 0 && 0 <= t_max) slot(0)[k] = x0;
                for (std::int64_t t = 1; t <= t_max; ++t) {
                    Stream s = fwd.split_signed(t).split(k);
                    x = spec.mean + spec.phi * (x - spec.mean) + spec.sigma * s.normal();
                    if (t >= t_min) slot(t)[k] = x;
                }
                x = x0;
                for (std::int64_t t = -1; t >= t_min; --t) {
                    Stream s = bwd.split_signed(t).split(k);
                    x = spec.mean + spec.phi * (x - spec.mean) + spec.sigma * s.normal();
                    if (t <= t_max) slot(t)[k] = x;
                }
            }
            break;
        }
        case EnvironmentKind::kFiniteMarkov: {
            const auto chain = *finite_chain(spec);
            const Matrix& T = chain.transition;
            const Eigen::RowVectorXd& pi = chain.stationary;
            const auto n = T.rows();
            Matrix reversed(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    reversed(i, j) = pi(i) > 0.0 ? pi(j) * T(j, i) / pi(i) : pi(j);
            for (Eigen::Index i = 0; i < n; ++i) reversed.row(i) /= reversed.row(i).sum();

            std::size_t x0;
            if (spec.initial_label) {
                x0 = *spec.initial_label;
            } else {
                Stream a = root.split(3);
                std::vector<double> p(pi.data(), pi.data() + n);
                x0 = sample_probabilities(p, a.uniform());
            }
            if (t_min <= 0 && 0 <= t_max) slot(0)[0] = static_cast<double>(x0);
            std::size_t x = x0;
            for (std::int64_t t = 1; t <= t_max; ++t) {
                Stream s = root.split(1).split_signed(t);
                x = sample_row(T, static_cast<Eigen::Index>(x), s.uniform());
                if (t >= t_min) slot(t)[0] = static_cast<double>(x);
            }
            x = x0;
            for (std::int64_t t = -1; t >= t_min; --t) {
                Stream s = root.split(2).split_signed(t);
                x = sample_row(reversed, static_cast<Eigen::Index>(x), s.uniform());
                if (t <= t_max) slot(t)[0] = static_cast<double>(x);
            }
            break;
        }
        case EnvironmentKind::kDeterministicCycle: {
            const auto L = static_cast<std::int64_t>(spec.cycle.size());
            std::int64_t phase = 0;
            if (spec.random_phase) {
                Stream a = root.split(3);
                phase = static_cast<std::int64_t>(a() % static_cast<std::uint64_t>(L));
            }
            for (std::int64_t t = t_min; t <= t_max; ++t) {
                const auto idx = static_cast<std::size_t>((((t + phase) % L) + L) % L);
                std::copy(spec.cycle[idx].begin(), spec.cycle[idx].end(), slot(t));
            }
            break;
        }
    }

    EnvironmentRealization r;
    r.spec_ = std::make_shared<const EnvironmentSpec>(spec);
    r.values_ = std::move(values);
    r.seed_ = seed;
    r.t_min_ = t_min;
    r.dim_ = d;
    r.id_ = make_id(spec, seed, t_min, t_max, "");
    return r;
}

EnvironmentRealization shift(const EnvironmentRealization& r, std::int64_t k) {
    EnvironmentRealization out = r;
    out.t_min_ = r.t_min_ - k;
    out.id_ = r.id_ + ":shift=" + std::to_string(k);
    return out;
}

EnvironmentRealization restrict_window(const EnvironmentRealization& r, std::int64_t t_min, std::int64_t t_max) {
    if (t_min > t_max || !r.contains(t_min) || !r.contains(t_max)) {
        std::ostringstream os;
        os << "window [" << t_min << ", " << t_max << "] is not inside [" << r.t_min() << ", " << r.t_max() << "]";
        throw RangeError(kModule, os.str());
    }
    EnvironmentRealization out = r;
    out.offset_ = r.offset_ + static_cast<std::size_t>(t_min - r.t_min());
    out.trim_ = r.trim_ + static_cast<std::size_t>(r.t_max() - t_max);
    out.t_min_ = t_min;
    return out;
}

EnvironmentRealization shift(const EnvironmentRealization& r, std::int64_t k, std::int64_t t_min,
                             std::int64_t t_max) {
    return restrict_window(shift(r, k), t_min, t_max);
}

EnvironmentRealization block(const EnvironmentRealization& r, std::size_t p) {
    if (p < 1) throw ArgumentError(kModule, "block: p must be >= 1");
    if (r.size() < p) throw RangeError(kModule, "block: window shorter than the block length");
    const std::int64_t lo = r.t_min() + static_cast<std::int64_t>(p) - 1;
    const std::int64_t hi = r.t_max();
    const std::size_t d = r.dim();
    auto values = std::make_shared<std::vector<double>>();
    values->reserve(static_cast<std::size_t>(hi - lo + 1) * d * p);
    for (std::int64_t t = lo; t <= hi; ++t)
        for (std::size_t j = 0; j < p; ++j) {
            const auto v = r.at(t - static_cast<std::int64_t>(j));
            values->insert(values->end(), v.begin(), v.end());
        }
    EnvironmentRealization out;
    out.spec_ = r.spec_;
    out.values_ = std::move(values);
    out.seed_ = r.seed_;
    out.t_min_ = lo;
    out.dim_ = d * p;
    out.id_ = r.id_ + ":block=" + std::to_string(p);
    return out;
}

EnvironmentRealization decimate(const EnvironmentRealization& r, std::size_t stride) {
    if (stride < 1) throw ArgumentError(kModule, "decimate: stride must be >= 1");
    const auto s = static_cast<std::int64_t>(stride);
    auto floor_div = [](std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); };
    const std::int64_t lo = -floor_div(-r.t_min(), s);
    const std::int64_t hi = floor_div(r.t_max(), s);
    if (lo > hi) throw RangeError(kModule, "decimate: window contains no multiple of the stride");
    const std::size_t d = r.dim();
    auto values = std::make_shared<std::vector<double>>();
    values->reserve(static_cast<std::size_t>(hi - lo + 1) * d);
    for (std::int64_t i = lo; i <= hi; ++i) {
        const auto v = r.at(i * s);
        values->insert(values->end(), v.begin(), v.end());
    }
    EnvironmentRealization out;
    out.spec_ = r.spec_;
    out.values_ = std::move(values);
    out.seed_ = r.seed_;
    out.t_min_ = lo;
    out.dim_ = d;
    out.id_ = r.id_ + ":decimate=" + std::to_string(stride);
    return out;
}

EnvironmentRealization skeleton_environment(const EnvironmentRealization& r, std::size_t k) {
    if (k < 1) throw ArgumentError(kModule, "skeleton_environment: k must be >= 1");
    return decimate(shift(block(r, k), static_cast<std::int64_t>(k) - 1), k);
}

double birkhoff_average(const EnvironmentRealization& r, const ScalarFn& f, std::size_t n) {
    if (n < 1) throw ArgumentError(kModule, "birkhoff_average: n must be >= 1");
    const auto last = -static_cast<std::int64_t>(n);
    if (!r.contains(-1) || !r.contains(last)) throw RangeError(kModule, "birkhoff_average: window must cover [-n, -1]");
    double sum = 0.0;
    for (std::int64_t t = -1; t >= last; --t) {
        const double v = f(r.at(t));
        if (!std::isfinite(v))
            throw NumericError(kModule, "birkhoff_average: non-finite f value at index " + std::to_string(t));
        sum += v;
    }
    return sum / static_cast<double>(n);
}

}  // namespace mcre
