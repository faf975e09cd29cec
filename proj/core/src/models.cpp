#include "mcre/models.hpp"

#include "mcre/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace mcre::models {
namespace {

constexpr const char* kModule = "models";
constexpr double kEtaCap = 1.0 - 1e-12;

double l1_operator_norm(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

double factorial(std::size_t p) {
    double f = 1.0;
    for (std::size_t i = 2; i <= p; ++i) f *= static_cast<double>(i);
    return f;
}

double require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(kModule, std::string("non-finite ") + what);
    return v;
}

}  // namespace

NoiseSpec NoiseSpec::gaussian(double scale) { return {NoiseFamily::kGaussian, scale, 0.0}; }
NoiseSpec NoiseSpec::laplace(double scale) { return {NoiseFamily::kLaplace, scale, 0.0}; }
NoiseSpec NoiseSpec::student_t(double df, double scale) { return {NoiseFamily::kStudentT, scale, df}; }

void NoiseSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigurationError(kModule, "noise scale must be positive");
    if (family == NoiseFamily::kStudentT && !(df > 1.0))
        throw ConfigurationError(kModule, "student-t noise needs df > 1 for a finite mean absolute value");
}

double NoiseSpec::density(double e) const {
    const double z = e / scale;
    switch (family) {
        case NoiseFamily::kGaussian:
            return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
        case NoiseFamily::kLaplace:
            return std::exp(-std::abs(z)) / (2.0 * scale);
        case NoiseFamily::kStudentT: {
            const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi);
            return std::exp(c - 0.5 * (df + 1.0) * std::log1p(z * z / df)) / scale;
        }
    }
    return 0.0;
}

double NoiseSpec::cdf(double e) const {
    const double z = e / scale;
    switch (family) {
        case NoiseFamily::kGaussian:
            return 0.5 * std::erfc(-z / std::numbers::sqrt2);
        case NoiseFamily::kLaplace:
            return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        case NoiseFamily::kStudentT:
            return boost::math::cdf(boost::math::students_t_distribution<double>(df), z);
    }
    return 0.0;
}

double NoiseSpec::mean_abs() const {
    switch (family) {
        case NoiseFamily::kGaussian:
            return scale * std::sqrt(2.0 / std::numbers::pi);
        case NoiseFamily::kLaplace:
            return scale;
        case NoiseFamily::kStudentT:
            return scale * 2.0 * std::sqrt(df) *
                   std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
                   (std::sqrt(std::numbers::pi) * (df - 1.0));
    }
    return 0.0;
}

double NoiseSpec::sample(Stream& rng) const {
    switch (family) {
        case NoiseFamily::kGaussian:
            return scale * rng.normal();
        case NoiseFamily::kLaplace: {
            const double u = rng.uniform() - 0.5;
            return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
        }
        case NoiseFamily::kStudentT:
            return scale * std::student_t_distribution<double>(df)(rng);
    }
    return 0.0;
}

std::string NoiseSpec::name() const {
    switch (family) {
        case NoiseFamily::kGaussian: return "gaussian";
        case NoiseFamily::kLaplace: return "laplace";
        case NoiseFamily::kStudentT: return "student-t";
    }
    return "unknown";
}

// ---------------------------------------------------------------- TAR-X / RCA

ModelBundle make_tarx(TarxCoefficients c, NoiseSpec noise, EtaMode mode, double default_R) {
    noise.validate();
    if (!c.a1 || !c.b1 || !c.a2 || !c.b2 || !c.r) throw ConfigurationError(kModule, "TAR-X needs a1, b1, a2, b2 and r");
    auto s = [c](PointView x, double y) {
        const double v = y <= c.r(x) ? c.b1(x) + c.a1(x) * y : c.b2(x) + c.a2(x) * y;
        return require_finite(v, "TAR-X regression value");
    };
    SampleFn sample = [s, noise](PointView x, PointView y, Stream& rng, std::span<double> out) {
        out[0] = s(x, y[0]) + noise.sample(rng);
    };
    DensityFn density = [s, noise](PointView x, PointView y, PointView y_next) {
        return noise.density(y_next[0] - s(x, y[0]));
    };
    KernelFamily kernel(StateSpace::real(1), std::move(sample), std::move(density));

    DriftSpec drift;
    drift.V = [](PointView y) { return std::abs(y[0]); };
    drift.lambda = [c](PointView x) { return std::max(std::abs(c.a1(x)), std::abs(c.a2(x))); };
    const double mean_abs = noise.mean_abs();
    drift.b = [c, mean_abs](PointView x) { return std::abs(c.b1(x)) + std::abs(c.b2(x)) + mean_abs; };

    MinorizationSpec m;
    m.eta = [c, noise, mode](double R, PointView x) {
        const double J = R + std::max(std::abs(c.b1(x)), std::abs(c.b2(x))) +
                         std::max(std::abs(c.a1(x)), std::abs(c.a2(x))) * R;
        const double floor = noise.floor(J);
        return std::min(mode == EtaMode::kTight ? 2.0 * R * floor : floor, kEtaCap);
    };
    m.nu_sample = [](double R, PointView, Stream& rng, std::span<double> out) { out[0] = R * (2.0 * rng.uniform() - 1.0); };
    m.nu_density = [](double R, PointView, PointView y) { return std::abs(y[0]) <= R ? 0.5 / R : 0.0; };

    return ModelBundle{.name = "tarx",
                       .kernel = std::move(kernel),
                       .drift = std::move(drift),
                       .minorization = std::move(m),
                       .default_R = default_R,
                       .block = 1,
                       .one_step = std::nullopt,
                       .companion = std::nullopt,
                       .notes = {}};
}

ModelBundle make_rca(ScalarFn a, NoiseSpec noise, EtaMode mode, double default_R) {
    ScalarFn zero = [](PointView) { return 0.0; };
    auto bundle = make_tarx({a, zero, a, zero, zero}, noise, mode, default_R);
    bundle.name = "rca";
    return bundle;
}

// ---------------------------------------------------------------- FAR-X

Matrix companion_matrix(const std::vector<double>& b) {
    const auto p = static_cast<Eigen::Index>(b.size());
    Matrix A = Matrix::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) A(0, j) = b[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < p; ++i) A(i, i - 1) = 1.0;
    return A;
}

namespace {

double farx_regression(const std::vector<FarxCoefficient>& a, PointView x, PointView lags) {
    double g = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) g += a[j](x, lags) * lags[j];
    return require_finite(g, "FAR-X regression value");
}

/// sup over the lag grid of |a_j(x, lags)|.
double numerical_envelope(const FarxCoefficient& aj, PointView x, std::size_t p, double box, std::size_t points) {
    std::vector<std::size_t> idx(p, 0);
    Point lags(p);
    double sup = 0.0;
    const double h = points > 1 ? 2.0 * box / static_cast<double>(points - 1) : 0.0;
    for (;;) {
        for (std::size_t d = 0; d < p; ++d) lags[d] = points > 1 ? -box + h * static_cast<double>(idx[d]) : 0.0;
        const double v = std::abs(aj(x, lags));
        if (!std::isfinite(v)) throw ConfigurationError(kModule, "FAR-X coefficient is not finite on the lag box");
        sup = std::max(sup, v);
        std::size_t d = 0;
        while (d < p && ++idx[d] == points) idx[d++] = 0;
        if (d == p) break;
    }
    return sup;
}

}  // namespace

ModelBundle make_farx(std::vector<FarxCoefficient> a, NoiseSpec noise, FarxOptions options) {
    noise.validate();
    const std::size_t p = a.size();
    if (p == 0) throw ConfigurationError(kModule, "FAR-X needs at least one coefficient");
    const std::size_t k = options.block == 0 ? p : options.block;
    if (k % p != 0) throw ConfigurationError(kModule, "FAR-X block length must be a positive multiple of p");
    if (!options.envelopes.empty() && options.envelopes.size() != p)
        throw ConfigurationError(kModule, "FAR-X needs one envelope per coefficient");
    if (options.envelopes.empty() && (options.grid_points == 0 || !(options.lag_box > 0.0)))
        throw ConfigurationError(kModule, "FAR-X numerical envelope needs a positive lag box and grid");

    std::vector<std::string> notes;
    std::function<std::vector<double>(PointView)> envelopes;
    if (!options.envelopes.empty()) {
        envelopes = [env = options.envelopes](PointView x) {
            std::vector<double> b(env.size());
            for (std::size_t j = 0; j < env.size(); ++j) {
                b[j] = env[j](x);
                if (!std::isfinite(b[j]) || b[j] < 0.0)
                    throw ConfigurationError(kModule, "FAR-X envelope b_" + std::to_string(j + 1) + " is not a finite nonnegative value");
            }
            return b;
        };
    } else {
        const double box = options.lag_box;
        const std::size_t points = options.grid_points;
        envelopes = [a, p, box, points](PointView x) {
            std::vector<double> b(p);
            for (std::size_t j = 0; j < p; ++j) b[j] = numerical_envelope(a[j], x, p, box, points);
            return b;
        };
        std::ostringstream os;
        os << "envelopes b_j computed numerically on the lag box [-" << box << ", " << box << "]^" << p << " with "
           << points << " points per axis";
        notes.push_back(os.str());
    }
    MatrixFn companion = [envelopes](PointView x) { return companion_matrix(envelopes(x)); };

    // One-step companion kernel on R^p.
    SampleFn step = [a, noise, p](PointView x, PointView y, Stream& rng, std::span<double> out) {
        const double g = farx_regression(a, x, y);
        for (std::size_t j = p - 1; j > 0; --j) out[j] = y[j - 1];
        out[0] = g + noise.sample(rng);
    };
    KernelFamily one_step(StateSpace::real(p), step);

    // k-step skeleton kernel indexed by k-tuples, newest first.
    SampleFn skeleton = [step, p, k](PointView tuple, PointView y, Stream& rng, std::span<double> out) {
        const std::size_t d = tuple.size() / k;
        Point cur(y.begin(), y.end()), next(p);
        for (std::size_t i = k; i-- > 0;) {
            step(tuple.subspan(i * d, d), cur, rng, next);
            std::swap(cur, next);
        }
        std::copy(cur.begin(), cur.end(), out.begin());
    };
    std::optional<DensityFn> density;
    if (k == p) {
        density = [a, noise, p](PointView tuple, PointView y, PointView v) {
            const std::size_t d = tuple.size() / p;
            // Oldest-first history: y_p, ..., y_1, then the new values w_1, ..., w_p.
            std::vector<double> hist(2 * p);
            for (std::size_t j = 0; j < p; ++j) hist[j] = y[p - 1 - j];
            for (std::size_t i = 0; i < p; ++i) hist[p + i] = v[p - 1 - i];
            double dens = 1.0;
            Point lags(p);
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = 0; j < p; ++j) lags[j] = hist[p + i - 1 - j];
                const PointView x = tuple.subspan((p - 1 - i) * d, d);
                dens *= noise.density(hist[p + i] - farx_regression(a, x, lags));
            }
            return dens;
        };
    }
    KernelFamily kernel(StateSpace::real(p), skeleton, density);

    DriftSpec drift;
    drift.p = k;
    drift.V = [](PointView y) {
        double s = 0.0;
        for (double v : y) s += std::abs(v);
        return s;
    };
    drift.lambda = [companion, k](PointView tuple) {
        const std::size_t d = tuple.size() / k;
        Matrix prod = companion(tuple.subspan(0, d));
        for (std::size_t i = 1; i < k; ++i) prod = prod * companion(tuple.subspan(i * d, d));
        return l1_operator_norm(prod);
    };
    const double mean_abs = noise.mean_abs();
    drift.b = [companion, k, mean_abs](PointView tuple) {
        const std::size_t d = tuple.size() / k;
        double total = 1.0, running = 1.0;
        for (std::size_t j = 2; j <= k; ++j) {
            running *= l1_operator_norm(companion(tuple.subspan((j - 2) * d, d)));
            total += running;
        }
        return mean_abs * total;
    };

    MinorizationSpec m;
    m.p = k;
    const double chain_factor = 1.0 / factorial(p);
    m.eta = [envelopes, noise, p, k, chain_factor](double R, PointView tuple) {
        const std::size_t d = tuple.size() / k;
        double log_eta = static_cast<double>(k) * std::log(2.0 * R) +
                         static_cast<double>(k / p - 1) * std::log(chain_factor);
        for (std::size_t i = 0; i < k; ++i) {
            double sum_b = 0.0;
            for (double b : envelopes(tuple.subspan(i * d, d))) sum_b += b;
            log_eta += std::log(noise.floor(R * (1.0 + sum_b)));
        }
        return std::min(std::exp(log_eta), kEtaCap);
    };
    m.nu_sample = [p](double R, PointView, Stream& rng, std::span<double> out) {
        for (std::size_t j = 0; j < p; ++j) out[j] = R * (2.0 * rng.uniform() - 1.0);
    };
    m.nu_density = [p](double R, PointView, PointView y) {
        for (double v : y)
            if (std::abs(v) > R) return 0.0;
        return std::pow(2.0 * R, -static_cast<double>(p));
    };

    return ModelBundle{.name = "farx",
                       .kernel = std::move(kernel),
                       .drift = std::move(drift),
                       .minorization = std::move(m),
                       .default_R = options.default_R,
                       .block = k,
                       .one_step = std::move(one_step),
                       .companion = std::move(companion),
                       .notes = std::move(notes)};
}

std::vector<double> farx_simulate_scalar(const std::vector<FarxCoefficient>& a, const NoiseSpec& noise,
                                         const EnvironmentRealization& env, std::int64_t t0, std::size_t steps,
                                         std::vector<double> history, Stream& rng) {
    const std::size_t p = a.size();
    if (history.size() != p) throw ArgumentError(kModule, "farx_simulate_scalar: history must hold p values");
    std::vector<double> out;
    out.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        const PointView x = env.at(t0 + static_cast<std::int64_t>(s) - 1);
        double y = 0.0;
        for (std::size_t j = 0; j < p; ++j) y += a[j](x, history) * history[j];
        y += noise.sample(rng);
        history.insert(history.begin(), y);
        history.pop_back();
        out.push_back(y);
    }
    return out;
}

double farx2_grid_eta(const std::vector<FarxCoefficient>& a, const NoiseSpec& noise, double R, PointView x1,
                      PointView x2, std::size_t points) {
    if (a.size() != 2) throw ArgumentError(kModule, "farx2_grid_eta needs p = 2");
    if (points < 2) throw ArgumentError(kModule, "farx2_grid_eta needs at least 2 points per axis");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = -R + 2.0 * R * static_cast<double>(i) / static_cast<double>(points - 1);
    double inf = std::numeric_limits<double>::infinity();
    for (double y1 : grid)
        for (double y2 : grid) {
            const double lag1[2] = {y1, y2};
            const double g1 = farx_regression(a, x1, lag1);
            for (double v1 : grid) {
                const double f1 = noise.density(v1 - g1);
                const double lag2[2] = {v1, y1};
                const double g2 = farx_regression(a, x2, lag2);
                for (double v2 : grid) inf = std::min(inf, f1 * noise.density(v2 - g2));
            }
        }
    return 4.0 * R * R * inf;
}

// ---------------------------------------------------------------- finite

ModelBundle make_finite(std::vector<Matrix> by_label, FiniteOptions options) {
    KernelFamily kernel = KernelFamily::finite(by_label);
    const std::size_t n = kernel.state_space().dim;
    std::vector<double> V = options.V.empty() ? std::vector<double>(n, 1.0) : options.V;
    if (V.size() != n) throw ConfigurationError(kModule, "finite model: V needs one value per state");
    for (double v : V)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigurationError(kModule, "finite model: V must be positive");
    const Eigen::Map<const Eigen::VectorXd> Vvec(V.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd Vcopy = Vvec;

    DriftSpec drift;
    drift.V = [V](PointView y) { return V.at(label_of(y)); };
    drift.lambda = [](PointView) { return 0.5; };
    drift.b = [kernel, Vcopy](PointView x) {
        const Eigen::VectorXd PV = kernel.matrix(x) * Vcopy;
        return std::max(1e-12, (PV - 0.5 * Vcopy).maxCoeff());
    };

    // Column minima over the rows of the small set {V <= R}.
    auto minima = [kernel, V](double R, PointView x) {
        const Matrix P = kernel.matrix(x);
        Eigen::RowVectorXd mins = Eigen::RowVectorXd::Constant(P.cols(), std::numeric_limits<double>::infinity());
        bool any = false;
        for (Eigen::Index i = 0; i < P.rows(); ++i)
            if (V[static_cast<std::size_t>(i)] <= R) {
                mins = mins.cwiseMin(P.row(i));
                any = true;
            }
        if (!any) mins.setZero();
        return mins;
    };
    auto nu_of = [minima](double R, PointView x) {
        Eigen::RowVectorXd mins = minima(R, x);
        const double eta = mins.sum();
        if (eta > 0.0) return Eigen::RowVectorXd(mins / eta);
        return Eigen::RowVectorXd(Eigen::RowVectorXd::Constant(mins.size(), 1.0 / static_cast<double>(mins.size())));
    };

    MinorizationSpec m;
    m.reference = "counting";
    m.eta = [minima](double R, PointView x) { return std::min(1.0, minima(R, x).sum()); };
    m.nu_sample = [nu_of](double R, PointView x, Stream& rng, std::span<double> out) {
        const Eigen::RowVectorXd nu = nu_of(R, x);
        const double u = rng.uniform();
        double c = 0.0;
        Eigen::Index j = 0;
        for (; j < nu.size() - 1; ++j) {
            c += nu(j);
            if (u < c) break;
        }
        out[0] = static_cast<double>(j);
    };
    m.nu_density = [nu_of](double R, PointView x, PointView y) {
        const auto j = static_cast<Eigen::Index>(label_of(y));
        const Eigen::RowVectorXd nu = nu_of(R, x);
        return j < nu.size() ? nu(j) : 0.0;
    };

    const double default_R = *std::max_element(V.begin(), V.end());
    return ModelBundle{.name = "finite",
                       .kernel = std::move(kernel),
                       .drift = std::move(drift),
                       .minorization = std::move(m),
                       .default_R = default_R,
                       .block = 1,
                       .one_step = std::nullopt,
                       .companion = std::nullopt,
                       .notes = {}};
}

}  // namespace mcre::models
