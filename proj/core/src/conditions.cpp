#include "mcre/conditions.hpp"

#include "mcre/error.hpp"
#include "mcre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mcre {
namespace {

constexpr const char* kModule = "conditions";

/// Geometric means of the leading n/4, n/2 and n log values.
std::vector<std::pair<std::size_t, double>> dyadic_trajectory(const std::vector<double>& logs) {
    std::vector<std::pair<std::size_t, double>> out;
    const std::size_t n = logs.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + logs[i];
    std::vector<std::size_t> sizes;
    for (std::size_t m = 1; m < n; m *= 2) sizes.push_back(m);
    sizes.push_back(n);
    for (std::size_t m : sizes) out.emplace_back(m, std::exp(prefix[m] / static_cast<double>(m)));
    return out;
}

double spread_at(const std::vector<double>& logs, bool exponentiate) {
    const std::size_t n = logs.size();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t m : {std::max<std::size_t>(1, n / 4), std::max<std::size_t>(1, n / 2), n}) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += logs[i];
        const double v = exponentiate ? std::exp(s / static_cast<double>(m)) : s / static_cast<double>(m);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

double mean_log_se(const std::vector<double>& logs) {
    if (logs.size() >= 200) return stats::batch_means(logs).se;
    return stats::mean_se(logs).se;
}

}  // namespace

void ConditionReport::decide() {
    if (direction == "<")
        pass = estimate + halfwidth < threshold;
    else
        pass = estimate - halfwidth <= threshold;
}

ConditionReport drift_check(const KernelFamily& k, const DriftSpec& d, const std::vector<DriftPoint>& points,
                            std::size_t n_mc, Stream rng, Parallelism par) {
    if (d.p < 1) throw ArgumentError(kModule, "drift_check: p must be >= 1");
    const bool exact = k.has_matrix();
    if (!exact && n_mc < 1000) throw ArgumentError(kModule, "drift_check: Monte Carlo mode needs n_mc >= 1000");

    std::vector<Diagnostic> details(points.size());
    parallel_for(points.size(), par, [&](std::size_t i) {
        const DriftPoint& pt = points[i];
        if (pt.x_tuple.empty() || pt.x_tuple.size() % d.p != 0)
            throw ArgumentError(kModule, "drift_check: tuple length does not match p");
        const ComposedKernel ck = compose_tuple(k, pt.x_tuple, pt.x_tuple.size() / d.p);
        const double vy = d.V(pt.y);
        Diagnostic diag;
        diag.index = i;
        diag.bound = d.lambda(pt.x_tuple) * vy + d.b(pt.x_tuple);
        if (exact) {
            const Matrix& P = *ck.matrix;
            double pv = 0.0;
            const auto row = static_cast<Eigen::Index>(label_of(pt.y));
            for (Eigen::Index j = 0; j < P.cols(); ++j) {
                const double label = static_cast<double>(j);
                pv += P(row, j) * d.V(PointView(&label, 1));
            }
            diag.value = pv;
        } else {
            Stream s = rng.split(i);
            std::vector<double> vals(n_mc);
            Point out(k.state_space().point_size());
            for (std::size_t r = 0; r < n_mc; ++r) {
                ck.sample(pt.y, s, out);
                vals[r] = d.V(out);
                if (!std::isfinite(vals[r]))
                    throw NumericError(kModule, "drift_check: non-finite V along a sampled path at point " + std::to_string(i));
            }
            const auto ms = stats::mean_se(vals);
            diag.value = ms.mean;
            diag.se = ms.se;
        }
        details[i] = diag;
    });

    ConditionReport rep;
    rep.name = "drift";
    rep.threshold = 0.0;
    rep.direction = "<=";
    rep.estimate = -std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& diag : details) {
        const double excess = diag.value - diag.bound;
        if (excess - 3.0 * diag.se > worst) {
            worst = excess - 3.0 * diag.se;
            rep.estimate = excess;
            rep.halfwidth = 3.0 * diag.se;
        }
    }
    if (details.empty()) rep.estimate = 0.0;
    rep.details = std::move(details);
    rep.notes.push_back(exact ? "exact matrix evaluation" : "Monte Carlo with n_mc = " + std::to_string(n_mc));
    rep.decide();
    return rep;
}

ConditionReport geometric_mean_condition(const EnvironmentRealization& r, const ScalarFn& lambda, std::size_t p,
                                         std::size_t n) {
    if (p < 1 || n < 1) throw ArgumentError(kModule, "geometric_mean_condition: p and n must be >= 1");
    const auto span_len = static_cast<std::int64_t>(n * p);
    if (!r.contains(-1) || !r.contains(-span_len))
        throw RangeError(kModule, "geometric_mean_condition: window must cover [-n p, -1]");
    const std::size_t d = r.dim();
    std::vector<double> logs(n);
    Point tuple(p * d);
    bool constant = true;
    double first = 0.0;
    for (std::size_t blk = 0; blk < n; ++blk) {
        for (std::size_t j = 0; j < p; ++j) {
            const auto v = r.at(-1 - static_cast<std::int64_t>(blk * p + j));
            std::copy(v.begin(), v.end(), tuple.begin() + static_cast<std::ptrdiff_t>(j * d));
        }
        const double l = lambda(tuple);
        if (!(l > 0.0) || !std::isfinite(l)) {
            std::ostringstream os;
            os << "lambda = " << l << " at block " << blk << ": log undefined";
            throw NumericError(kModule, os.str());
        }
        if (blk == 0) first = l;
        constant = constant && l == first;
        logs[blk] = std::log(l);
    }

    ConditionReport rep;
    rep.name = "geometric-mean";
    rep.threshold = 1.0;
    rep.direction = "<";
    rep.trajectory = dyadic_trajectory(logs);
    if (constant) {
        rep.estimate = first;
        rep.halfwidth = 0.0;
    } else {
        const double mean_log = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(n);
        rep.estimate = std::exp(mean_log);
        const double clt = rep.estimate * (std::exp(3.0 * mean_log_se(logs)) - 1.0);
        rep.halfwidth = std::max(clt, spread_at(logs, true));
    }
    rep.decide();
    return rep;
}

SeriesResult series_bound(std::span<const double> lambda_past, std::span<const double> b_past, SeriesOptions options) {
    if (options.max_terms < 1) throw ArgumentError(kModule, "series_bound: max_terms must be >= 1");
    if (lambda_past.size() != b_past.size()) throw ArgumentError(kModule, "series_bound: length mismatch");
    SeriesResult res;
    const bool fixed_env = std::isfinite(options.b_envelope);
    double b_env = fixed_env ? options.b_envelope : 0.0;
    double prod_before = 1.0;  // lambda_0 ... lambda_{i-2}
    double log_sum = 0.0;
    for (std::size_t i = 0; i < options.max_terms; ++i) {
        if (i >= lambda_past.size()) {
            res.exhausted = true;
            return res;
        }
        const double b = b_past[i];
        const double l = lambda_past[i];
        if (!std::isfinite(b) || !std::isfinite(l)) throw NumericError(kModule, "series_bound: non-finite lambda or b");
        res.value += prod_before * b;
        if (!fixed_env) b_env = std::max(b_env, b);
        const double prod = prod_before * l;
        res.products.push_back(prod);
        res.terms = i + 1;
        log_sum += std::log(l);
        const double g = std::exp(log_sum / static_cast<double>(i + 1));
        res.truncation_bound = g < 1.0 ? prod * b_env / (1.0 - g) : std::numeric_limits<double>::infinity();
        if (res.truncation_bound < options.tol) return res;
        prod_before = prod;
    }
    res.diverged = true;
    return res;
}

SeriesResult series_bound(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                          SeriesOptions options, std::int64_t origin) {
    if (options.max_terms < 1) throw ArgumentError(kModule, "series_bound: max_terms must be >= 1");
    // Evaluate lazily in chunks so long windows are not scanned needlessly.
    std::vector<double> lam, bs;
    std::size_t chunk = 64;
    for (;;) {
        const std::size_t want = std::min(options.max_terms, lam.size() + chunk);
        while (lam.size() < want) {
            const std::int64_t t = origin - 1 - static_cast<std::int64_t>(lam.size());
            if (!r.contains(t)) break;
            const auto x = r.at(t);
            lam.push_back(lambda(x));
            bs.push_back(b(x));
        }
        SeriesResult res = series_bound(lam, bs, options);
        if (!res.exhausted) return res;
        if (lam.size() < want) throw RangeError(kModule, "series_bound: window ends before the series converges");
        chunk *= 2;
    }
}

double matrix_norm(const Matrix& m, MatrixNorm norm) {
    switch (norm) {
        case MatrixNorm::kL1Induced: return m.cwiseAbs().colwise().sum().maxCoeff();
        case MatrixNorm::kLinfInduced: return m.cwiseAbs().rowwise().sum().maxCoeff();
        case MatrixNorm::kFrobenius: return m.norm();
    }
    return 0.0;
}

double lyapunov_exponent(const MatrixFn& A, const EnvironmentRealization& r, std::size_t n, MatrixNorm norm) {
    if (n < 1) throw ArgumentError(kModule, "lyapunov_exponent: n must be >= 1");
    if (!r.contains(-1) || !r.contains(-static_cast<std::int64_t>(n)))
        throw RangeError(kModule, "lyapunov_exponent: window must cover [-n, -1]");
    Matrix prod = A(r.at(-1));
    double log_scale = 0.0;
    for (std::size_t i = 1;; ++i) {
        const double s = matrix_norm(prod, norm);
        if (!std::isfinite(s)) throw NumericError(kModule, "lyapunov_exponent: non-finite matrix entries");
        if (s == 0.0) return -std::numeric_limits<double>::infinity();
        log_scale += std::log(s);
        prod /= s;
        if (i == n) break;
        prod = prod * A(r.at(-1 - static_cast<std::int64_t>(i)));
    }
    return log_scale / static_cast<double>(n);
}

double lyapunov_exponent_naive(const MatrixFn& A, const EnvironmentRealization& r, std::size_t n, MatrixNorm norm) {
    if (n < 1) throw ArgumentError(kModule, "lyapunov_exponent_naive: n must be >= 1");
    Matrix prod = A(r.at(-1));
    for (std::size_t i = 1; i < n; ++i) prod = prod * A(r.at(-1 - static_cast<std::int64_t>(i)));
    const double s = matrix_norm(prod, norm);
    if (s == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(s) / static_cast<double>(n);
}

ConditionReport log_plus_moment(const EnvironmentRealization& r, const ScalarFn& lambda, std::size_t n) {
    if (n < 4) throw ArgumentError(kModule, "log_plus_moment: n must be >= 4");
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = lambda(r.at(-1 - static_cast<std::int64_t>(i)));
        vals[i] = l > 1.0 ? std::log(l) : 0.0;
        if (!std::isfinite(vals[i])) throw NumericError(kModule, "log_plus_moment: non-finite lambda at index " + std::to_string(-1 - static_cast<std::int64_t>(i)));
    }
    ConditionReport rep;
    rep.name = "log-plus-moment";
    rep.estimate = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(n);
    rep.halfwidth = spread_at(vals, false);
    rep.threshold = std::max(1e-3, 0.1 * rep.estimate);
    // The quantity tested is the spread itself.
    rep.direction = "<=";
    rep.pass = rep.halfwidth <= rep.threshold;
    rep.notes.push_back("heuristic: a finite-sample stability check, not a proof of integrability");
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + vals[i];
    for (std::size_t m = 1; m <= n; m *= 2) rep.trajectory.emplace_back(m, prefix[m] / static_cast<double>(m));
    return rep;
}

}  // namespace mcre
