#include "mcre/stationary.hpp"

#include "mcre/error.hpp"
#include "mcre/stats.hpp"

#include <cmath>
#include <numbers>

namespace mcre {
namespace {

constexpr const char* kModule = "stationary";

Point default_start(const KernelFamily& k, const Point& z) {
    if (!z.empty()) {
        if (z.size() != k.state_space().point_size()) throw ArgumentError(kModule, "start point has the wrong size");
        return z;
    }
    return Point(k.state_space().point_size(), 0.0);
}

/// Runs the chain from `y` at time `from` to time `to`, stepping into time s
/// with x = X_{s-1} and stream rng.split_signed(s).
Point run_forward(const KernelFamily& k, const EnvironmentRealization& env, Point y, std::int64_t from,
                  std::int64_t to, const Stream& rng) {
    Point next(y.size());
    for (std::int64_t s = from + 1; s <= to; ++s) {
        Stream step = rng.split_signed(s);
        k.sample(env.at(s - 1), y, step, next);
        std::swap(y, next);
    }
    return y;
}

void require_window(const EnvironmentRealization& env, std::int64_t lo, std::int64_t hi, const char* what) {
    if (lo > hi) return;
    if (!env.contains(lo) || !env.contains(hi))
        throw RangeError(kModule, std::string(what) + ": environment window must cover [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
}

/// TV between two sample sets: exact label frequencies for finite E,
/// equal-mass bins on the first coordinate otherwise.
TvEstimate sample_tv(const KernelFamily& k, const std::vector<Point>& a, const std::vector<Point>& b, std::size_t bins) {
    std::vector<double> ca(a.size()), cb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ca[i] = a[i][0];
    for (std::size_t i = 0; i < b.size(); ++i) cb[i] = b[i][0];
    TvEstimate out;
    if (k.state_space().kind == StateSpaceKind::kFinite) {
        const std::size_t n = k.state_space().dim;
        out.tv = stats::total_variation(stats::label_frequencies(ca, n), stats::label_frequencies(cb, n));
        const double m = static_cast<double>(std::min(a.size(), b.size()));
        out.noise_floor = std::sqrt(static_cast<double>(n) / (std::numbers::pi * m));
        out.method = "label-frequencies";
    } else {
        const auto bt = stats::binned_tv(ca, cb, bins);
        out.tv = bt.tv;
        out.noise_floor = bt.noise_floor;
        out.method = "equal-mass-bins(" + std::to_string(bt.bins) + ")";
    }
    return out;
}

}  // namespace

RandomMeasureEstimate backward_law_exact(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                                         std::size_t n, std::int64_t t_end) {
    if (!k.has_matrix()) throw CapabilityError(kModule, "exact backward law needs matrices");
    const std::int64_t first = t_end + 1 - static_cast<std::int64_t>(n);
    require_window(env, first, t_end, "backward_law_exact");
    std::vector<Matrix> ms;
    ms.reserve(n);
    for (std::int64_t t = first; t <= t_end; ++t) ms.push_back(k.matrix(env.at(t)));
    RandomMeasureEstimate est;
    est.exact = oracle::exact_backward(ms, label_of(default_start(k, z)), k.state_space().dim);
    est.n_backward = n;
    est.env_window_id = env.id();
    return est;
}

RandomMeasureEstimate backward_law_sampled(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                                           std::size_t n, std::size_t replicas, const Stream& rng,
                                           std::int64_t t_end, Parallelism par) {
    if (replicas < 1) throw ArgumentError(kModule, "backward_law_sampled: replicas must be positive");
    const std::int64_t first = t_end + 1 - static_cast<std::int64_t>(n);
    require_window(env, first, t_end, "backward_law_sampled");
    const Point start = default_start(k, z);
    RandomMeasureEstimate est;
    est.samples.resize(replicas);
    parallel_for(replicas, par, [&](std::size_t i) {
        est.samples[i] = run_forward(k, env, start, first, t_end + 1, rng.split(i));
    });
    est.n_backward = n;
    est.env_window_id = env.id();
    return est;
}

Point backward_sample(const KernelFamily& k, const EnvironmentRealization& env, const Point& z, std::size_t n,
                      const Stream& rng) {
    const auto start = -static_cast<std::int64_t>(n);
    require_window(env, start, -1, "backward_sample");
    return run_forward(k, env, default_start(k, z), start, 0, rng);
}

TvEstimate backward_tv_pair(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                            const Point& z_prime, std::size_t n, TvMode mode, const CouplingSetup& coupling) {
    TvEstimate out;
    if (mode == TvMode::kExact) {
        if (!k.has_matrix()) throw CapabilityError(kModule, "exact TV mode needs matrices");
        const auto a = backward_law_exact(k, env, z, n);
        const auto b = backward_law_exact(k, env, z_prime, n);
        out.tv = oracle::exact_tv(*a.exact, *b.exact);
        out.method = "exact";
        return out;
    }
    if (!coupling.minorization || !coupling.V)
        throw CapabilityError(kModule, "coupling TV mode needs a minorization and a drift function");
    if (coupling.replicas < 1) throw ArgumentError(kModule, "backward_tv_pair: replicas must be positive");
    std::vector<std::uint8_t> open(coupling.replicas, 0);
    parallel_for(coupling.replicas, coupling.par, [&](std::size_t i) {
        const auto tr = run_coupling(k, *coupling.minorization, coupling.V, env, z, z_prime, n, coupling.schedule,
                                     Stream(derive_seed(coupling.seed, i)));
        open[i] = tr.final_state().coalesced ? 0 : 1;
    });
    const double r = static_cast<double>(coupling.replicas);
    double count = 0.0;
    for (auto o : open) count += o;
    out.tv = count / r;
    out.se = std::sqrt(out.tv * (1.0 - out.tv) / r);
    out.method = "coupling";
    return out;
}

TvEstimate invariance_check(const KernelFamily& k, const EnvironmentRealization& env, std::size_t n,
                            const Stream& rng, const InvarianceOptions& options) {
    if (n < 1) throw ArgumentError(kModule, "invariance_check: n must be >= 1");
    require_window(env, -static_cast<std::int64_t>(n), 0, "invariance_check");
    const Point z = default_start(k, options.z);
    if (k.has_matrix()) {
        const auto pushed = backward_law_exact(k, env, z, n + 1, 0);
        const auto direct = backward_law_exact(k, env, z, n, 0);
        TvEstimate out;
        out.tv = oracle::exact_tv(*pushed.exact, *direct.exact);
        out.method = "exact";
        return out;
    }
    if (options.replicas < 2) throw ArgumentError(kModule, "invariance_check: need at least 2 replicas");
    std::vector<Point> pushed(options.replicas), direct(options.replicas);
    const auto lo = -static_cast<std::int64_t>(n);
    parallel_for(options.replicas, options.par, [&](std::size_t i) {
        pushed[i] = run_forward(k, env, z, lo, 1, rng.split(2 * i));
        direct[i] = run_forward(k, env, z, lo + 1, 1, rng.split(2 * i + 1));
    });
    return sample_tv(k, pushed, direct, options.bins);
}

ForwardExact forward_exact(const KernelFamily& k, const EnvironmentSpec& env_spec, std::size_t z, std::size_t t_max) {
    if (!k.has_matrix()) throw CapabilityError(kModule, "exact forward convergence needs matrices");
    const auto chain = finite_chain(env_spec);
    if (!chain) throw CapabilityError(kModule, "exact forward convergence needs a finite-valued environment");
    const std::size_t E = chain->values.size();
    const std::size_t N = k.state_space().dim;
    if (z >= N) throw ArgumentError(kModule, "forward_exact: start state outside E");
    // Joint state (e, y) has index e * N + y.
    Matrix K = Matrix::Zero(static_cast<Eigen::Index>(E * N), static_cast<Eigen::Index>(E * N));
    std::vector<Matrix> P(E);
    for (std::size_t e = 0; e < E; ++e) P[e] = k.matrix(chain->values[e]);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t f = 0; f < E; ++f) {
            const double tef = chain->transition(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(f));
            if (tef == 0.0) continue;
            K.block(static_cast<Eigen::Index>(e * N), static_cast<Eigen::Index>(f * N), static_cast<Eigen::Index>(N),
                    static_cast<Eigen::Index>(N)) = tef * P[e];
        }
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(E * N));
    for (std::size_t e = 0; e < E; ++e) mu(static_cast<Eigen::Index>(e * N + z)) = chain->stationary(static_cast<Eigen::Index>(e));

    auto y_marginal = [E, N](const Eigen::RowVectorXd& joint) {
        oracle::DistributionVector d;
        d.masses = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(N));
        for (std::size_t e = 0; e < E; ++e) d.masses += joint.segment(static_cast<Eigen::Index>(e * N), static_cast<Eigen::Index>(N));
        return d;
    };
    ForwardExact out;
    out.law.reserve(t_max + 1);
    out.law.push_back(y_marginal(mu));
    Eigen::RowVectorXd cur = mu;
    for (std::size_t t = 1; t <= t_max; ++t) {
        cur = cur * K;
        out.law.push_back(y_marginal(cur));
    }
    out.limit = y_marginal(stationary_distribution(K, mu));
    return out;
}

TvEstimate forward_convergence(const KernelFamily& k, const EnvironmentSpec& env_spec, const Point& z,
                               std::size_t t, std::uint64_t seed, const ForwardOptions& options) {
    env_spec.validate();
    const Point start = default_start(k, z);
    if (k.has_matrix() && finite_chain(env_spec)) {
        const auto fe = forward_exact(k, env_spec, label_of(start), t);
        TvEstimate out;
        out.tv = oracle::exact_tv(fe.law.back(), fe.limit);
        out.method = "exact-joint-chain";
        return out;
    }
    if (options.env_draws < 1 || options.replicas_per_env < 1)
        throw ArgumentError(kModule, "forward_convergence: env_draws and replicas_per_env must be positive");
    const std::size_t per = options.replicas_per_env;
    std::vector<Point> forward(options.env_draws * per), backward(options.env_draws * per);
    const auto lo = -static_cast<std::int64_t>(options.n_backward);
    parallel_for(options.env_draws, options.par, [&](std::size_t j) {
        const std::uint64_t s = derive_seed(seed, j);
        const auto env = realize(env_spec, derive_seed(s, 1), lo, std::max<std::int64_t>(static_cast<std::int64_t>(t), 1));
        const Stream rng(derive_seed(s, 2));
        for (std::size_t i = 0; i < per; ++i) {
            forward[j * per + i] = run_forward(k, env, start, 0, static_cast<std::int64_t>(t), rng.split(2 * i));
            backward[j * per + i] = run_forward(k, env, start, lo, 0, rng.split(2 * i + 1));
        }
    });
    auto out = sample_tv(k, forward, backward, options.bins);
    out.method = "monte-carlo/" + out.method;
    return out;
}

std::vector<Point> stationary_path_sample(const KernelFamily& k, const EnvironmentRealization& env, std::int64_t u,
                                          std::int64_t t, std::size_t n_backward, const Stream& rng, const Point& z) {
    if (u > t) throw ArgumentError(kModule, "stationary_path_sample: need u <= t");
    const std::int64_t first = u - static_cast<std::int64_t>(n_backward);
    require_window(env, first, t - 1, "stationary_path_sample");
    std::vector<Point> path;
    path.reserve(static_cast<std::size_t>(t - u + 1));
    path.push_back(run_forward(k, env, default_start(k, z), first, u, rng));
    Point next(path.back().size());
    for (std::int64_t s = u + 1; s <= t; ++s) {
        Stream step = rng.split_signed(s);
        k.sample(env.at(s - 1), path.back(), step, next);
        path.push_back(next);
    }
    return path;
}

LlnResult lln_average(const KernelFamily& k, const EnvironmentRealization& env, const ScalarFn& f, std::size_t n,
                      std::size_t n_backward, const Stream& rng, const Point& z,
                      const std::vector<std::size_t>& checkpoints) {
    if (n < 1) throw ArgumentError(kModule, "lln_average: n must be >= 1");
    const std::int64_t first = 1 - static_cast<std::int64_t>(n_backward);
    require_window(env, first, static_cast<std::int64_t>(n) - 1, "lln_average");
    Point y = run_forward(k, env, default_start(k, z), first, 1, rng);
    Point next(y.size());
    std::vector<double> values;
    values.reserve(n);
    LlnResult res;
    std::vector<std::size_t> cps(checkpoints);
    std::sort(cps.begin(), cps.end());
    auto cp = cps.begin();
    double sum = 0.0;
    bool constant = true;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i > 1) {
            const auto s = static_cast<std::int64_t>(i);
            Stream step = rng.split_signed(s);
            k.sample(env.at(s - 1), y, step, next);
            std::swap(y, next);
        }
        const double v = f(y);
        if (!std::isfinite(v)) throw NumericError(kModule, "lln_average: non-finite f value at t = " + std::to_string(i));
        constant = constant && (values.empty() || v == values.front());
        values.push_back(v);
        sum += v;
        while (cp != cps.end() && *cp == i) {
            res.running.emplace_back(i, sum / static_cast<double>(i));
            ++cp;
        }
    }
    res.average = constant ? values.front() : sum / static_cast<double>(n);
    res.se = n >= 100 ? stats::batch_means(values).se : stats::mean_se(values).se;
    return res;
}

bool backward_doubling_check(const KernelFamily& k, const EnvironmentRealization& env, const Point& z,
                             std::size_t n, double tol) {
    const auto a = backward_law_exact(k, env, z, n);
    const auto b = backward_law_exact(k, env, z, 2 * n);
    return oracle::exact_tv(*a.exact, *b.exact) <= tol;
}

}  // namespace mcre
