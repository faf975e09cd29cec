#include "mcre/coupling.hpp"

#include "mcre/error.hpp"
#include "mcre/stats.hpp"

#include <algorithm>
#include <cmath>

namespace mcre {
namespace {

constexpr const char* kModule = "coupling";

// Substream tags of one coupled step.
constexpr std::uint64_t kTagY = 0;
constexpr std::uint64_t kTagYBar = 1;
constexpr std::uint64_t kTagCoin = 2;

// Substream tags of one replica.
constexpr std::uint64_t kReplicaEnvironment = 1;
constexpr std::uint64_t kReplicaCoupling = 2;

}  // namespace

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::kEqual: return "equal";
        case Branch::kOutside: return "outside";
        case Branch::kInsideCoalesce: return "inside-coalesce";
        case Branch::kInsideResidual: return "inside-residual";
        case Branch::kIndependent: return "independent";
    }
    return "unknown";
}

CoupledState coupled_step(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V, double R,
                          PointView x, const CoupledState& s, const Stream& rng, bool minorize, Branch* branch,
                          ResidualStats* residual) {
    Stream sy = rng.split(kTagY);
    Stream sb = rng.split(kTagYBar);
    CoupledState out;
    Branch taken;
    if (s.coalesced || s.y == s.y_bar) {
        taken = Branch::kEqual;
        out.y = k.sample(x, s.y, sy);
        out.y_bar = out.y;
    } else if (std::max(V(s.y), V(s.y_bar)) > R) {
        taken = Branch::kOutside;
        out.y = k.sample(x, s.y, sy);
        out.y_bar = k.sample(x, s.y_bar, sb);
    } else if (!minorize) {
        taken = Branch::kIndependent;
        out.y = k.sample(x, s.y, sy);
        out.y_bar = k.sample(x, s.y_bar, sb);
    } else {
        Stream coin = rng.split(kTagCoin);
        const double eta = m.eta(R, x);
        if (!(eta >= 0.0) || eta > 1.0) throw ArgumentError(kModule, "coupled_step: eta(R, x) outside [0, 1]");
        if (coin.uniform() < eta) {
            taken = Branch::kInsideCoalesce;
            out.y.assign(k.state_space().point_size(), 0.0);
            m.nu_sample(R, x, coin, out.y);
            out.y_bar = out.y;
        } else {
            taken = Branch::kInsideResidual;
            out.y = residual_sample(k, m, R, x, s.y, sy, residual);
            out.y_bar = residual_sample(k, m, R, x, s.y_bar, sb, residual);
        }
    }
    out.coalesced = out.y == out.y_bar;
    if (branch) *branch = taken;
    return out;
}

CouplingSchedule CouplingSchedule::from_good_times(const GoodTimeIndex& g) {
    CouplingSchedule s;
    s.R_ = g.R;
    s.C1_ = g.C1;
    s.all_times_ = false;
    s.good_ = g.tau;
    std::sort(s.good_.begin(), s.good_.end());
    return s;
}

CouplingSchedule CouplingSchedule::fixed_level(double R, double eta_min, std::size_t stride) {
    if (!(R > 0.0)) throw ArgumentError(kModule, "fixed_level: R must be positive");
    if (stride < 1) throw ArgumentError(kModule, "fixed_level: stride must be >= 1");
    CouplingSchedule s;
    s.R_ = R;
    s.all_times_ = true;
    s.eta_min_ = eta_min;
    s.stride_ = stride;
    return s;
}

bool CouplingSchedule::eligible(std::int64_t t, double eta) const {
    if (all_times_) return eta >= eta_min_;
    return std::binary_search(good_.begin(), good_.end(), t);
}

std::vector<std::int64_t> CouplingSchedule::skeleton(std::int64_t start, std::int64_t end) const {
    std::vector<std::int64_t> out{start};
    if (all_times_) {
        for (std::int64_t t = start + static_cast<std::int64_t>(stride_); t <= end; t += static_cast<std::int64_t>(stride_))
            out.push_back(t);
    } else {
        for (auto it = std::upper_bound(good_.begin(), good_.end(), start); it != good_.end() && *it <= end; ++it)
            out.push_back(*it);
    }
    return out;
}

CouplingTrace run_coupling(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V,
                           const EnvironmentRealization& env, const Point& z, const Point& z_bar, std::size_t n,
                           const CouplingSchedule& schedule, const Stream& rng) {
    const std::size_t width = k.state_space().point_size();
    if (z.size() != width || z_bar.size() != width) throw ArgumentError(kModule, "run_coupling: start points have the wrong size");
    const auto start = -static_cast<std::int64_t>(n);
    if (n > 0 && (!env.contains(start) || !env.contains(-1)))
        throw RangeError(kModule, "run_coupling: environment window must cover [-n, -1]");
    const double R = schedule.R();

    CouplingTrace tr;
    tr.start = start;
    tr.states.reserve(n + 1);
    tr.states.push_back({z, z_bar, z == z_bar});
    if (tr.states.back().coalesced) tr.coalescence_time = start;
    for (std::int64_t t = start + 1; t <= 0; ++t) {
        const CoupledState& cur = tr.states.back();
        const PointView x = env.at(t - 1);
        bool minorize = false;
        if (!cur.coalesced && std::max(V(cur.y), V(cur.y_bar)) <= R)
            minorize = schedule.eligible(t - 1, m.eta(R, x));
        Branch b;
        tr.states.push_back(coupled_step(k, m, V, R, x, cur, rng.split_signed(t), minorize, &b, &tr.residual));
        ++tr.branch_counts[static_cast<std::size_t>(b)];
        if (tr.states.back().coalesced && !tr.coalescence_time) tr.coalescence_time = t;
    }

    tr.skeleton = schedule.skeleton(start, 0);
    tr.W.reserve(tr.skeleton.size());
    for (std::size_t i = 0; i < tr.skeleton.size(); ++i) {
        const CoupledState& s = tr.states[static_cast<std::size_t>(tr.skeleton[i] - start)];
        tr.W.push_back(V(s.y) + V(s.y_bar));
        if (i >= 1 && tr.W.back() <= R) tr.rho.push_back(i);
    }
    return tr;
}

DecayFit fit_decay(std::vector<CurvePoint> curve, double start_weight) {
    DecayFit fit;
    std::vector<double> xs, ys;
    for (const auto& c : curve)
        if (c.fraction > 0.0) {
            xs.push_back(static_cast<double>(c.n));
            ys.push_back(std::log(c.fraction));
        }
    if (xs.size() >= 2) {
        const auto lf = stats::least_squares(xs, ys);
        fit.kappa_hat = std::exp(lf.slope);
        fit.F_hat = std::exp(lf.intercept) / start_weight;
        fit.r_squared = lf.r_squared;
        if (fit.kappa_hat > 1.0) {
            fit.kappa_hat = 1.0;
            fit.clipped = true;
        }
    } else {
        fit.degenerate = true;
        auto empty = std::find_if(curve.begin(), curve.end(), [](const CurvePoint& c) { return c.non_coalesced == 0; });
        if (empty != curve.end() && empty->n > 0 && empty->replicas > 0) {
            fit.kappa_hat = std::min(1.0, std::pow(3.0 / static_cast<double>(empty->replicas), 1.0 / static_cast<double>(empty->n)));
        } else if (xs.size() == 1 && xs[0] > 0.0) {
            fit.kappa_hat = std::min(1.0, std::exp(ys[0] / xs[0]));
        }
    }
    fit.curve = std::move(curve);
    return fit;
}

DecayFit coalescence_curve(const KernelFamily& k, const MinorizationSpec& m, const ScalarFn& V,
                           const EnvironmentSpec& env_spec, const Point& z, const Point& z_bar,
                           const std::vector<std::size_t>& ns, std::size_t replicas, std::uint64_t master_seed,
                           const CurveOptions& options, Parallelism par) {
    if (ns.empty() || !std::is_sorted(ns.begin(), ns.end())) throw ArgumentError(kModule, "coalescence_curve: ns must be non-empty and increasing");
    if (replicas < 1) throw ArgumentError(kModule, "coalescence_curve: replicas must be positive");
    if (options.block < 1) throw ArgumentError(kModule, "coalescence_curve: block must be >= 1");
    if (options.schedule == ScheduleKind::kGoodTimes && (!options.lambda || !options.b))
        throw ArgumentError(kModule, "coalescence_curve: the good-time schedule needs lambda and b");
    env_spec.validate();
    const std::size_t n_max = ns.back();
    const auto kb = static_cast<std::int64_t>(options.block);
    const auto past = static_cast<std::int64_t>(n_max + options.burn_in);

    std::vector<std::vector<std::uint8_t>> open(replicas, std::vector<std::uint8_t>(ns.size(), 0));
    parallel_for(replicas, par, [&](std::size_t j) {
        const std::uint64_t seed = derive_seed(master_seed, j);
        EnvironmentRealization raw = realize(env_spec, derive_seed(seed, kReplicaEnvironment), -past * kb, kb - 1);
        EnvironmentRealization env = options.block == 1 ? raw : skeleton_environment(raw, options.block);
        const Stream rng(derive_seed(seed, kReplicaCoupling));

        std::optional<GoodSetEvaluator> ev;
        GoodConstants c;
        if (options.schedule == ScheduleKind::kGoodTimes) {
            ev.emplace(env, options.lambda, options.b, m, options.good);
            c = find_C(*ev);
        }
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const std::size_t n = ns[i];
            CouplingSchedule schedule = CouplingSchedule::fixed_level(options.R, options.eta_min);
            if (ev) {
                GoodTimeIndex g;
                try {
                    g = n > 0 ? good_times(*ev, c, -static_cast<std::int64_t>(n), -1) : GoodTimeIndex{};
                } catch (const NoGoodTimeError&) {
                    g = GoodTimeIndex{};
                }
                g.C1 = c.C1;
                g.C2 = c.C2;
                g.R = good_level(c.C1);
                schedule = CouplingSchedule::from_good_times(g);
            }
            const auto tr = run_coupling(k, m, V, env, z, z_bar, n, schedule, rng.split(n));
            open[j][i] = tr.final_state().coalesced ? 0 : 1;
        }
    });

    std::vector<CurvePoint> curve(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        CurvePoint& c = curve[i];
        c.n = ns[i];
        c.replicas = replicas;
        for (std::size_t j = 0; j < replicas; ++j) c.non_coalesced += open[j][i];
        c.fraction = static_cast<double>(c.non_coalesced) / static_cast<double>(replicas);
        c.se = std::sqrt(c.fraction * (1.0 - c.fraction) / static_cast<double>(replicas));
    }
    return fit_decay(std::move(curve), 1.0 + V(z) + V(z_bar));
}

ReturnTimeReport return_time_moments(const std::vector<CouplingTrace>& traces, std::uint64_t C1, double R,
                                     double start_weight) {
    if (C1 < 1) throw ArgumentError(kModule, "return_time_moments: C1 must be >= 1");
    ReturnTimeReport rep;
    const double c = static_cast<double>(C1);
    rep.eta = 2.0 / (2.0 - 1.0 / c);
    rep.D = 1.0 + (1.0 - 1.0 / c) * R + 2.0 * c;
    rep.first_bound = start_weight;
    rep.gap_bound = rep.D * rep.eta;
    std::vector<double> firsts, gaps;
    for (const auto& tr : traces) {
        if (tr.rho.empty()) {
            ++rep.censored_first;
            continue;
        }
        firsts.push_back(std::pow(rep.eta, static_cast<double>(tr.rho.front())));
        for (std::size_t j = 1; j < tr.rho.size(); ++j)
            gaps.push_back(std::pow(rep.eta, static_cast<double>(tr.rho[j] - tr.rho[j - 1])));
        ++rep.censored_gap;
    }
    const auto f = stats::mean_se(firsts);
    const auto g = stats::mean_se(gaps);
    rep.first_mean = f.mean;
    rep.first_se = f.se;
    rep.first_count = f.count;
    rep.gap_mean = g.mean;
    rep.gap_se = g.se;
    rep.gap_count = g.count;
    rep.first_pass = rep.first_count > 0 && rep.first_mean <= rep.first_bound + 3.0 * rep.first_se;
    rep.gap_pass = rep.gap_count > 0 && rep.gap_mean <= rep.gap_bound + 3.0 * rep.gap_se;
    return rep;
}

ConditionReport skeleton_drift_check(const std::vector<CouplingTrace>& traces, std::uint64_t C1, std::size_t bins) {
    if (C1 < 1 || bins < 1) throw ArgumentError(kModule, "skeleton_drift_check: C1 and bins must be >= 1");
    const double contraction = 1.0 - 1.0 / static_cast<double>(C1);
    std::vector<std::pair<double, double>> pairs;
    for (const auto& tr : traces)
        for (std::size_t i = 1; i < tr.W.size(); ++i) pairs.emplace_back(tr.W[i - 1], tr.W[i]);
    std::sort(pairs.begin(), pairs.end());

    ConditionReport rep;
    rep.name = "skeleton-drift";
    rep.threshold = 0.0;
    rep.direction = "<=";
    double worst = -std::numeric_limits<double>::infinity();
    const std::size_t per_bin = std::max<std::size_t>(1, pairs.size() / bins);
    for (std::size_t start = 0, idx = 0; start < pairs.size(); start += per_bin, ++idx) {
        const std::size_t end = pairs.size() - start < 2 * per_bin ? pairs.size() : start + per_bin;
        std::vector<double> diff;
        double w_prev = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            diff.push_back(pairs[i].second - contraction * pairs[i].first);
            w_prev += pairs[i].first;
        }
        const auto ms = stats::mean_se(diff);
        Diagnostic d{idx, ms.mean, 2.0 * static_cast<double>(C1), ms.se};
        rep.details.push_back(d);
        const double excess = d.value - d.bound;
        if (excess - 3.0 * d.se > worst) {
            worst = excess - 3.0 * d.se;
            rep.estimate = excess;
            rep.halfwidth = 3.0 * d.se;
        }
        rep.trajectory.emplace_back(idx, w_prev / static_cast<double>(end - start));
        if (end == pairs.size()) break;
    }
    rep.notes.push_back("trajectory holds the mean previous W of each bin");
    rep.decide();
    return rep;
}

}  // namespace mcre
