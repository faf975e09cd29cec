#include "mcre/goodtimes.hpp"

#include "mcre/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcre {
namespace {

constexpr const char* kModule = "goodtimes";
constexpr std::size_t kChunk = 4096;

}  // namespace

double good_level(std::uint64_t C1) {
    const auto c = static_cast<double>(C1);
    return 2.0 * c * (2.0 * c + 1.0);
}

std::size_t GoodTimeIndex::L(std::size_t n) const {
    const auto lo = -static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(std::count_if(tau.begin(), tau.end(), [lo](std::int64_t t) { return t >= lo && t <= -1; }));
}

GoodSetEvaluator::GoodSetEvaluator(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                                   const MinorizationSpec& m, GoodTimeOptions options, Parallelism par)
    : r_(r), m_(m), options_(options), lambda_(r.size()), b_(r.size()) {
    const std::size_t n = r.size();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, par, [&](std::size_t c) {
        for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
            const auto x = r_.at(r_.t_max() - static_cast<std::int64_t>(i));
            lambda_[i] = lambda(x);
            b_[i] = b(x);
        }
    });
}

GoodSetEvaluator::PastSummary GoodSetEvaluator::past(std::int64_t t) const {
    PastSummary s;
    if (!r_.contains(t - 1)) return s;
    const auto slot = static_cast<std::size_t>(r_.t_max() - (t - 1));
    const std::span<const double> lam(lambda_.data() + slot, lambda_.size() - slot);
    const std::span<const double> bs(b_.data() + slot, b_.size() - slot);
    s.series = series_bound(lam, bs, options_.series);
    s.available = !s.series.exhausted;
    return s;
}

bool GoodSetEvaluator::first_set(const PastSummary& s, std::uint64_t C1) {
    if (!s.available || s.series.diverged || C1 == 0) return false;
    const double c = static_cast<double>(C1);
    if (s.series.value > c) return false;
    const double cap = 1.0 - 1.0 / c;
    for (std::size_t j = C1; j <= s.series.products.size(); ++j)
        if (s.series.products[j - 1] > cap) return false;
    return true;
}

double GoodSetEvaluator::eta(std::int64_t t, double R) const { return m_.eta(R, r_.at(t)); }

bool GoodSetEvaluator::second_set(std::int64_t t, GoodConstants c) const {
    return eta(t, good_level(c.C1)) >= 1.0 / (static_cast<double>(c.C2) + 1.0);
}

GoodConstants find_C(const GoodSetEvaluator& ev) {
    const auto& opt = ev.options();
    const auto s = ev.past(0);
    if (!s.available) throw NoGoodConstantError(kModule, "window too short to evaluate the series at the origin");
    GoodConstants c;
    for (std::uint64_t C1 = 1; C1 <= opt.C1_max; ++C1)
        if (GoodSetEvaluator::first_set(s, C1)) {
            c.C1 = C1;
            break;
        }
    if (c.C1 == 0) {
        std::ostringstream os;
        os << "no C1 <= " << opt.C1_max << " satisfies sup_{j>=C1} prod lambda <= 1 - 1/C1 and series <= C1"
           << (s.series.diverged ? " (series diverged)" : "");
        throw NoGoodConstantError(kModule, os.str());
    }
    const double eta = ev.eta(0, good_level(c.C1));
    if (!(eta > 0.0) || 1.0 / eta - 1.0 > static_cast<double>(opt.C2_max)) {
        std::ostringstream os;
        os << "no C2 <= " << opt.C2_max << " satisfies eta(R, X_0) >= 1/(C2+1); eta = " << eta;
        throw NoGoodConstantError(kModule, os.str());
    }
    auto c2 = static_cast<std::uint64_t>(std::max(1.0, std::ceil(1.0 / eta - 1.0)));
    while (1.0 / (static_cast<double>(c2) + 1.0) > eta) ++c2;
    while (c2 > 1 && 1.0 / static_cast<double>(c2) <= eta) --c2;
    if (c2 > opt.C2_max) throw NoGoodConstantError(kModule, "C2 exceeds its cap");
    c.C2 = c2;
    return c;
}

GoodConstants find_C(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                     const MinorizationSpec& m, GoodTimeOptions options) {
    const auto origin_past = restrict_window(r, r.t_min(), std::min<std::int64_t>(r.t_max(), 0));
    return find_C(GoodSetEvaluator(origin_past, lambda, b, m, options));
}

GoodTimeIndex good_times(const GoodSetEvaluator& ev, GoodConstants c, std::int64_t lo, std::int64_t hi,
                         Parallelism par) {
    if (lo > hi) throw ArgumentError(kModule, "good_times: empty horizon");
    if (c.C1 == 0 || c.C2 == 0) throw ArgumentError(kModule, "good_times: constants must be positive");
    const auto& r = ev.realization();
    if (!r.contains(lo) || !r.contains(hi)) throw RangeError(kModule, "good_times: horizon outside the window");
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<std::uint8_t> good(n, 0), short_past(n, 0);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, par, [&](std::size_t ch) {
        for (std::size_t i = ch * kChunk; i < std::min(n, (ch + 1) * kChunk); ++i) {
            const std::int64_t t = lo + static_cast<std::int64_t>(i);
            const auto s = ev.past(t);
            if (!s.available) {
                short_past[i] = 1;
                continue;
            }
            good[i] = GoodSetEvaluator::first_set(s, c.C1) && ev.second_set(t, c);
        }
    });

    GoodTimeIndex g;
    g.C1 = c.C1;
    g.C2 = c.C2;
    g.R = good_level(c.C1);
    g.horizon_lo = lo;
    g.horizon_hi = hi;
    std::vector<std::int64_t> raw;
    for (std::size_t i = 0; i < n; ++i) {
        if (good[i]) raw.push_back(lo + static_cast<std::int64_t>(i));
        g.insufficient_past += short_past[i];
    }
    g.raw_count = raw.size();
    if (raw.empty()) throw NoGoodTimeError(kModule, "no good time in the horizon");
    // Anchor at the most recent raw good time so the result commutes with shifts.
    for (std::size_t k = raw.size(); k >= 1;) {
        g.tau.push_back(raw[k - 1]);
        if (k <= c.C1) break;
        k -= c.C1;
    }
    std::reverse(g.tau.begin(), g.tau.end());
    return g;
}

GoodTimeIndex good_times(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                         const MinorizationSpec& m, GoodConstants c, std::int64_t lo, std::int64_t hi,
                         GoodTimeOptions options, Parallelism par) {
    return good_times(GoodSetEvaluator(r, lambda, b, m, options, par), c, lo, hi, par);
}

double good_time_density(const GoodSetEvaluator& ev, GoodConstants c, std::size_t n, Parallelism par) {
    if (n < 1) throw ArgumentError(kModule, "good_time_density: n must be >= 1");
    const auto g = good_times(ev, c, -static_cast<std::int64_t>(n), -1, par);
    return static_cast<double>(g.L(n)) / static_cast<double>(n);
}

GoodTimeInvariants check_invariants(const GoodTimeIndex& g, const EnvironmentRealization& r,
                                    const MinorizationSpec& m) {
    GoodTimeInvariants inv;
    inv.spacing = true;
    for (std::size_t i = 1; i < g.tau.size(); ++i)
        if (g.tau[i] - g.tau[i - 1] < static_cast<std::int64_t>(g.C1)) inv.spacing = false;
    inv.level = g.R == good_level(g.C1);
    inv.eta_floor = true;
    const double floor = 1.0 / (static_cast<double>(g.C2) + 1.0);
    for (std::int64_t t : g.tau)
        if (!(m.eta(g.R, r.at(t)) >= floor)) inv.eta_floor = false;
    return inv;
}

}  // namespace mcre
