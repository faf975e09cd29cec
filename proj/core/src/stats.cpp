#include "mcre/stats.hpp"

#include "mcre/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mcre::stats {

MeanSe mean_se(std::span<const double> values) {
    MeanSe out;
    out.count = values.size();
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

MeanSe batch_means(std::span<const double> series, std::size_t batches) {
    MeanSe out;
    out.count = series.size();
    if (series.empty()) return out;
    out.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    batches = std::min(batches, series.size());
    if (batches < 2) return out;
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * len);
        means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) /
                   static_cast<double>(len);
    }
    out.se = mean_se(means).se;
    return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ArgumentError("stats", "total_variation: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

std::vector<double> label_frequencies(std::span<const double> labels, std::size_t states) {
    std::vector<double> freq(states, 0.0);
    for (double l : labels) {
        const auto k = static_cast<std::size_t>(l + 0.5);
        if (k < states) freq[k] += 1.0;
    }
    if (!labels.empty())
        for (double& f : freq) f /= static_cast<double>(labels.size());
    return freq;
}

std::vector<double> equal_mass_edges(std::span<const double> pooled, std::size_t bins) {
    std::vector<double> sorted(pooled.begin(), pooled.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    if (sorted.empty() || bins < 2) return edges;
    for (std::size_t k = 1; k < bins; ++k) {
        const std::size_t idx = k * sorted.size() / bins;
        const double e = sorted[std::min(idx, sorted.size() - 1)];
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    return edges;
}

std::vector<double> histogram(std::span<const double> samples, std::span<const double> edges) {
    std::vector<double> h(edges.size() + 1, 0.0);
    for (double s : samples) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), s);
        h[static_cast<std::size_t>(it - edges.begin())] += 1.0;
    }
    if (!samples.empty())
        for (double& v : h) v /= static_cast<double>(samples.size());
    return h;
}

BinnedTv binned_tv(std::span<const double> a, std::span<const double> b, std::size_t bins) {
    BinnedTv out;
    if (a.empty() || b.empty()) throw ArgumentError("stats", "binned_tv: empty sample");
    if (bins == 0)
        bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::min(a.size(), b.size())))));
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto edges = equal_mass_edges(pooled, bins);
    const auto ha = histogram(a, edges);
    const auto hb = histogram(b, edges);
    out.tv = total_variation(ha, hb);
    out.bins = edges.size() + 1;
    // E|p_a - p_b| per bin is about sqrt(2/pi) * sqrt(p (1/na + 1/nb)).
    const double inv_n = 1.0 / static_cast<double>(a.size()) + 1.0 / static_cast<double>(b.size());
    double floor = 0.0;
    for (std::size_t k = 0; k < ha.size(); ++k) {
        const double p = 0.5 * (ha[k] + hb[k]);
        floor += std::sqrt(2.0 / std::numbers::pi) * std::sqrt(p * (1.0 - p) * inv_n);
    }
    out.noise_floor = 0.5 * floor;
    return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("stats", "least_squares: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    if (sxx == 0.0) throw ArgumentError("stats", "least_squares: constant abscissa");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace mcre::stats
