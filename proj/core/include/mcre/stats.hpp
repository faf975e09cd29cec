#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mcre::stats {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

/// Sample mean with the standard error of the mean (n - 1 denominator).
MeanSe mean_se(std::span<const double> values);

/// Standard error of a time average by non-overlapping batch means.
MeanSe batch_means(std::span<const double> series, std::size_t batches = 50);

/// Half the l1 distance between two probability vectors.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Empirical frequencies of integer labels in [0, states).
std::vector<double> label_frequencies(std::span<const double> labels, std::size_t states);

/// Equal-mass bin edges computed from the pooled samples (interior edges only).
std::vector<double> equal_mass_edges(std::span<const double> pooled, std::size_t bins);

/// Normalized histogram over the bins defined by `edges` (bins = edges + 1).
std::vector<double> histogram(std::span<const double> samples, std::span<const double> edges);

struct BinnedTv {
    double tv = 0.0;
    /// Expected TV between two independent samples of one law with these
    /// bin and sample counts; estimates below this level are noise.
    double noise_floor = 0.0;
    std::size_t bins = 0;
};

/// TV between two sample sets after equal-mass binning of the pooled sample.
/// `bins == 0` selects ceil(sqrt(min sample size)).
BinnedTv binned_tv(std::span<const double> a, std::span<const double> b, std::size_t bins = 0);

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace mcre::stats

#include <algorithm>
#include <cmath>

template <class Cdf>
double mcre::stats::ks_statistic(std::vector<double> samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}
