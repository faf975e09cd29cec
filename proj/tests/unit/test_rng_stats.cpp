#include "mcre/parallel.hpp"
#include "mcre/rng.hpp"
#include "mcre/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

TEST(Stream, SameKeySameOutputs) {
    mcre::Stream a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Stream, SplitDoesNotAdvanceParent) {
    mcre::Stream a(7);
    mcre::Stream b(7);
    (void)a.split(3)();
    EXPECT_EQ(a(), b());
    EXPECT_NE(a.split(1)(), a.split(2)());
}

TEST(Stream, UniformIsOpenUnitInterval) {
    mcre::Stream s(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // Mean of 1e5 uniforms: sd = 1/sqrt(12e5).
    EXPECT_NEAR(sum / 1e5, 0.5, 4.0 / std::sqrt(12e5));
}

TEST(Stream, DeriveSeedSeparatesReplicas) {
    EXPECT_NE(mcre::derive_seed(1, 0), mcre::derive_seed(1, 1));
    EXPECT_NE(mcre::derive_seed(1, 0), mcre::derive_seed(2, 0));
    EXPECT_EQ(mcre::derive_seed(9, 4), mcre::derive_seed(9, 4));
}

TEST(ParallelFor, ResultsIndependentOfThreadCount) {
    auto run = [](unsigned threads) {
        std::vector<std::uint64_t> out(1000);
        mcre::parallel_for(out.size(), {threads}, [&](std::size_t i) { out[i] = mcre::Stream(mcre::derive_seed(5, i))(); });
        return out;
    };
    EXPECT_EQ(run(1), run(4));
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(mcre::parallel_for(100, {4}, [](std::size_t i) {
        if (i == 57) throw std::runtime_error("boom");
    }),
                 std::runtime_error);
}

TEST(Stats, MeanSeOfKnownValues) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto ms = mcre::stats::mean_se(v);
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    // sample variance 5/3, se = sqrt(5/12)
    EXPECT_NEAR(ms.se, std::sqrt(5.0 / 12.0), 1e-15);
}

TEST(Stats, TotalVariation) {
    const std::vector<double> p{0.7, 0.3}, q{0.4, 0.6};
    EXPECT_NEAR(mcre::stats::total_variation(p, q), 0.3, 1e-15);
}

TEST(Stats, BinnedTvOfOneLawStaysNearNoiseFloor) {
    mcre::Stream s(3);
    std::vector<double> a(40000), b(40000);
    for (auto& v : a) v = s.normal();
    for (auto& v : b) v = s.normal();
    const auto bt = mcre::stats::binned_tv(a, b);
    EXPECT_EQ(bt.bins, 200u);
    EXPECT_LT(bt.tv, 2.0 * bt.noise_floor);
}

TEST(Stats, LeastSquaresRecoversLine) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = mcre::stats::least_squares(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

}  // namespace
