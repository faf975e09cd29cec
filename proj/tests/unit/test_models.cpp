#include "mcre/conditions.hpp"
#include "mcre/error.hpp"
#include "mcre/models.hpp"
#include "mcre/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace mcre::models {
namespace {

// Composite Simpson rule, used as an independent check on closed forms.
template <class F>
double simpson(F&& f, double lo, double hi, int intervals = 200000) {
    const double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + h * i);
    return s * h / 3.0;
}

std::vector<NoiseSpec> catalog() {
    return {NoiseSpec::gaussian(1.0), NoiseSpec::gaussian(0.3), NoiseSpec::laplace(1.0), NoiseSpec::laplace(2.0),
            NoiseSpec::student_t(3.0), NoiseSpec::student_t(5.0, 0.5)};
}

ScalarFn constant(double c) {
    return [c](PointView) { return c; };
}

TEST(Noise, DensityIntegratesToOneAndMatchesCdf) {
    for (const auto& n : catalog()) {
        const double L = n.family == NoiseFamily::kStudentT ? 2000.0 : 60.0 * n.scale;
        const double total = simpson([&](double e) { return n.density(e); }, -L, L, 2000000);
        EXPECT_NEAR(total, 1.0, n.family == NoiseFamily::kStudentT ? 2e-6 : 1e-9) << n.name();
        for (double e : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
            const double tail = n.family == NoiseFamily::kStudentT ? 2000.0 : 60.0 * n.scale;
            const double c = simpson([&](double u) { return n.density(u); }, -tail, e, 2000000);
            EXPECT_NEAR(n.cdf(e), c, 2e-6) << n.name() << " at " << e;
        }
    }
}

TEST(Noise, MeanAbsMatchesIntegral) {
    for (const auto& n : catalog()) {
        const double L = n.family == NoiseFamily::kStudentT ? 1e5 : 60.0 * n.scale;
        // Substitute e = u^2 on the heavy tail to keep the integrand smooth.
        const double m = 2.0 * simpson([&](double e) { return e * n.density(e); }, 0.0, 50.0, 400000) +
                         (L > 50.0 ? 2.0 * simpson([&](double e) { return e * n.density(e); }, 50.0, L, 2000000) : 0.0);
        const double tol = n.family == NoiseFamily::kStudentT && n.df < 4 ? 2e-3 : 1e-6;
        EXPECT_NEAR(n.mean_abs(), m, tol) << n.name();
    }
}

TEST(Noise, SamplesFollowCdf) {
    for (const auto& n : catalog()) {
        Stream rng(17);
        std::vector<double> x(20000);
        for (auto& v : x) v = n.sample(rng);
        const double d = stats::ks_statistic(x, [&](double e) { return n.cdf(e); });
        EXPECT_LT(d, 1.63 / std::sqrt(20000.0)) << n.name();
    }
}

TEST(Noise, FloorIsDensityAtBoundary) {
    const auto n = NoiseSpec::gaussian(1.0);
    EXPECT_DOUBLE_EQ(n.floor(2.0), n.density(2.0));
    EXPECT_DOUBLE_EQ(n.floor(-2.0), n.density(2.0));
}

TEST(Noise, InvalidParameters) {
    EXPECT_THROW(NoiseSpec::gaussian(0.0).validate(), ConfigurationError);
    EXPECT_THROW(NoiseSpec::student_t(1.0).validate(), ConfigurationError);
    EXPECT_THROW(make_rca(constant(0.5), NoiseSpec::laplace(-1.0)), ConfigurationError);
}

TEST(Tarx, DensityMatchesThresholdRegimes) {
    TarxCoefficients c{constant(0.5), constant(1.0), constant(-0.3), constant(-2.0), constant(0.0)};
    const auto m = make_tarx(c, NoiseSpec::gaussian(1.0));
    const auto n = NoiseSpec::gaussian(1.0);
    const Point x{0.0};
    EXPECT_DOUBLE_EQ(m.kernel.density(x, Point{-1.0}, Point{0.2}), n.density(0.2 - (1.0 - 0.5)));
    EXPECT_DOUBLE_EQ(m.kernel.density(x, Point{2.0}, Point{0.2}), n.density(0.2 - (-2.0 - 0.6)));
    EXPECT_DOUBLE_EQ(m.drift.lambda(x), 0.5);
    EXPECT_NEAR(m.drift.b(x), 3.0 + std::sqrt(2.0 / std::numbers::pi), 1e-15);
}

TEST(Tarx, MinorizationHoldsOnGrid) {
    TarxCoefficients c{constant(0.5), constant(1.0), constant(-0.3), constant(-2.0), constant(0.0)};
    for (auto noise : {NoiseSpec::gaussian(1.0), NoiseSpec::laplace(1.0), NoiseSpec::student_t(4.0)}) {
        const auto m = make_tarx(c, noise);
        for (double R : {0.25, 1.0, 3.0}) {
            std::vector<Point> ys;
            for (int i = -40; i <= 40; ++i) ys.push_back({R * i / 40.0});
            const auto rep = minorization_validate(m.kernel, m.minorization, R, {{0.0}}, ys);
            EXPECT_TRUE(rep.pass) << noise.name() << " R=" << R << " margin " << rep.min_margin;
            EXPECT_GT(m.minorization.eta(R, Point{0.0}), 0.0);
        }
    }
}

TEST(Tarx, StrictModeNeedsHalfUnitLevel) {
    // The strict constant f(J) with a normalized nu of height 1/(2R) overshoots
    // the kernel density when R < 1/2.
    const auto m = make_rca(constant(0.0), NoiseSpec::gaussian(1.0), EtaMode::kStrict);
    std::vector<Point> ys;
    for (int i = -20; i <= 20; ++i) ys.push_back({i / 20.0});
    EXPECT_TRUE(minorization_validate(m.kernel, m.minorization, 1.0, {{0.0}}, ys).pass);
    std::vector<Point> small;
    for (int i = -20; i <= 20; ++i) small.push_back({0.2 * i / 20.0});
    EXPECT_FALSE(minorization_validate(m.kernel, m.minorization, 0.2, {{0.0}}, small).pass);
}

TEST(Tarx, DriftCheckByMonteCarlo) {
    const auto m = make_rca([](PointView x) { return std::tanh(x[0]); }, NoiseSpec::laplace(1.0));
    std::vector<DriftPoint> pts;
    for (double x : {-2.0, 0.0, 0.5}) for (double y : {-5.0, 0.0, 3.0}) pts.push_back({{x}, {y}});
    const auto rep = drift_check(m.kernel, m.drift, pts, 20000, Stream(5));
    EXPECT_TRUE(rep.pass) << rep.estimate;
}

TEST(Farx, CompanionMatrix) {
    const Matrix A = companion_matrix({0.5, -0.2, 0.1});
    Matrix expected(3, 3);
    expected << 0.5, -0.2, 0.1, 1, 0, 0, 0, 1, 0;
    EXPECT_EQ(A, expected);
}

TEST(Farx, OrderOneDensityIsRcaDensity) {
    FarxCoefficient a = [](PointView x, PointView) { return 0.5 * std::tanh(x[0]); };
    const auto f = make_farx({a}, NoiseSpec::gaussian(1.0), {.envelopes = {[](PointView x) { return 0.5 * std::abs(std::tanh(x[0])); }}});
    const auto r = make_rca([](PointView x) { return 0.5 * std::tanh(x[0]); }, NoiseSpec::gaussian(1.0));
    for (double x : {-1.0, 0.3})
        for (double y : {-2.0, 0.5})
            for (double w : {-1.0, 0.0, 2.0})
                EXPECT_NEAR(f.kernel.density(Point{x}, Point{y}, Point{w}), r.kernel.density(Point{x}, Point{y}, Point{w}), 1e-15);
    EXPECT_TRUE(f.notes.empty());
}

std::vector<FarxCoefficient> farx2() {
    return {[](PointView x, PointView lags) { return 0.4 * std::exp(-0.1 * lags[0] * lags[0]) * std::cos(x[0]); },
            [](PointView x, PointView) { return 0.2 * std::sin(x[0]); }};
}

TEST(Farx, SkeletonSamplerMatchesScalarRecursion) {
    const auto a = farx2();
    const auto noise = NoiseSpec::laplace(1.0);
    const auto bundle = make_farx(a, noise);
    EXPECT_EQ(bundle.block, 2u);
    EXPECT_EQ(bundle.notes.size(), 1u);
    const auto env = realize(EnvironmentSpec::iid_normal(0, 1), 3, -5, 5);
    const Point y{0.7, -1.2};  // (Y_{-1}, Y_{-2})
    Stream s1(8), s2(8);
    // Skeleton tuple newest first: (X_1, X_0) drives Y_0 -> Y_1 -> Y_2.
    const Point tuple{env[0][0], env[-1][0]};
    const Point out = bundle.kernel.sample(tuple, y, s1);
    const auto scalar = farx_simulate_scalar(a, noise, env, 0, 2, {0.7, -1.2}, s2);
    EXPECT_DOUBLE_EQ(out[0], scalar[1]);
    EXPECT_DOUBLE_EQ(out[1], scalar[0]);
}

TEST(Farx, ClosedFormEtaBelowGridInfimum) {
    const auto a = farx2();
    for (auto noise : {NoiseSpec::gaussian(1.0), NoiseSpec::laplace(1.0)}) {
        const auto bundle = make_farx(a, noise);
        for (double R : {0.5, 1.0, 2.0}) {
            const Point x1{0.3}, x2{-1.1};
            const Point tuple{x2[0], x1[0]};
            const double eta = bundle.minorization.eta(R, tuple);
            const double grid = farx2_grid_eta(a, noise, R, x1, x2);
            EXPECT_GT(eta, 0.0);
            EXPECT_LE(eta, grid * (1 + 1e-12)) << noise.name() << " R=" << R;
        }
    }
}

TEST(Farx, MinorizationHoldsOnGrid) {
    const auto bundle = make_farx(farx2(), NoiseSpec::gaussian(1.0));
    const double R = 1.0;
    std::vector<Point> ys;
    for (int i = -4; i <= 4; ++i)
        for (int j = -4; j <= 4; ++j)
            if (std::abs(i) + std::abs(j) <= 4) ys.push_back({i / 4.0, j / 4.0});
    const auto rep = minorization_validate(bundle.kernel, bundle.minorization, R, {{0.2, -0.4}, {1.5, 0.0}}, ys);
    EXPECT_TRUE(rep.pass) << rep.min_margin;
}

TEST(Farx, DriftOnSkeleton) {
    const auto bundle = make_farx(farx2(), NoiseSpec::gaussian(1.0));
    std::vector<DriftPoint> pts;
    for (double y : {-3.0, 0.0, 2.0}) pts.push_back({{0.4, -0.3}, {y, 1.0}});
    const auto rep = drift_check(*bundle.one_step, bundle.drift, pts, 20000, Stream(2));
    EXPECT_TRUE(rep.pass) << rep.estimate;
}

TEST(Farx, LongerBlockHasNoDensity) {
    const auto bundle = make_farx(farx2(), NoiseSpec::gaussian(1.0), {.block = 4});
    EXPECT_EQ(bundle.block, 4u);
    EXPECT_FALSE(bundle.kernel.has_density());
    EXPECT_THROW(make_farx(farx2(), NoiseSpec::gaussian(1.0), {.block = 3}), ConfigurationError);
}

TEST(Finite, ConstantsFromMatrices) {
    Matrix P(3, 3);
    P << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.1, 0.4, 0.5;
    const auto m = make_finite({P}, {.V = {1.0, 2.0, 4.0}});
    EXPECT_EQ(m.default_R, 4.0);
    const Point x{0.0};
    // PV = (1.9, 2.4, 2.9); PV - V/2 = (1.4, 1.4, 0.9).
    EXPECT_NEAR(m.drift.b(x), 1.4, 1e-14);
    EXPECT_NEAR(m.minorization.eta(2.0, x), 0.2 + 0.3 + 0.2, 1e-15);
    EXPECT_NEAR(m.minorization.eta(4.0, x), 0.6, 1e-15);
    EXPECT_EQ(m.minorization.eta(0.5, x), 0.0);
    const auto rep = minorization_validate(m.kernel, m.minorization, 2.0, {x}, {{0.0}, {1.0}});
    EXPECT_TRUE(rep.pass);
}

TEST(Finite, DriftCheckIsExact) {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    const auto m = make_finite({P}, {.V = {1.0, 3.0}});
    const auto rep = drift_check(m.kernel, m.drift, {{{0.0}, {0.0}}, {{0.0}, {1.0}}}, 0, Stream(1));
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.halfwidth, 0.0);
    EXPECT_THROW(make_finite({P}, {.V = {1.0}}), ConfigurationError);
}


TEST(Tarx, TightEtaAtUnitLevel) {
    // J = 1 + 0 + 0.5 = 1.5 and eta = 2 R phi(J).
    const auto m = make_rca(constant(0.5), NoiseSpec::gaussian(1.0));
    const double phi = std::exp(-0.5 * 1.5 * 1.5) / std::sqrt(2.0 * std::numbers::pi);
    EXPECT_NEAR(m.minorization.eta(1.0, Point{0.0}), 2.0 * phi, 1e-15);
    EXPECT_NEAR(m.minorization.eta(1.0, Point{0.0}), 0.2590, 5e-5);
}

TEST(Tarx, RcaAndTarxShareOutputStreams) {
    ScalarFn a = [](PointView x) { return 0.8 * std::sin(x[0]); };
    const auto rca = make_rca(a, NoiseSpec::student_t(4.0));
    const auto tarx = make_tarx({a, constant(0.0), a, constant(0.0), constant(0.0)}, NoiseSpec::student_t(4.0));
    Stream s1(9), s2(9);
    Point y1{0.3}, y2{0.3};
    for (int t = 0; t < 200; ++t) {
        const Point x{0.01 * t};
        y1 = rca.kernel.sample(x, y1, s1);
        y2 = tarx.kernel.sample(x, y2, s2);
        ASSERT_EQ(y1, y2);
    }
    EXPECT_EQ(rca.drift.lambda(Point{1.0}), std::abs(a(Point{1.0})));
}

TEST(Farx, SmallEnvelopesGiveNegativeLyapunovExponent) {
    // sum_j sup b_j = 0.9 < 1: the companion product contracts.
    std::vector<FarxCoefficient> a{[](PointView x, PointView) { return 0.5 * std::cos(x[0]); },
                                   [](PointView x, PointView) { return 0.4 * std::sin(x[0]); }};
    const auto bundle = make_farx(a, NoiseSpec::gaussian(1.0));
    const auto r = realize(EnvironmentSpec::iid_normal(0.0, 1.0), 4, -5000, -1);
    EXPECT_LT(lyapunov_exponent(*bundle.companion, r, 5000), 0.0);
}

TEST(Finite, TwoStateColumnMinimum) {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    const auto m = make_finite({P});
    const Point x{0.0};
    EXPECT_NEAR(m.minorization.eta(m.default_R, x), 0.3, 1e-15);
    const auto nu = finite_nu(m.minorization, m.default_R, x, 2);
    EXPECT_NEAR(nu(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(nu(1), 1.0 / 3.0, 1e-15);
    const auto id = make_finite({Matrix::Identity(3, 3)});
    EXPECT_EQ(id.minorization.eta(id.default_R, x), 0.0);
    Matrix short_rows(2, 2);
    short_rows << 0.89, 0.1, 0.2, 0.8;
    EXPECT_THROW(make_finite({short_rows}), ConfigurationError);
}

TEST(Bundles, DefaultGridsPassDriftAndMinorization) {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    const std::vector<ModelBundle> bundles{make_rca(constant(0.5), NoiseSpec::gaussian(1.0)),
                                           make_tarx({constant(0.5), constant(1.0), constant(-0.5), constant(-1.0), constant(0.0)},
                                                     NoiseSpec::laplace(1.0)),
                                           make_finite({P})};
    for (const auto& b : bundles) {
        const std::size_t width = b.kernel.state_space().point_size();
        std::vector<Point> ys;
        std::vector<DriftPoint> pts;
        if (b.kernel.has_matrix()) {
            for (std::size_t s = 0; s < b.kernel.state_space().dim; ++s) ys.push_back({double(s)});
        } else {
            for (int i = -10; i <= 10; ++i) ys.push_back(Point(width, b.default_R * i / 10.0));
        }
        for (const auto& y : ys) pts.push_back({{0.0}, y});
        EXPECT_TRUE(drift_check(b.kernel, b.drift, pts, 5000, Stream(1)).pass) << b.name;
        EXPECT_TRUE(minorization_validate(b.kernel, b.minorization, b.default_R, {{0.0}}, ys).pass) << b.name;
    }
}

}  // namespace
}  // namespace mcre::models
