#include "mcre/error.hpp"
#include "mcre/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace mcre::oracle {
namespace {

Matrix two_state() {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    return P;
}

Matrix three_state() {
    Matrix P(3, 3);
    P << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.1, 0.4, 0.5;
    return P;
}

TEST(Oracle, TwoStateTvDecaysAtSecondEigenvalue) {
    // The second eigenvalue of [[0.9, 0.1], [0.2, 0.8]] is 0.7, and
    // delta_0 P^n - delta_1 P^n = 0.7^n (1, -1).
    const Matrix P = two_state();
    std::vector<Matrix> mats;
    for (int n = 1; n <= 30; ++n) {
        mats.push_back(P);
        const double tv = exact_tv(exact_backward(mats, 0, 2), exact_backward(mats, 1, 2));
        EXPECT_NEAR(tv, std::pow(0.7, n), 1e-12) << n;
    }
}

TEST(Oracle, EmptyProductIsDirac) {
    const auto d = exact_backward({}, 2, 4);
    EXPECT_EQ(d.size(), 4u);
    EXPECT_EQ(d.masses(2), 1.0);
    EXPECT_EQ(d.masses.sum(), 1.0);
}

TEST(Oracle, ArgumentChecks) {
    std::vector<Matrix> mats{two_state(), three_state()};
    EXPECT_THROW(exact_backward(mats, 0, 2), ArgumentError);
    EXPECT_THROW(exact_tv(DistributionVector::dirac(2, 0), DistributionVector::dirac(3, 0)), ArgumentError);
    EXPECT_THROW(DistributionVector::dirac(2, 5), ArgumentError);
    EXPECT_THROW(exact_backward({}, 0, kMaxStates + 1), ArgumentError);
    DistributionVector bad{Eigen::RowVectorXd::Constant(2, 0.6)};
    EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(Oracle, ColumnMinimumMinorization) {
    const Matrix P = three_state();
    const auto [eta, nu] = column_minimum_minorization(P, {true, true, true});
    EXPECT_NEAR(eta, 0.1 + 0.3 + 0.2, 1e-15);
    EXPECT_NEAR(nu.masses(0), 0.1 / 0.6, 1e-15);
    const auto [eta01, nu01] = column_minimum_minorization(P, {true, true, false});
    EXPECT_NEAR(eta01, 0.2 + 0.3 + 0.2, 1e-15);
    const auto [eta0, nu0] = column_minimum_minorization(P, {false, false, false});
    EXPECT_EQ(eta0, 0.0);
    EXPECT_NEAR(nu0.masses(1), 1.0 / 3.0, 1e-15);
}

TEST(Oracle, CoupledMarginalsAreTheChain) {
    const Matrix P = three_state();
    const std::vector<bool> small{true, true, false};
    const auto [eta, nu] = column_minimum_minorization(P, small);
    const auto C = exact_coupled_matrix(P, eta, nu, small);
    for (Eigen::Index i = 0; i < C.K.rows(); ++i) EXPECT_NEAR(C.K.row(i).sum(), 1.0, 1e-14);

    DistributionVector law = C.start(0, 2);
    std::vector<Matrix> mats;
    for (int n = 1; n <= 15; ++n) {
        law.masses = law.masses * C.K;
        mats.push_back(P);
        const auto p0 = exact_backward(mats, 0, 3), p2 = exact_backward(mats, 2, 3);
        EXPECT_LT((C.first_marginal(law).masses - p0.masses).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((C.second_marginal(law).masses - p2.masses).cwiseAbs().maxCoeff(), 1e-14);
        // Coupling inequality.
        EXPECT_GE(C.non_coalesced_mass(law) + 1e-14, exact_tv(p0, p2));
    }
}

TEST(Oracle, CoalescedPairsStayTogether) {
    const Matrix P = three_state();
    const auto [eta, nu] = column_minimum_minorization(P, {true, true, true});
    const auto C = exact_coupled_matrix(P, eta, nu, {true, true, true});
    for (std::size_t i = 0; i < 3; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < 3; ++j) diag += C.K(C.index(i, i), C.index(j, j));
        EXPECT_NEAR(diag, 1.0, 1e-15);
    }
    // From an unequal pair inside the small set, coalescence has probability at least eta.
    double merge = 0.0;
    for (std::size_t j = 0; j < 3; ++j) merge += C.K(C.index(0, 1), C.index(j, j));
    EXPECT_GE(merge + 1e-15, eta);
}

TEST(Oracle, CoupledMatrixRejectsOversizedEta) {
    const Matrix P = three_state();
    const auto [eta, nu] = column_minimum_minorization(P, {true, true, true});
    EXPECT_THROW(exact_coupled_matrix(P, std::min(0.99, eta * 1.5), nu, {true, true, true}), MinorizationViolation);
}


TEST(Oracle, SmallWorkedExamples) {
    const Matrix P = two_state();
    std::vector<Matrix> mats(50, P);
    for (std::size_t z : {0u, 1u}) {
        const auto d = exact_backward(mats, z, 2);
        EXPECT_NEAR(d.masses(0), 2.0 / 3.0, 1e-7);
    }
    std::vector<Matrix> ids(5, Matrix::Identity(3, 3));
    EXPECT_EQ(exact_backward(ids, 1, 3).masses(1), 1.0);
    EXPECT_EQ(exact_tv(DistributionVector::dirac(2, 0), DistributionVector::dirac(2, 1)), 1.0);
    EXPECT_EQ(exact_tv(DistributionVector::dirac(2, 0), DistributionVector::dirac(2, 0)), 0.0);
    DistributionVector p{Eigen::RowVector2d(0.7, 0.3)}, q{Eigen::RowVector2d(0.4, 0.6)};
    EXPECT_NEAR(exact_tv(p, q), 0.3, 1e-15);
}

TEST(Oracle, ZeroEtaGivesIndependentProduct) {
    const Matrix P = three_state();
    DistributionVector nu{Eigen::RowVectorXd::Constant(3, 1.0 / 3.0)};
    const auto C = exact_coupled_matrix(P, 0.0, nu, {true, true, true});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            for (std::size_t k = 0; k < 3; ++k)
                for (std::size_t l = 0; l < 3; ++l)
                    EXPECT_NEAR(C.K(C.index(i, j), C.index(k, l)), P(i, k) * P(j, l), 1e-15);
        }
}

TEST(Oracle, CouplingInequalityUpToFifty) {
    const Matrix P = two_state();
    const auto [eta, nu] = column_minimum_minorization(P, {true, true});
    EXPECT_NEAR(eta, 0.3, 1e-15);
    const auto C = exact_coupled_matrix(P, eta, nu, {true, true});
    auto law = C.start(0, 1);
    for (int n = 1; n <= 50; ++n) {
        law.masses = law.masses * C.K;
        EXPECT_GE(C.non_coalesced_mass(law) + 1e-15, std::pow(0.7, n) - 1e-12);
    }
}

}  // namespace
}  // namespace mcre::oracle
