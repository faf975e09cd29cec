#include "mcre/oracle.hpp"

#include "mcre/error.hpp"
#include "mcre/kernel.hpp"

#include <cmath>

namespace mcre::oracle {
namespace {
constexpr const char* kModule = "oracle";
}

DistributionVector DistributionVector::dirac(std::size_t states, std::size_t z) {
    if (z >= states) throw ArgumentError(kModule, "dirac: state outside the state space");
    DistributionVector d;
    d.masses = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(states));
    d.masses(static_cast<Eigen::Index>(z)) = 1.0;
    return d;
}

void DistributionVector::validate() const {
    if ((masses.array() < 0.0).any()) throw ArgumentError(kModule, "distribution has negative mass");
    if (std::abs(masses.sum() - 1.0) > 1e-12) throw ArgumentError(kModule, "distribution does not sum to 1");
}

DistributionVector exact_backward(std::span<const Matrix> matrices, std::size_t z, std::size_t states) {
    if (states > kMaxStates) throw ArgumentError(kModule, "oracle state space capped at 64 states");
    DistributionVector d = DistributionVector::dirac(states, z);
    for (const Matrix& m : matrices) {
        if (m.rows() != d.masses.size() || m.cols() != d.masses.size())
            throw ArgumentError(kModule, "exact_backward: matrix dimension mismatch");
        d.masses = d.masses * m;
    }
    return d;
}

double exact_tv(const DistributionVector& p, const DistributionVector& q) {
    if (p.size() != q.size()) throw ArgumentError(kModule, "exact_tv: length mismatch");
    return 0.5 * (p.masses - q.masses).cwiseAbs().sum();
}

DistributionVector CoupledMatrix::start(std::size_t z, std::size_t z_bar) const {
    return DistributionVector::dirac(states * states, index(z, z_bar));
}

DistributionVector CoupledMatrix::first_marginal(const DistributionVector& pair_law) const {
    DistributionVector d;
    d.masses = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(states));
    for (std::size_t i = 0; i < states; ++i)
        for (std::size_t j = 0; j < states; ++j)
            d.masses(static_cast<Eigen::Index>(i)) += pair_law.masses(static_cast<Eigen::Index>(index(i, j)));
    return d;
}

DistributionVector CoupledMatrix::second_marginal(const DistributionVector& pair_law) const {
    DistributionVector d;
    d.masses = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(states));
    for (std::size_t i = 0; i < states; ++i)
        for (std::size_t j = 0; j < states; ++j)
            d.masses(static_cast<Eigen::Index>(j)) += pair_law.masses(static_cast<Eigen::Index>(index(i, j)));
    return d;
}

double CoupledMatrix::non_coalesced_mass(const DistributionVector& pair_law) const {
    double s = 0.0;
    for (std::size_t i = 0; i < states; ++i)
        for (std::size_t j = 0; j < states; ++j)
            if (i != j) s += pair_law.masses(static_cast<Eigen::Index>(index(i, j)));
    return s;
}

CoupledMatrix exact_coupled_matrix(const Matrix& P, double eta, const DistributionVector& nu,
                                   const std::vector<bool>& small_set) {
    const auto n = static_cast<std::size_t>(P.rows());
    if (P.rows() != P.cols() || n == 0) throw ArgumentError(kModule, "exact_coupled_matrix: P must be square");
    if (n > kMaxStates) throw ArgumentError(kModule, "oracle state space capped at 64 states");
    if (nu.size() != n || small_set.size() != n) throw ArgumentError(kModule, "exact_coupled_matrix: size mismatch");
    if (!(eta >= 0.0) || !(eta < 1.0)) throw ArgumentError(kModule, "exact_coupled_matrix: eta must lie in [0, 1)");

    CoupledMatrix c;
    c.states = n;
    c.K = Matrix::Zero(static_cast<Eigen::Index>(n * n), static_cast<Eigen::Index>(n * n));
    Matrix Q = P;
    for (std::size_t i = 0; i < n; ++i)
        if (small_set[i]) Q.row(static_cast<Eigen::Index>(i)) = finite_residual_row(P.row(static_cast<Eigen::Index>(i)), eta, nu.masses);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto from = static_cast<Eigen::Index>(c.index(i, j));
            if (i == j) {
                for (std::size_t k = 0; k < n; ++k)
                    c.K(from, static_cast<Eigen::Index>(c.index(k, k))) += P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                continue;
            }
            const bool inside = small_set[i] && small_set[j];
            const Matrix& A = inside ? Q : P;
            const double w = inside ? 1.0 - eta : 1.0;
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l)
                    c.K(from, static_cast<Eigen::Index>(c.index(k, l))) +=
                        w * A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) *
                        A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
            if (inside)
                for (std::size_t k = 0; k < n; ++k)
                    c.K(from, static_cast<Eigen::Index>(c.index(k, k))) += eta * nu.masses(static_cast<Eigen::Index>(k));
        }
    }
    return c;
}

std::pair<double, DistributionVector> column_minimum_minorization(const Matrix& P, const std::vector<bool>& rows) {
    const auto n = P.cols();
    Eigen::RowVectorXd mins = Eigen::RowVectorXd::Constant(n, std::numeric_limits<double>::infinity());
    bool any = false;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        if (!rows[static_cast<std::size_t>(i)]) continue;
        any = true;
        mins = mins.cwiseMin(P.row(i));
    }
    DistributionVector nu;
    if (!any) mins.setZero();
    const double eta = mins.sum();
    if (eta > 0.0)
        nu.masses = mins / eta;
    else
        nu.masses = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return {eta, nu};
}

}  // namespace mcre::oracle
