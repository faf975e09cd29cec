#pragma once

#include "mcre/types.hpp"

#include <span>
#include <vector>

namespace mcre::oracle {

/// Largest state space the oracle accepts.
inline constexpr std::size_t kMaxStates = 64;

/// Probability vector over a finite state space.
struct DistributionVector {
    Eigen::RowVectorXd masses;

    static DistributionVector dirac(std::size_t states, std::size_t z);
    std::size_t size() const { return static_cast<std::size_t>(masses.size()); }
    /// ArgumentError unless nonnegative and summing to 1 within 1e-12.
    void validate() const;
};

/// delta_z M_1 M_2 ... M_k. `states` fixes the dimension (needed when
/// the list is empty). ArgumentError on non-conformable matrices.
DistributionVector exact_backward(std::span<const Matrix> matrices, std::size_t z, std::size_t states);

/// Half the l1 distance. ArgumentError on length mismatch.
double exact_tv(const DistributionVector& p, const DistributionVector& q);

/// Transition matrix of the coupled chain on E x E. Pair (i, j) has index
/// i * n + j; the diagonal pairs (i, i) form the coalesced copy of E.
struct CoupledMatrix {
    Matrix K;
    std::size_t states = 0;

    std::size_t index(std::size_t i, std::size_t j) const { return i * states + j; }
    DistributionVector start(std::size_t z, std::size_t z_bar) const;
    DistributionVector first_marginal(const DistributionVector& pair_law) const;
    DistributionVector second_marginal(const DistributionVector& pair_law) const;
    double non_coalesced_mass(const DistributionVector& pair_law) const;
};

/// Exact coupled transition with the three branches: equal states move
/// together under P; unequal pairs with both states in `small_set` merge
/// with probability eta into nu and otherwise move independently under the
/// residual Q; all other unequal pairs move independently under P.
/// MinorizationViolation when P - eta nu is negative on a small-set row.
CoupledMatrix exact_coupled_matrix(const Matrix& P, double eta, const DistributionVector& nu,
                                   const std::vector<bool>& small_set);

/// Column-minimum minorization of the rows in `rows`: eta = sum_k min_i P(i,k),
/// nu proportional to the minima (uniform when eta == 0).
std::pair<double, DistributionVector> column_minimum_minorization(const Matrix& P, const std::vector<bool>& rows);

}  // namespace mcre::oracle
