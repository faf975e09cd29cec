#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace mcre {

/// A point of the chain state space E or of the environment space F.
/// Finite label sets are encoded as one coordinate holding the label.
using Point = std::vector<double>;
using PointView = std::span<const double>;

using Matrix = Eigen::MatrixXd;

/// Real-valued function of one point (drift function V, observables, ...).
using ScalarFn = std::function<double(PointView)>;

inline Point to_point(PointView v) { return Point(v.begin(), v.end()); }

inline std::size_t label_of(PointView v) { return static_cast<std::size_t>(v[0] + 0.5); }

}  // namespace mcre
