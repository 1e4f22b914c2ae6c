#pragma once

#include <Eigen/Core>

namespace jaam {

// Upper bound on state and Wiener dimension. Small fixed-capacity storage
// keeps per-step arithmetic free of heap traffic.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                             kMaxDim, kMaxDim>;

}  // namespace jaam
