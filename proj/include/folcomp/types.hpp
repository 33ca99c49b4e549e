#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace folcomp
{

/// Largest algebra dimension the library handles. Small models only, so vectors
/// and matrices live on the stack.
inline constexpr int kMaxDim = 16;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Coefficients of a left-invariant field (or a left-trivialized tangent vector)
/// in the model basis.
using AlgebraVector = Vec;

inline Vec zeros(int n) { return Vec::Zero(n); }

inline Vec unit(int n, int i)
{
  Vec v = Vec::Zero(n);
  v[i] = 1.0;
  return v;
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace folcomp
