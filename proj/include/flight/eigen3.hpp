#pragma once

#include <array>

#include "flight/geometry.hpp"

namespace flight {

struct SymmetricEigen3 {
  std::array<double, 3> values{};  // ascending
  std::array<Vec3, 3> vectors{};   // unit, vectors[i] pairs with values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi on a symmetric 3×3 matrix; sweeps until the off-diagonal
/// Frobenius norm drops below 1e-12·max(1, ‖A‖). Only the upper triangle is read.
SymmetricEigen3 symmetric_eigen3(const Mat3& a);

}  // namespace flight
