#include "flight/eigen3.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flight {

namespace {

double off_diagonal_norm(const Mat3& a) {
  return std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
}

double frobenius_norm(const Mat3& a) {
  double s = 0.0;
  for (double v : a.m) s += v * v;
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen3 symmetric_eigen3(const Mat3& input) {
  Mat3 a = input;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) a(i, j) = a(j, i);
  Mat3 v = Mat3::identity();

  const double tolerance = 1e-12 * std::max(1.0, frobenius_norm(a));
  constexpr int kMaxSweeps = 64;
  constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

  SymmetricEigen3 out;
  for (; out.sweeps < kMaxSweeps && off_diagonal_norm(a) >= tolerance; ++out.sweeps) {
    for (const auto& pq : kPairs) {
      const int p = pq[0], q = pq[1];
      const double apq = a(p, q);
      if (apq == 0.0) continue;
      // Rotation angle that zeroes a(p,q), taking the smaller root for stability.
      const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
      const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;

      Mat3 j = Mat3::identity();
      j(p, p) = c;
      j(q, q) = c;
      j(p, q) = s;
      j(q, p) = -s;
      a = j.transpose() * a * j;
      a(p, q) = 0.0;
      a(q, p) = 0.0;
      v = v * j;
    }
  }

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int l, int r) { return a(l, l) < a(r, r); });
  for (int i = 0; i < 3; ++i) {
    const int k = order[static_cast<std::size_t>(i)];
    out.values[static_cast<std::size_t>(i)] = a(k, k);
    const Vec3 col{v(0, k), v(1, k), v(2, k)};
    out.vectors[static_cast<std::size_t>(i)] = col / norm(col);
  }
  return out;
}

}  // namespace flight
