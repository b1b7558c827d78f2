#include "flight/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flight/error.hpp"

namespace flight {

namespace {

// 1 − 1/ϕ, the golden angle as a fraction of a full turn.
const double kGoldenTurn = 1.0 - 2.0 / (1.0 + std::sqrt(5.0));

void require_count(std::size_t count) {
  if (count < 2) throw Error(ErrorCode::kInvalidArgument, "lattice needs at least 2 points");
}

}  // namespace

double bin_radius(std::size_t count) {
  require_count(count);
  return 1.15 * 2.0 / std::sqrt(static_cast<double>(count));
}

Vec3 fibonacci_point(std::size_t index, std::size_t count) {
  const double m = static_cast<double>(count);
  const double j = static_cast<double>(index);
  const double z = 1.0 - (2.0 * j + 1.0) / m;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  // Reduce the turn count before scaling by 2π so large indices keep precision.
  double turns = j * kGoldenTurn;
  turns -= std::floor(turns);
  const double phi = 2.0 * kPi * turns;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

FibonacciLattice::FibonacciLattice(std::size_t count) : FibonacciLattice(count, bin_radius(count)) {}

FibonacciLattice::FibonacciLattice(std::size_t count, double radius) : radius_(radius) {
  require_count(count);
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorCode::kInvalidArgument, "lattice radius must be positive");
  xs_.resize(count);
  ys_.resize(count);
  zs_.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const UnitVector3 p(fibonacci_point(j, count));
    xs_[j] = p.x();
    ys_[j] = p.y();
    zs_[j] = p.z();
  }
}

std::pair<std::size_t, std::size_t> FibonacciLattice::index_range_for_z(double z_lo, double z_hi) const {
  const double m = static_cast<double>(size());
  // z_j = 1 − (2j+1)/M  ⇔  j = (M(1 − z) − 1)/2; widen by a couple of indices
  // to absorb rounding in both the formula and the stored coordinates.
  const double first = std::floor((m * (1.0 - z_hi) - 1.0) / 2.0) - 2.0;
  const double last = std::ceil((m * (1.0 - z_lo) - 1.0) / 2.0) + 3.0;
  const auto clamp_index = [&](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, m));
  };
  return {clamp_index(first), clamp_index(last)};
}

// The margins keep both dot tests strictly on the safe side of the exact one.
AngularCap::AngularCap(const UnitVector3& c, double b)
    : center(c), bound(b), min_dot(std::cos(b) - 1e-9), sure_dot(std::cos(b) + 1e-9) {}

BinRegion bins_near(const FibonacciLattice& lattice, const UnitVector3& center, double bound) {
  if (!(bound > 0.0) || bound > kPi)
    throw Error(ErrorCode::kInvalidArgument, "region bound must lie in (0, π]");

  const double polar = std::acos(std::clamp(center.z(), -1.0, 1.0));
  const double z_hi = std::cos(std::max(0.0, polar - bound)) + 1e-12;
  const double z_lo = std::cos(std::min(kPi, polar + bound)) - 1e-12;
  const auto [first, last] = lattice.index_range_for_z(z_lo, z_hi);

  const AngularCap cap(center, bound);
  const double* xs = lattice.xs().data();
  const double* ys = lattice.ys().data();
  const double* zs = lattice.zs().data();
  BinRegion region;
  double best = std::numeric_limits<double>::infinity();
  double best_dot = -2.0;
  for (std::size_t j = first; j < last; ++j) {
    const double c = xs[j] * center.x() + ys[j] * center.y() + zs[j] * center.z();
    if (c < cap.min_dot) continue;
    // Angle falls as the dot product grows, so only candidates whose dot is
    // within rounding of the best so far can be the closest member.
    const bool contender = c >= best_dot - 1e-9;
    const double d = (c > cap.sure_dot && !contender) ? 0.0 : angular_distance(lattice.point(j), center);
    if (c <= cap.sure_dot && d > bound) continue;
    region.member_indices.push_back(j);
    if (contender && d < best) {
      best = d;
      region.center_index = j;
    }
    best_dot = std::max(best_dot, c);
  }
  if (region.member_indices.empty())
    throw Error(ErrorCode::kRegionTooSmall, "region too small: no bins within " + std::to_string(bound) + " rad");
  return region;
}

std::size_t nearest_bin(const FibonacciLattice& lattice, const UnitVector3& v) {
  // Start from the coverage radius and widen until the band holds a point.
  for (double bound = 2.0 * bin_radius(lattice.size());; bound *= 2.0) {
    if (bound >= kPi) bound = kPi;
    try {
      return bins_near(lattice, v, bound).center_index;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRegionTooSmall || bound >= kPi) throw;
    }
  }
}

LatticeBlocks::LatticeBlocks(const FibonacciLattice& lattice, std::size_t group_size) {
  if (group_size == 0) throw Error(ErrorCode::kInvalidArgument, "group size must be positive");
  const std::size_t groups = std::max<std::size_t>(2, lattice.size() / group_size);
  const FibonacciLattice coarse(groups);
  centers_.resize(groups);
  radius_.assign(groups, 0.0);
  for (std::size_t b = 0; b < groups; ++b) centers_[b] = coarse.point(b).vec();
  block_of_.resize(lattice.size());
  for (std::size_t j = 0; j < lattice.size(); ++j) {
    const UnitVector3 p = lattice.point(j);
    const std::size_t b = nearest_bin(coarse, p);
    block_of_[j] = static_cast<std::uint32_t>(b);
    radius_[b] = std::max(radius_[b], angular_distance(p, coarse.point(b)));
  }
  max_radius_ = *std::max_element(radius_.begin(), radius_.end());

  offsets_.assign(groups + 1, 0);
  for (std::uint32_t b : block_of_) ++offsets_[b + 1];
  for (std::size_t b = 0; b < groups; ++b) offsets_[b + 1] += offsets_[b];
  members_.resize(lattice.size());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t j = 0; j < lattice.size(); ++j) members_[fill[block_of_[j]]++] = static_cast<std::uint32_t>(j);
}

}  // namespace flight
