#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flight/geometry.hpp"

namespace flight {

/// 1.15 · 2/√M: the radius of a cap of area 4π/M, inflated so neighbouring
/// bins overlap and leave no holes.
double bin_radius(std::size_t count);

/// Point j of the M-point golden-angle spiral:
///   z_j = 1 − (2j+1)/M,  φ_j = 2π·frac(j·(1 − 1/ϕ)).
Vec3 fibonacci_point(std::size_t index, std::size_t count);

/// Near-uniform bin centers on S². Points are stored structure-of-arrays so
/// the voting kernels can stream them; the lattice is immutable once built.
class FibonacciLattice {
 public:
  /// Radius defaults to bin_radius(count). Throws for count < 2.
  explicit FibonacciLattice(std::size_t count);
  FibonacciLattice(std::size_t count, double radius);

  std::size_t size() const { return xs_.size(); }
  double radius() const { return radius_; }

  UnitVector3 point(std::size_t j) const { return UnitVector3::assume_unit({xs_[j], ys_[j], zs_[j]}); }

  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::span<const double> zs() const { return zs_; }

  /// Smallest contiguous index range [first, last) that contains every point
  /// whose z lies in [z_lo, z_hi]. Indices run from the north pole south.
  std::pair<std::size_t, std::size_t> index_range_for_z(double z_lo, double z_hi) const;

 private:
  std::vector<double> xs_, ys_, zs_;
  double radius_;
};

inline FibonacciLattice generate_lattice(std::size_t count) { return FibonacciLattice(count); }

/// Bins of a (dense) lattice lying near a point, typically a sparse winner.
struct BinRegion {
  std::size_t center_index = 0;          // member closest to the query center
  std::vector<std::size_t> member_indices;  // ascending
};

/// The membership test shared by the region builders: angular distance from
/// `center` ≤ bound. Dot products settle everything outside a thin shell
/// around the bound; inside it the exact distance decides.
struct AngularCap {
  AngularCap(const UnitVector3& center, double bound);

  bool contains(const Vec3& p) const {
    const double c = dot(p, center.vec());
    if (c < min_dot) return false;
    return c > sure_dot || angular_distance(UnitVector3::assume_unit(p), center) <= bound;
  }

  UnitVector3 center;
  double bound;
  double min_dot, sure_dot;
};

/// Every bin with angular distance ≤ bound from `center`, in index order.
/// Throws ErrorCode::kRegionTooSmall when nothing qualifies.
BinRegion bins_near(const FibonacciLattice& lattice, const UnitVector3& center, double bound);

/// Index of the lattice point closest to `v` (lowest index on ties).
std::size_t nearest_bin(const FibonacciLattice& lattice, const UnitVector3& v);

/// Partition of a lattice into compact groups: every point joins the nearest
/// point of a coarser lattice with about size()/group_size points. Each group
/// keeps the angular radius of the cap around its center that holds all of
/// its members, which lets a vote discard a whole group at once.
class LatticeBlocks {
 public:
  LatticeBlocks(const FibonacciLattice& lattice, std::size_t group_size);

  std::size_t count() const { return radius_.size(); }
  std::size_t lattice_size() const { return block_of_.size(); }
  std::size_t block_of(std::size_t point) const { return block_of_[point]; }
  const Vec3& center(std::size_t block) const { return centers_[block]; }
  double radius(std::size_t block) const { return radius_[block]; }
  double max_radius() const { return max_radius_; }
  /// Lattice points of `block`, ascending.
  std::span<const std::uint32_t> members(std::size_t block) const {
    return std::span<const std::uint32_t>(members_).subspan(offsets_[block], offsets_[block + 1] - offsets_[block]);
  }

 private:
  std::vector<std::uint32_t> block_of_;
  std::vector<std::uint32_t> offsets_, members_;
  double max_radius_ = 0.0;
  std::vector<Vec3> centers_;
  std::vector<double> radius_;
};

}  // namespace flight
