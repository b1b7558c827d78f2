#pragma once

// Hough voting on the sphere: every great circle votes for the lattice bins it
// crosses, weighted by the length of the chord it cuts through the bin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flight/geometry.hpp"
#include "flight/lattice.hpp"

namespace flight {

/// 2√(r² − d²) for d < r, else 0.
double chord_weight(double distance, double radius);

/// Angular distance between a great circle and a point: π/2 − arccos(|n·s|).
double circle_bin_distance(const UnitVector3& normal, const UnitVector3& bin_center);

/// Chord lengths sampled at the midpoints of k equal slices of [0, r).
///
/// Entries are rounded to multiples of 2⁻⁴⁰ so that sums of them are exact in
/// 64-bit fixed point: accumulator totals then do not depend on the order in
/// which circles are voted or on how the work is split between threads.
class ChordLookupTable {
 public:
  static constexpr std::size_t kDefaultSubdivisions = 1024;
  static constexpr int kFixedBits = 40;

  ChordLookupTable(double radius, std::size_t subdivisions = kDefaultSubdivisions);

  double radius() const { return radius_; }
  std::size_t subdivisions() const { return table_.size(); }
  std::span<const double> table() const { return table_; }

  /// Slot floor(d·k/r) for d < r, or subdivisions() when the circle misses.
  std::size_t slot(double distance) const;
  /// table[slot(d)], or 0 on a miss.
  double lookup(double distance) const;

  /// Same slot as slot(circle_bin_distance(n, s)) given c = |n·s|, without
  /// the arccos: c is located among precomputed breakpoints.
  std::size_t slot_for_abs_cosine(double abs_cosine) const {
    if (!(abs_cosine < cutoff_)) return table_.size();
    return slot_below_cutoff(abs_cosine);
  }
  /// Smallest |n·s| for which the circle misses the bin.
  double cutoff() const { return cutoff_; }

  std::int64_t fixed_weight(std::size_t slot) const { return fixed_[slot]; }

  static double from_fixed(std::int64_t v) { return std::ldexp(static_cast<double>(v), -kFixedBits); }

  /// Requires 0 ≤ abs_cosine < cutoff().
  std::size_t slot_below_cutoff(double abs_cosine) const {
    const Cell& e = cell(abs_cosine);
    if (e.slot == kSearch) return search_slot(abs_cosine);
    return e.slot + (abs_cosine >= e.split ? 1 : 0);
  }
  /// fixed_weight(slot_below_cutoff(c)) with one table access on the fast path.
  std::int64_t fixed_weight_below_cutoff(double abs_cosine) const {
    const Cell& e = cell(abs_cosine);
    if (e.slot == kSearch) return fixed_[search_slot(abs_cosine)];
    return e.weight[abs_cosine >= e.split ? 1 : 0];
  }

 private:
  // Every |n·s| that cell(·) sends to a cell lies in at most two slots:
  // below `split` the first, from `split` on the next. Cells whose
  // floating-point domain straddles more breakpoints are marked kSearch.
  static constexpr std::uint32_t kSearch = ~std::uint32_t{0};
  struct Cell {
    double split;
    std::int64_t weight[2];
    std::uint32_t slot;
  };

  const Cell& cell(double abs_cosine) const {
    // Signed conversion: the unsigned one costs a branch on x86.
    const auto g = static_cast<std::size_t>(static_cast<std::int64_t>(abs_cosine * cell_scale_));
    return cells_[std::min(g, cells_.size() - 1)];
  }
  std::size_t search_slot(double abs_cosine) const;

  double radius_;
  std::vector<double> table_;
  std::vector<std::int64_t> fixed_;  // k weights and a trailing 0
  // breakpoints_[i] is the smallest |n·s| mapping to slot ≥ i; the last entry
  // equals cutoff_ and a sentinel +inf follows it.
  std::vector<double> breakpoints_;
  std::vector<Cell> cells_;
  double cell_scale_ = 0.0;
  double cutoff_ = 0.0;
};

inline ChordLookupTable build_lookup(double radius, std::size_t subdivisions) {
  return ChordLookupTable(radius, subdivisions);
}

/// The bins a vote runs over: a whole lattice (borrowed) or a gathered subset
/// of one. Coordinates are contiguous either way.
///
/// The grouped variants reorder the bins block by block so the vote can skip
/// every block a circle provably misses; totals are unchanged, only local
/// indices differ (id() maps back).
class BinSet {
 public:
  struct Group {
    Vec3 center;
    double radius = 0.0;  // max angular distance from center to a member
    std::uint32_t begin = 0, end = 0;
  };

  static BinSet whole(const FibonacciLattice& lattice);
  static BinSet subset(const FibonacciLattice& lattice, std::span<const std::size_t> ids);
  static BinSet whole(const FibonacciLattice& lattice, const LatticeBlocks& blocks);
  static BinSet subset(const FibonacciLattice& lattice, std::span<const std::size_t> ids,
                       const LatticeBlocks& blocks);
  /// The bins of bins_near(lattice, center, bound), grouped by block; found
  /// by visiting only the blocks that can reach the cap. Throws
  /// ErrorCode::kRegionTooSmall when nothing qualifies.
  static BinSet near(const FibonacciLattice& lattice, const LatticeBlocks& blocks, const UnitVector3& center,
                     double bound);

  BinSet(BinSet&&) = default;
  BinSet& operator=(BinSet&&) = default;
  BinSet(const BinSet&) = delete;
  BinSet& operator=(const BinSet&) = delete;

  std::size_t size() const { return xs_.size(); }
  /// Lattice id of local bin `local`.
  std::size_t id(std::size_t local) const { return ids_.empty() ? local : ids_[local]; }
  UnitVector3 point(std::size_t local) const {
    return UnitVector3::assume_unit({xs_[local], ys_[local], zs_[local]});
  }
  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::span<const double> zs() const { return zs_; }
  std::span<const Group> groups() const { return groups_; }

 private:
  BinSet() = default;
  void gather(const FibonacciLattice& lattice);

  std::vector<double> storage_;
  std::vector<Group> groups_;
  std::vector<std::size_t> ids_;
  std::span<const double> xs_, ys_, zs_;
};

/// Candidate lists for a fixed BinSet: circle normals are binned on a cube
/// map, and each cell keeps the bins that some circle with a normal in that
/// cell could reach within `radius`. A vote through the index only examines
/// those candidates and yields exactly the totals of the exhaustive scan.
class ReachIndex {
 public:
  static constexpr std::size_t kDefaultCellsPerEdge = 32;

  ReachIndex(BinSet bins, double radius, std::size_t cells_per_edge = kDefaultCellsPerEdge);

  const BinSet& bins() const { return bins_; }
  double radius() const { return radius_; }
  std::size_t cell_count() const { return offsets_.size() - 1; }
  std::size_t cell_of(const Vec3& normal) const;
  std::span<const std::uint32_t> candidates(const Vec3& normal) const {
    const std::size_t c = cell_of(normal);
    return std::span<const std::uint32_t>(members_).subspan(offsets_[c], offsets_[c + 1] - offsets_[c]);
  }

 private:
  BinSet bins_;
  double radius_;
  std::size_t edge_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> members_;
};

/// Per-bin vote totals g_j and the number of circles with nonzero weight.
class Accumulator {
 public:
  Accumulator() = default;
  explicit Accumulator(std::size_t bins) : fixed_(bins, 0), contributors_(bins, 0) {}

  std::size_t size() const { return fixed_.size(); }
  double total(std::size_t j) const { return ChordLookupTable::from_fixed(fixed_[j]); }
  std::int64_t raw_total(std::size_t j) const { return fixed_[j]; }
  std::uint32_t contributors(std::size_t j) const { return contributors_[j]; }
  std::vector<double> totals() const;
  std::size_t circles_voted() const { return circles_voted_; }

  void add(std::size_t j, std::int64_t fixed_weight) {
    fixed_[j] += fixed_weight;
    ++contributors_[j];
  }
  /// Branch-free form for kernels that also feed misses (weight 0, count 0).
  void add(std::size_t j, std::int64_t fixed_weight, std::uint32_t count) {
    fixed_[j] += fixed_weight;
    contributors_[j] += count;
  }
  void note_circles(std::size_t n) { circles_voted_ += n; }
  void merge(const Accumulator& other);

  /// Lowest index holding the largest total, or nullopt when all are zero.
  std::optional<std::size_t> argmax() const;

 private:
  std::vector<std::int64_t> fixed_;
  std::vector<std::uint32_t> contributors_;
  std::size_t circles_voted_ = 0;
};

struct VoteOptions {
  unsigned threads = 1;
};

/// Streams every circle against every bin of `bins`, adding into `acc`
/// (which must be sized to bins.size()). Circles are split into contiguous
/// ranges across workers; partial accumulators merge in worker order.
void vote_into(Accumulator& acc, std::span<const GreatCircle> circles, const BinSet& bins,
               const ChordLookupTable& table, VoteOptions options = {});

Accumulator vote(std::span<const GreatCircle> circles, const BinSet& bins, const ChordLookupTable& table,
                 VoteOptions options = {});

/// As above over index.bins(); requires table.radius() ≤ index.radius().
void vote_into(Accumulator& acc, std::span<const GreatCircle> circles, const ReachIndex& index,
               const ChordLookupTable& table, VoteOptions options = {});

Accumulator vote(std::span<const GreatCircle> circles, const FibonacciLattice& lattice,
                 const ChordLookupTable& table, VoteOptions options = {});

struct VoteOutcome {
  std::size_t winning_index = 0;  // lattice id
  std::size_t local_index = 0;    // position within the voted BinSet
  std::pair<UnitVector3, UnitVector3> heading_pair{UnitVector3(0, 0, 1), UnitVector3(0, 0, -1)};
  std::vector<std::size_t> inlier_circle_indices;
};

/// Argmax bin (ties → lowest lattice id), its antipodal pair, and the circles that
/// cross it. Throws ErrorCode::kNoConsensus for an all-zero accumulator.
VoteOutcome winning_bin(const Accumulator& acc, const BinSet& bins, std::span<const GreatCircle> circles,
                        const ChordLookupTable& table);

VoteOutcome winning_bin(const Accumulator& acc, const FibonacciLattice& lattice,
                        std::span<const GreatCircle> circles, const ChordLookupTable& table);

struct SignDecision {
  UnitVector3 direction{0, 0, 1};
  std::size_t positive_votes = 0;  // inliers in front of both cameras under pair.first
  std::size_t negative_votes = 0;  // ... under pair.second
  bool ambiguous = false;
};

/// Picks the member of an antipodal pair that puts more inliers in front of
/// both cameras. Each point is triangulated as the midpoint of the two rays
/// p̂·λ₁ and t + q·λ₂ (unit baseline). Exact ties return pair.first flagged
/// ambiguous.
SignDecision disambiguate_sign(const std::pair<UnitVector3, UnitVector3>& pair,
                               std::span<const CompensatedCorrespondence> inliers);

}  // namespace flight
