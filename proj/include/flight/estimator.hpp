#pragma once

// The full heading estimator: sparse vote, dense vote around the sparse
// winner, sign resolution and least-squares refinement, optionally driven by
// early stopping over random batches.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flight/geometry.hpp"
#include "flight/hough.hpp"
#include "flight/lattice.hpp"

namespace flight {

struct FlightConfig {
  std::size_t m_sparse = 1000;
  double r_sparse = 0.2;
  std::size_t m_dense = 64000;
  double r_dense = 0.009;
  bool hierarchical = true;
  bool nlr = true;
  bool early_stop = true;
  std::size_t es_batch = 64;
  double es_min_fraction = 0.05;
  std::uint64_t seed = 0;
  /// Angular extent of the dense search around the sparse winner;
  /// 0 selects r_sparse + 2·r_dense.
  double region_bound = 0.0;
  std::size_t lookup_subdivisions = ChordLookupTable::kDefaultSubdivisions;
  unsigned threads = 1;

  double effective_region_bound() const { return region_bound > 0.0 ? region_bound : r_sparse + 2.0 * r_dense; }
  /// Throws ErrorCode::kInvalidConfig.
  void validate() const;
};

struct HeadingEstimate {
  UnitVector3 direction{0, 0, 1};
  std::size_t winning_bin = 0;            // bin id in the final lattice
  std::optional<std::size_t> sparse_bin;  // hierarchical runs only
  std::size_t inlier_count = 0;
  std::size_t circles_used = 0;
  std::map<std::string, double> stage_timings;  // milliseconds
  bool sign_ambiguous = false;
  bool nlr_degenerate = false;
  std::size_t batches_consumed = 0;
  std::size_t iterations = 0;  // sampling baselines only
};

struct NlrResult {
  UnitVector3 direction{0, 0, 1};
  double min_eigenvalue = 0.0;
  bool degenerate = false;
};

/// A = Σ nᵢnᵢᵀ; returns the eigenvector of its smallest eigenvalue, signed to
/// agree with `fallback`. Falls back when the normals span fewer than two
/// independent directions.
NlrResult nlr_refine(std::span<const UnitVector3> normals, const UnitVector3& fallback);

/// Σ (nᵢ·p)².
double orthogonality_objective(std::span<const UnitVector3> normals, const UnitVector3& p);

/// Owns the lattices and lookup tables for one configuration. Immutable after
/// construction; estimate() may be called concurrently.
class FlightEstimator {
 public:
  explicit FlightEstimator(FlightConfig config);

  const FlightConfig& config() const { return config_; }
  const FibonacciLattice& sparse_lattice() const { return *sparse_; }
  const FibonacciLattice& dense_lattice() const { return *dense_; }
  const ChordLookupTable& sparse_table() const { return *sparse_table_; }
  const ChordLookupTable& dense_table() const { return *dense_table_; }

  /// Dispatches on config().early_stop.
  HeadingEstimate estimate(std::span<const CompensatedCorrespondence> corrs) const;
  /// Votes every usable correspondence.
  HeadingEstimate estimate_all(std::span<const CompensatedCorrespondence> corrs) const;
  /// Feeds seeded random batches of es_batch circles into the first voting
  /// stage until two consecutive winners coincide and the winner holds at
  /// least es_min_fraction of the circles consumed so far.
  HeadingEstimate estimate_with_early_stopping(std::span<const CompensatedCorrespondence> corrs) const;

 private:
  struct Circles;
  Circles build_circles(std::span<const CompensatedCorrespondence> corrs) const;
  HeadingEstimate finish(const Circles& circles, std::span<const CompensatedCorrespondence> corrs,
                         const Accumulator& first_stage, HeadingEstimate est) const;

  FlightConfig config_;
  std::shared_ptr<const FibonacciLattice> sparse_;
  std::shared_ptr<const FibonacciLattice> dense_;
  std::shared_ptr<const ChordLookupTable> sparse_table_;
  std::shared_ptr<const ChordLookupTable> dense_table_;
  std::shared_ptr<const ReachIndex> sparse_index_;
  std::shared_ptr<const LatticeBlocks> dense_blocks_;
};

HeadingEstimate estimate(std::span<const CompensatedCorrespondence> corrs, const FlightConfig& config);
HeadingEstimate estimate_with_early_stopping(std::span<const CompensatedCorrespondence> corrs,
                                             const FlightConfig& config);

/// Process-wide caches so repeated estimators share lattices and tables.
std::shared_ptr<const FibonacciLattice> shared_lattice(std::size_t count, double radius);
std::shared_ptr<const ChordLookupTable> shared_lookup(double radius, std::size_t subdivisions);
std::shared_ptr<const ReachIndex> shared_reach_index(std::size_t count, double radius);
std::shared_ptr<const LatticeBlocks> shared_blocks(std::size_t count, double radius);

}  // namespace flight
