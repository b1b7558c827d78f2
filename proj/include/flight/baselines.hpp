#pragma once

// Competing heading estimators: least-squares focus of expansion (PN), its
// RANSAC wrapper (PN*), minimal two-circle RANSAC, and a randomized Hough
// transform over FOE candidates.

#include <cstdint>
#include <span>
#include <vector>

#include "flight/estimator.hpp"
#include "flight/geometry.hpp"

namespace flight {

struct FoeEstimate {
  double x_f = 0.0;  // normalized image coordinates; ±inf when at infinity
  double y_f = 0.0;
  UnitVector3 direction{0, 0, 1};
  bool at_infinity = false;    // solved through the homogeneous fallback
  std::size_t inlier_count = 0;  // PN*: size of the consensus set
  std::size_t iterations = 0;
};

struct RansacConfig {
  double inlier_angle_threshold = 2.0;  // degrees
  std::size_t max_iterations = 10000;
  double confidence = 0.999;
  std::size_t subset_size = 200;
  std::uint64_t seed = 0;

  static RansacConfig pn_star() {
    RansacConfig c;
    c.max_iterations = 25;
    return c;
  }
  static RansacConfig two_point() { return RansacConfig{}; }

  /// Throws ErrorCode::kInvalidConfig.
  void validate() const;
};

/// Least-squares FOE from the collinearity constraints
/// u_y·x_f − u_x·y_f = u_y·x − u_x·y, one per correspondence with nonzero
/// flow. When the 2×2 normal matrix has condition number above 1e8 the
/// homogeneous form (x_f, y_f, w) is solved instead. The sign is fixed by
/// cheirality over all correspondences. `focal` converts the flow to pixels.
/// Throws ErrorCode::kInsufficientData or ErrorCode::kFoeAtInfinity.
FoeEstimate pn_estimate(std::span<const CompensatedCorrespondence> corrs, double focal);

/// pn_estimate on random subsets of subset_size correspondences, scored by
/// how many great circles pass within the angle threshold of the estimate;
/// the best one is refit on its consensus set.
FoeEstimate pn_star_estimate(std::span<const CompensatedCorrespondence> corrs, double focal,
                             const RansacConfig& config);

/// RANSAC over pairs of great circles: candidate n_a × n_b, inliers
/// |nᵢ·t| < sin(threshold), iteration budget log(1 − confidence)/log(1 − w²)
/// for the best inlier ratio w so far. The winner is sign-fixed and refined
/// by nlr_refine on its inliers. `circles[i]` must belong to `corrs[i]`.
HeadingEstimate two_point_estimate(std::span<const GreatCircle> circles,
                                   std::span<const CompensatedCorrespondence> corrs, const RansacConfig& config);

/// Convenience overload building the circles (degenerate pairs dropped).
HeadingEstimate two_point_estimate(std::span<const CompensatedCorrespondence> corrs, const RansacConfig& config);

struct SphericalAccumulatorCell {
  UnitVector3 centroid{0, 0, 1};
  std::size_t hits = 1;
};

struct FoeHoughResult {
  HeadingEstimate estimate;
  std::vector<SphericalAccumulatorCell> cells;
};

/// Randomized Hough transform: each draw intersects the flow lines of two
/// random correspondences, maps the FOE to the sphere (up to sign) and joins
/// the nearest cell within `cell_boundary` radians or opens a new one. The
/// fullest cell's centroid is sign-fixed by cheirality. samples = 0 selects
/// 4·N. Throws ErrorCode::kNoValidSample when no draw yields a candidate.
FoeHoughResult foe_randomized_hough(std::span<const CompensatedCorrespondence> corrs, double focal,
                                    double cell_boundary = 0.02, std::size_t samples = 0, std::uint64_t seed = 0);

}  // namespace flight
