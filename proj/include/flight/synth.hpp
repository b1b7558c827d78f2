#pragma once

// Synthetic two-view scenes under pure translation, with the perturbations of
// the robustness protocol (outlier flows, clamped pixel noise, a wrong
// "known" rotation), plus the accuracy metric used to score them.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "flight/geometry.hpp"

namespace flight {

struct SyntheticScene {
  UnitVector3 heading{0, 0, 1};
  double focal = 576.0;
  std::vector<HomogeneousPoint> points;  // normalized first-frame coordinates
  std::vector<PixelPoint> flows;         // (u, v) in pixels
  std::vector<bool> outlier_mask;
  RotationMatrix applied_rotation;  // identity unless perturb_rotation ran

  std::size_t size() const { return points.size(); }

  /// p = (x, y, 1), q = applied_rotation · (p + (u/f, v/f, 0)).
  std::vector<CompensatedCorrespondence> correspondences() const;
};

/// Flow of a point at unit depth under translation t, in pixels:
/// u = −f·t₁ + (f·x)·t₃, v = −f·t₂ + (f·y)·t₃.
PixelPoint translational_flow(const UnitVector3& t, const HomogeneousPoint& p, double focal);

/// n points uniform in [−extent, extent]² with exact translational flow.
/// Throws ErrorCode::kInvalidArgument for n < 2 or non-positive focal/extent.
SyntheticScene gen_scene(std::uint64_t seed, const UnitVector3& heading, std::size_t n, double focal = 576.0,
                         double extent = 0.5);

/// Replaces each flow with probability p by a random vector: uniform
/// direction, magnitude uniform over the range of the clean magnitudes.
SyntheticScene inject_outliers(SyntheticScene scene, double p, std::uint64_t seed);

/// Adds N(0, σ²) to each flow component, each draw clamped to [−cap, cap].
SyntheticScene add_flow_noise(SyntheticScene scene, double sigma_px, double cap_px, std::uint64_t seed);

/// Rotates every second-frame point by a random axis and an N(0, σ²) angle.
SyntheticScene perturb_rotation(SyntheticScene scene, double sigma_deg, std::uint64_t seed);

/// Area under the empirical error CDF over (0, τ], divided by τ:
/// Σ max(0, τ − eᵢ) / (n·τ). Throws for an empty list or τ ≤ 0.
double maa(std::span<const double> errors_deg, double threshold_deg);

/// Uniform on S² (normalized Gaussian triple).
UnitVector3 random_heading(std::mt19937_64& rng);

/// Mixes a base seed with up to two stream indices (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace flight
