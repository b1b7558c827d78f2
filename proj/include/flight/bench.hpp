#pragma once

// Uniform access to every heading estimator, and the grid harness that scores
// them on synthetic scenes.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flight/baselines.hpp"
#include "flight/estimator.hpp"
#include "flight/synth.hpp"

namespace flight {

enum class Method { kFlight, kPn, kPnStar, kTwoPoint, kFoeHough };

inline constexpr std::array<Method, 5> kAllMethods = {Method::kFlight, Method::kPn, Method::kPnStar,
                                                      Method::kTwoPoint, Method::kFoeHough};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct MethodSettings {
  FlightConfig flight;
  RansacConfig pn_star = RansacConfig::pn_star();
  RansacConfig two_point = RansacConfig::two_point();
  double foe_cell_boundary = 0.02;
  std::size_t foe_samples = 0;  // 0 → 4·N
};

struct MethodResult {
  UnitVector3 direction{0, 0, 1};
  double ms = 0.0;  // the estimator call alone
  std::size_t inliers = 0;
  std::size_t batches = 0;
  std::size_t iterations = 0;
  bool sign_ambiguous = false;
  std::optional<std::size_t> winning_bin;  // FLIGHT only
};

/// Runs one method. `seed` replaces the seeds of the randomized methods;
/// `focal` (pixels) is used by the flow-based baselines. Estimator errors
/// propagate as flight::Error.
MethodResult run_method(Method m, std::span<const CompensatedCorrespondence> corrs, double focal,
                        const MethodSettings& settings, std::uint64_t seed);

struct BenchGrid {
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<double> outlier_rates{0.2};
  std::vector<double> noise_sigmas{2.0};  // pixels
  double noise_cap = 2.0;                 // pixels, per component
  std::vector<double> rotation_sigmas{0.0};  // degrees
  std::size_t trials = 500;
  std::size_t points = 500;
  double focal = 576.0;
  double extent = 0.5;
  std::vector<double> thresholds{3.0, 5.0, 10.0};  // mAA thresholds, degrees
  std::size_t timing_repeats = 3;
  std::uint64_t seed = 0;
  MethodSettings settings;

  /// Outlier rates 20–80% in steps of 10, 2 px noise, every method.
  static BenchGrid robustness();
  /// 20% outliers, 2 px noise, rotation sigma 0–0.25° in steps of 0.05.
  static BenchGrid rotation();

  std::size_t cell_count() const { return outlier_rates.size() * noise_sigmas.size() * rotation_sigmas.size(); }
  /// Throws ErrorCode::kInvalidConfig naming every offending field.
  void validate() const;
};

struct BenchCell {
  double outlier_rate = 0.0;
  double noise_sigma = 0.0;
  double rotation_sigma = 0.0;
};

struct BenchRow {
  Method method = Method::kFlight;
  BenchCell cell;
  std::size_t trials = 0;
  std::size_t failures = 0;  // counted as 180° errors
  std::vector<double> maa;   // one per grid threshold
  double mean_error_deg = 0.0;
  double median_error_deg = 0.0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  std::vector<double> errors_deg;  // per trial
  std::vector<double> trial_ms;    // per trial, median over the timing repeats
};

struct BenchReport {
  std::vector<double> thresholds;
  std::vector<BenchRow> rows;  // method-major, then grid cell order

  const BenchRow* find(Method m, double outlier_rate, double noise_sigma, double rotation_sigma) const;
};

/// Every trial draws a uniform heading and a scene from
/// derive_seed(seed, cell, trial), applies outliers, noise and rotation
/// error, and runs each method on the same correspondences. Failures score
/// 180°. Identical grids give identical reports apart from timings.
BenchReport run_grid(const BenchGrid& grid);

/// The correspondences of one grid trial, as run_grid builds them.
SyntheticScene bench_scene(const BenchGrid& grid, std::size_t cell, std::size_t trial);

BenchCell grid_cell(const BenchGrid& grid, std::size_t cell);

}  // namespace flight
