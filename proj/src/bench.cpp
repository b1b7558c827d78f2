#include "flight/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "flight/error.hpp"
#include "flight/synth.hpp"

namespace flight {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MethodResult from_heading(const HeadingEstimate& e, double ms) {
  MethodResult r;
  r.direction = e.direction;
  r.ms = ms;
  r.inliers = e.inlier_count;
  r.batches = e.batches_consumed;
  r.iterations = e.iterations;
  r.sign_ambiguous = e.sign_ambiguous;
  return r;
}

MethodResult from_foe(const FoeEstimate& e, double ms) {
  MethodResult r;
  r.direction = e.direction;
  r.ms = ms;
  r.inliers = e.inlier_count;
  r.iterations = e.iterations;
  return r;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kFlight: return "flight";
    case Method::kPn: return "pn";
    case Method::kPnStar: return "pn_star";
    case Method::kTwoPoint: return "two_point";
    case Method::kFoeHough: return "foe_hough";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods)
    if (method_name(m) == name) return m;
  return std::nullopt;
}

MethodResult run_method(Method m, std::span<const CompensatedCorrespondence> corrs, double focal,
                        const MethodSettings& settings, std::uint64_t seed) {
  switch (m) {
    case Method::kFlight: {
      FlightConfig cfg = settings.flight;
      cfg.seed = seed;
      const FlightEstimator estimator(cfg);
      const auto t0 = Clock::now();
      const HeadingEstimate e = estimator.estimate(corrs);
      MethodResult r = from_heading(e, ms_since(t0));
      r.winning_bin = e.winning_bin;
      return r;
    }
    case Method::kPn: {
      const auto t0 = Clock::now();
      const FoeEstimate e = pn_estimate(corrs, focal);
      return from_foe(e, ms_since(t0));
    }
    case Method::kPnStar: {
      RansacConfig cfg = settings.pn_star;
      cfg.seed = seed;
      const auto t0 = Clock::now();
      const FoeEstimate e = pn_star_estimate(corrs, focal, cfg);
      return from_foe(e, ms_since(t0));
    }
    case Method::kTwoPoint: {
      RansacConfig cfg = settings.two_point;
      cfg.seed = seed;
      const auto t0 = Clock::now();
      const HeadingEstimate e = two_point_estimate(corrs, cfg);
      return from_heading(e, ms_since(t0));
    }
    case Method::kFoeHough: {
      const auto t0 = Clock::now();
      const FoeHoughResult e =
          foe_randomized_hough(corrs, focal, settings.foe_cell_boundary, settings.foe_samples, seed);
      MethodResult r = from_heading(e.estimate, ms_since(t0));
      return r;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method");
}

BenchGrid BenchGrid::robustness() {
  BenchGrid g;
  g.outlier_rates = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  return g;
}

BenchGrid BenchGrid::rotation() {
  BenchGrid g;
  g.rotation_sigmas = {0.0, 0.05, 0.10, 0.15, 0.20, 0.25};
  return g;
}

void BenchGrid::validate() const {
  std::vector<std::string> bad;
  const auto all_in = [](const std::vector<double>& v, double lo, double hi) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x >= lo && x <= hi; });
  };
  if (methods.empty()) bad.push_back("methods");
  if (!all_in(outlier_rates, 0.0, 1.0)) bad.push_back("outlier_rates");
  if (!all_in(noise_sigmas, 0.0, 1e9)) bad.push_back("noise_sigmas");
  if (!(noise_cap >= 0.0)) bad.push_back("noise_cap");
  if (!all_in(rotation_sigmas, 0.0, 180.0)) bad.push_back("rotation_sigmas");
  if (trials == 0) bad.push_back("trials");
  if (points < 2) bad.push_back("points");
  if (!(focal > 0.0) || !std::isfinite(focal)) bad.push_back("focal");
  if (!(extent > 0.0) || !std::isfinite(extent)) bad.push_back("extent");
  if (!all_in(thresholds, std::nextafter(0.0, 1.0), 180.0)) bad.push_back("thresholds");
  if (timing_repeats == 0) bad.push_back("timing_repeats");
  if (!bad.empty()) {
    std::string msg = "invalid grid:";
    for (const auto& k : bad) msg += " " + k;
    throw Error(ErrorCode::kInvalidConfig, msg);
  }
  settings.flight.validate();
  settings.pn_star.validate();
  settings.two_point.validate();
}

BenchCell grid_cell(const BenchGrid& grid, std::size_t cell) {
  const std::size_t nr = grid.rotation_sigmas.size();
  const std::size_t nn = grid.noise_sigmas.size();
  return {grid.outlier_rates.at(cell / (nn * nr)), grid.noise_sigmas.at(cell / nr % nn),
          grid.rotation_sigmas.at(cell % nr)};
}

SyntheticScene bench_scene(const BenchGrid& grid, std::size_t cell, std::size_t trial) {
  const BenchCell c = grid_cell(grid, cell);
  std::mt19937_64 rng(derive_seed(grid.seed, cell, trial));
  const UnitVector3 heading = random_heading(rng);
  const std::uint64_t scene_seed = rng(), outlier_seed = rng(), noise_seed = rng(), rotation_seed = rng();
  SyntheticScene s = gen_scene(scene_seed, heading, grid.points, grid.focal, grid.extent);
  s = inject_outliers(std::move(s), c.outlier_rate, outlier_seed);
  s = add_flow_noise(std::move(s), c.noise_sigma, grid.noise_cap, noise_seed);
  return perturb_rotation(std::move(s), c.rotation_sigma, rotation_seed);
}

const BenchRow* BenchReport::find(Method m, double outlier_rate, double noise_sigma, double rotation_sigma) const {
  for (const BenchRow& r : rows)
    if (r.method == m && r.cell.outlier_rate == outlier_rate && r.cell.noise_sigma == noise_sigma &&
        r.cell.rotation_sigma == rotation_sigma)
      return &r;
  return nullptr;
}

BenchReport run_grid(const BenchGrid& grid) {
  grid.validate();
  const std::size_t cells = grid.cell_count();
  const std::size_t nm = grid.methods.size();
  BenchReport report;
  report.thresholds = grid.thresholds;
  report.rows.resize(nm * cells);
  for (std::size_t m = 0; m < nm; ++m)
    for (std::size_t c = 0; c < cells; ++c) {
      BenchRow& row = report.rows[m * cells + c];
      row.method = grid.methods[m];
      row.cell = grid_cell(grid, c);
      row.trials = grid.trials;
    }

  std::vector<double> repeat_ms(grid.timing_repeats);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t t = 0; t < grid.trials; ++t) {
      const SyntheticScene scene = bench_scene(grid, c, t);
      const auto corrs = scene.correspondences();
      for (std::size_t m = 0; m < nm; ++m) {
        BenchRow& row = report.rows[m * cells + c];
        const std::uint64_t method_seed = derive_seed(grid.seed ^ 0x5eedULL, c * grid.trials + t, m);
        double error = 180.0;
        bool failed = false;
        for (std::size_t k = 0; k < grid.timing_repeats; ++k) {
          const auto t0 = Clock::now();
          try {
            const MethodResult r = run_method(grid.methods[m], corrs, grid.focal, grid.settings, method_seed);
            repeat_ms[k] = r.ms;
            if (k == 0) error = angular_error_deg(r.direction, scene.heading);
          } catch (const Error&) {
            repeat_ms[k] = ms_since(t0);
            failed = true;
          }
        }
        if (failed) error = 180.0;
        row.failures += failed ? 1 : 0;
        row.errors_deg.push_back(error);
        row.trial_ms.push_back(median(repeat_ms));
      }
    }
  }

  for (BenchRow& row : report.rows) {
    for (double tau : grid.thresholds) row.maa.push_back(maa(row.errors_deg, tau));
    row.mean_error_deg = mean(row.errors_deg);
    row.median_error_deg = median(row.errors_deg);
    row.mean_ms = mean(row.trial_ms);
    row.median_ms = median(row.trial_ms);
  }
  return report;
}

}  // namespace flight
