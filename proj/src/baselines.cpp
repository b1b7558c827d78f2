#include "flight/baselines.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "flight/eigen3.hpp"
#include "flight/error.hpp"
#include "flight/hough.hpp"

namespace flight {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// One collinearity constraint a·(x_f, y_f) = b, in pixel units.
struct FlowLine {
  double a0, a1, b;
};

std::vector<FlowLine> flow_lines(std::span<const CompensatedCorrespondence> corrs, double focal) {
  std::vector<FlowLine> lines;
  lines.reserve(corrs.size());
  for (const auto& c : corrs) {
    if (!(c.p_hat.z != 0.0 && c.q.z != 0.0)) continue;
    const double x = focal * c.p_hat.x / c.p_hat.z, y = focal * c.p_hat.y / c.p_hat.z;
    const double ux = focal * c.q.x / c.q.z - x, uy = focal * c.q.y / c.q.z - y;
    if (!std::isfinite(ux) || !std::isfinite(uy) || std::hypot(ux, uy) < 1e-12 * std::max(1.0, focal)) continue;
    lines.push_back({uy, -ux, uy * x - ux * y});
  }
  return lines;
}

// Smallest eigenvector of Σ (a0, a1, −b)(…)ᵀ: the FOE in homogeneous form.
std::optional<Vec3> homogeneous_foe(std::span<const FlowLine> lines, double focal) {
  Mat3 m;
  for (const auto& l : lines) {
    // Back in normalized units so the three columns are comparable.
    const std::array<double, 3> r{l.a0, l.a1, -l.b / focal};
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) m(i, j) += r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(j)];
  }
  const SymmetricEigen3 eig = symmetric_eigen3(m);
  if (!(eig.values[1] > 1e-12 * eig.values[2])) return std::nullopt;
  return eig.vectors[0];
}

std::size_t count_within(std::span<const GreatCircle> circles, const UnitVector3& t, double max_cos) {
  std::size_t n = 0;
  for (const auto& c : circles)
    if (std::abs(dot(c.normal, t)) < max_cos) ++n;
  return n;
}

std::vector<GreatCircle> circles_of(std::span<const CompensatedCorrespondence> corrs,
                                    std::vector<std::size_t>* source = nullptr) {
  std::vector<GreatCircle> out;
  out.reserve(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (auto gc = great_circle_normal(corrs[i])) {
      out.push_back(*gc);
      if (source) source->push_back(i);
    }
  }
  return out;
}

}  // namespace

void RansacConfig::validate() const {
  if (!(inlier_angle_threshold > 0.0) || !(inlier_angle_threshold < 90.0))
    throw Error(ErrorCode::kInvalidConfig, "inlier threshold must lie in (0°, 90°)");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::kInvalidConfig, "confidence must lie in (0, 1)");
  if (max_iterations == 0 || subset_size < 2)
    throw Error(ErrorCode::kInvalidConfig, "iterations must be positive and subsets hold at least 2");
}

FoeEstimate pn_estimate(std::span<const CompensatedCorrespondence> corrs, double focal) {
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  const std::vector<FlowLine> lines = flow_lines(corrs, focal);
  if (lines.size() < 2)
    throw Error(ErrorCode::kInsufficientData, "insufficient data: fewer than 2 correspondences with flow");

  double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0;
  for (const auto& l : lines) {
    s00 += l.a0 * l.a0;
    s01 += l.a0 * l.a1;
    s11 += l.a1 * l.a1;
    r0 += l.a0 * l.b;
    r1 += l.a1 * l.b;
  }
  // Eigenvalues of the symmetric 2×2 normal matrix.
  const double mean = 0.5 * (s00 + s11);
  const double spread = std::hypot(0.5 * (s00 - s11), s01);
  const double lmax = mean + spread, lmin = mean - spread;

  FoeEstimate out;
  Vec3 t;
  if (lmin > 0.0 && lmax <= 1e8 * lmin) {
    const double det = s00 * s11 - s01 * s01;
    out.x_f = (s11 * r0 - s01 * r1) / det / focal;
    out.y_f = (s00 * r1 - s01 * r0) / det / focal;
    t = {out.x_f, out.y_f, 1.0};
  } else {
    const auto h = homogeneous_foe(lines, focal);
    if (!h) throw Error(ErrorCode::kFoeAtInfinity, "FOE at infinity: the flow field is degenerate");
    t = *h;
    out.at_infinity = true;
    const double inf = std::numeric_limits<double>::infinity();
    out.x_f = t.z != 0.0 ? t.x / t.z : std::copysign(inf, t.x);
    out.y_f = t.z != 0.0 ? t.y / t.z : std::copysign(inf, t.y);
  }
  const UnitVector3 d(t);
  out.direction = disambiguate_sign({d, -d}, corrs).direction;
  out.inlier_count = lines.size();
  out.iterations = 1;
  return out;
}

FoeEstimate pn_star_estimate(std::span<const CompensatedCorrespondence> corrs, double focal,
                             const RansacConfig& config) {
  config.validate();
  const std::vector<GreatCircle> circles = circles_of(corrs);
  const double max_cos = std::sin(deg_to_rad(config.inlier_angle_threshold));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corrs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool single = corrs.size() <= config.subset_size;
  const std::size_t iterations = single ? 1 : config.max_iterations;

  std::optional<FoeEstimate> best;
  std::size_t best_score = 0;
  std::vector<CompensatedCorrespondence> subset;
  std::optional<Error> last_error;
  for (std::size_t it = 0; it < iterations; ++it) {
    subset.clear();
    if (single) {
      subset.assign(corrs.begin(), corrs.end());
    } else {
      // Partial Fisher–Yates: the first subset_size slots form the sample.
      for (std::size_t k = 0; k < config.subset_size; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
        std::swap(order[k], order[pick(rng)]);
        subset.push_back(corrs[order[k]]);
      }
    }
    try {
      FoeEstimate e = pn_estimate(subset, focal);
      const std::size_t score = count_within(circles, e.direction, max_cos);
      if (!best || score > best_score) {
        best = e;
        best_score = score;
      }
    } catch (const Error& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;

  // Refit on the consensus set while it keeps growing.
  for (int round = 0; round < 3; ++round) {
    std::vector<CompensatedCorrespondence> inliers;
    for (const auto& c : corrs) {
      const auto gc = great_circle_normal(c);
      if (gc && std::abs(dot(gc->normal, best->direction)) < max_cos) inliers.push_back(c);
    }
    if (inliers.size() < 2) break;
    FoeEstimate refit;
    try {
      refit = pn_estimate(inliers, focal);
    } catch (const Error&) {
      break;
    }
    const std::size_t score = count_within(circles, refit.direction, max_cos);
    if (score < best_score) break;
    const bool grew = score > best_score;
    best = refit;
    best_score = score;
    if (!grew) break;
  }
  best->inlier_count = best_score;
  best->iterations = iterations;
  return *best;
}

HeadingEstimate two_point_estimate(std::span<const GreatCircle> circles,
                                   std::span<const CompensatedCorrespondence> corrs, const RansacConfig& config) {
  config.validate();
  if (circles.size() != corrs.size())
    throw Error(ErrorCode::kInvalidArgument, "circles and correspondences must pair up");
  if (circles.size() < 2) throw Error(ErrorCode::kInsufficientData, "insufficient data: fewer than 2 circles");
  const auto start = Clock::now();
  const std::size_t n = circles.size();
  const double max_cos = std::sin(deg_to_rad(config.inlier_angle_threshold));
  const double log_miss = std::log(1.0 - config.confidence);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, n - 1), pick_b(0, n - 2);
  std::optional<UnitVector3> best;
  std::size_t best_score = 0;
  std::size_t budget = config.max_iterations;
  std::size_t it = 0;
  for (; it < budget; ++it) {
    const std::size_t a = pick_a(rng);
    std::size_t b = pick_b(rng);
    if (b >= a) ++b;
    const auto t = UnitVector3::try_normalize(cross(circles[a].normal.vec(), circles[b].normal.vec()));
    if (!t || norm(cross(circles[a].normal.vec(), circles[b].normal.vec())) < kDegenerateEpsilon) continue;
    const std::size_t score = count_within(circles, *t, max_cos);
    if (score > best_score) {
      best = *t;
      best_score = score;
      const double w = static_cast<double>(score) / static_cast<double>(n);
      const double miss = 1.0 - w * w;
      if (miss <= 0.0) {
        budget = it + 1;
      } else {
        const double needed = std::ceil(log_miss / std::log(miss));
        if (needed < static_cast<double>(budget)) budget = std::max<std::size_t>(it + 1, static_cast<std::size_t>(needed));
      }
    }
  }
  if (!best) throw Error(ErrorCode::kNoValidSample, "no valid sample: every drawn circle pair was parallel");

  std::vector<CompensatedCorrespondence> inlier_corrs;
  std::vector<UnitVector3> inlier_normals;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(dot(circles[i].normal, *best)) < max_cos) {
      inlier_corrs.push_back(corrs[i]);
      inlier_normals.push_back(circles[i].normal);
    }
  }
  HeadingEstimate est;
  const SignDecision sign = disambiguate_sign({*best, -*best}, inlier_corrs);
  const NlrResult refined = nlr_refine(inlier_normals, sign.direction);
  est.direction = refined.direction;
  est.nlr_degenerate = refined.degenerate;
  est.sign_ambiguous = sign.ambiguous;
  est.inlier_count = inlier_corrs.size();
  est.circles_used = n;
  est.iterations = it;
  est.stage_timings["total"] = ms_since(start);
  return est;
}

HeadingEstimate two_point_estimate(std::span<const CompensatedCorrespondence> corrs, const RansacConfig& config) {
  std::vector<std::size_t> source;
  const std::vector<GreatCircle> circles = circles_of(corrs, &source);
  std::vector<CompensatedCorrespondence> kept;
  kept.reserve(source.size());
  for (std::size_t i : source) kept.push_back(corrs[i]);
  return two_point_estimate(circles, kept, config);
}

FoeHoughResult foe_randomized_hough(std::span<const CompensatedCorrespondence> corrs, double focal,
                                    double cell_boundary, std::size_t samples, std::uint64_t seed) {
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  if (!(cell_boundary > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cell boundary must be positive");
  const auto start = Clock::now();
  const std::vector<FlowLine> lines = flow_lines(corrs, focal);
  if (lines.size() < 2)
    throw Error(ErrorCode::kInsufficientData, "insufficient data: fewer than 2 correspondences with flow");
  if (samples == 0) samples = 4 * corrs.size();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, lines.size() - 1), pick_b(0, lines.size() - 2);
  const double join_cos = std::cos(cell_boundary);
  // Running sums of sign-aligned candidates; centroid = normalize(sum).
  std::vector<Vec3> sums;
  FoeHoughResult out;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t a = pick_a(rng);
    std::size_t b = pick_b(rng);
    if (b >= a) ++b;
    // Homogeneous intersection of the two flow lines.
    const Vec3 la{lines[a].a0, lines[a].a1, -lines[a].b / focal};
    const Vec3 lb{lines[b].a0, lines[b].a1, -lines[b].b / focal};
    const Vec3 h = cross(la, lb);
    if (norm(h) < kDegenerateEpsilon * norm(la) * norm(lb)) continue;
    const UnitVector3 cand(h);

    std::size_t best = out.cells.size();
    double best_cos = join_cos;
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
      const double cs = std::abs(dot(out.cells[c].centroid, cand));
      if (cs >= best_cos) {
        best_cos = cs;
        best = c;
      }
    }
    if (best == out.cells.size()) {
      out.cells.push_back({cand, 1});
      sums.push_back(cand.vec());
    } else {
      const double sign = dot(out.cells[best].centroid, cand) < 0.0 ? -1.0 : 1.0;
      sums[best] += cand.vec() * sign;
      ++out.cells[best].hits;
      out.cells[best].centroid = UnitVector3(sums[best]);
    }
  }
  if (out.cells.empty()) throw Error(ErrorCode::kNoValidSample, "no valid sample: every drawn flow pair was parallel");

  std::size_t winner = 0;
  for (std::size_t c = 1; c < out.cells.size(); ++c)
    if (out.cells[c].hits > out.cells[winner].hits) winner = c;
  const UnitVector3 d = out.cells[winner].centroid;
  const SignDecision sign = disambiguate_sign({d, -d}, corrs);
  out.estimate.direction = sign.direction;
  out.estimate.sign_ambiguous = sign.ambiguous;
  out.estimate.inlier_count = out.cells[winner].hits;
  out.estimate.circles_used = lines.size();
  out.estimate.iterations = samples;
  out.estimate.stage_timings["total"] = ms_since(start);
  return out;
}

}  // namespace flight
