#include "flight/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flight/error.hpp"

namespace flight {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

std::vector<CompensatedCorrespondence> SyntheticScene::correspondences() const {
  std::vector<CompensatedCorrespondence> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 p = points[i].lifted();
    const Vec3 q = p + Vec3{flows[i].u / focal, flows[i].v / focal, 0.0};
    out.push_back({p, applied_rotation * q});
  }
  return out;
}

PixelPoint translational_flow(const UnitVector3& t, const HomogeneousPoint& p, double focal) {
  return {-focal * t.x() + (focal * p.x) * t.z(), -focal * t.y() + (focal * p.y) * t.z()};
}

SyntheticScene gen_scene(std::uint64_t seed, const UnitVector3& heading, std::size_t n, double focal,
                         double extent) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "a scene needs at least 2 points");
  if (!(focal > 0.0) || !(extent > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal and extent must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-extent, extent);
  SyntheticScene s;
  s.heading = heading;
  s.focal = focal;
  s.points.reserve(n);
  s.flows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = coord(rng);
    const double y = coord(rng);
    s.points.push_back({x, y});
    s.flows.push_back(translational_flow(heading, s.points.back(), focal));
  }
  s.outlier_mask.assign(n, false);
  return s;
}

SyntheticScene inject_outliers(SyntheticScene scene, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "outlier probability must lie in [0, 1]");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (scene.outlier_mask[i]) continue;
    const double m = std::hypot(scene.flows[i].u, scene.flows[i].v);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (!(lo <= hi)) lo = hi = 0.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    // Draw all three numbers every time so the stream stays aligned.
    const double coin = unit(rng);
    const double a = angle(rng);
    const double m = lo + (hi - lo) * unit(rng);
    if (coin < p) {
      scene.flows[i] = {m * std::cos(a), m * std::sin(a)};
      scene.outlier_mask[i] = true;
    }
  }
  return scene;
}

SyntheticScene add_flow_noise(SyntheticScene scene, double sigma_px, double cap_px, std::uint64_t seed) {
  if (!(sigma_px >= 0.0) || !(cap_px >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "noise sigma and cap must be non-negative");
  if (sigma_px == 0.0) return scene;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma_px);
  for (auto& f : scene.flows) {
    f.u += std::clamp(gauss(rng), -cap_px, cap_px);
    f.v += std::clamp(gauss(rng), -cap_px, cap_px);
  }
  return scene;
}

SyntheticScene perturb_rotation(SyntheticScene scene, double sigma_deg, std::uint64_t seed) {
  if (!(sigma_deg >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "rotation sigma must be non-negative");
  if (sigma_deg == 0.0) return scene;
  std::mt19937_64 rng(seed);
  const UnitVector3 axis = random_heading(rng);
  std::normal_distribution<double> gauss(0.0, sigma_deg);
  scene.applied_rotation = RotationMatrix::about_axis(axis, deg_to_rad(gauss(rng)));
  return scene;
}

double maa(std::span<const double> errors_deg, double threshold_deg) {
  if (errors_deg.empty()) throw Error(ErrorCode::kInvalidArgument, "mAA of an empty error list");
  if (!(threshold_deg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mAA threshold must be positive");
  double area = 0.0;
  for (double e : errors_deg) area += std::max(0.0, threshold_deg - e);
  return area / (static_cast<double>(errors_deg.size()) * threshold_deg);
}

UnitVector3 random_heading(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  for (;;) {
    const Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
    if (auto u = UnitVector3::try_normalize(v)) return *u;
  }
}

}  // namespace flight
