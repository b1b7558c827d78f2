#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "flight/error.hpp"
#include "flight/synth.hpp"

namespace flight {
namespace {

TEST(TranslationalFlow, Examples) {
  const double f = 576;
  const auto a = translational_flow(UnitVector3(0, 0, 1), {10 / f, -5 / f}, f);
  EXPECT_NEAR(a.u, 10.0, 1e-12);
  EXPECT_NEAR(a.v, -5.0, 1e-12);
  const auto b = translational_flow(UnitVector3(0, 0, 1), {0, 0}, f);
  EXPECT_EQ(b.u, 0.0);
  EXPECT_EQ(b.v, 0.0);
  EXPECT_FALSE(great_circle_normal({{0, 0, 1}, {0, 0, 1}}));

  const auto lateral = gen_scene(1, UnitVector3(1, 0, 0), 50);
  for (const auto& fl : lateral.flows) {
    EXPECT_EQ(fl.u, -576.0);
    EXPECT_EQ(fl.v, 0.0);
  }
}

TEST(GenScene, PointsAndResiduals) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 20; ++s) {
    const UnitVector3 t = random_heading(rng);
    const auto scene = gen_scene(derive_seed(2, s), t, 300, 576, 0.5);
    ASSERT_EQ(scene.size(), 300u);
    for (const auto& p : scene.points) {
      EXPECT_LE(std::abs(p.x), 0.5);
      EXPECT_LE(std::abs(p.y), 0.5);
    }
    for (const auto& c : scene.correspondences()) EXPECT_NEAR(epipolar_residual(t, c), 0.0, 1e-9);
  }
  EXPECT_THROW(gen_scene(0, UnitVector3(0, 0, 1), 1), Error);
  EXPECT_THROW(gen_scene(0, UnitVector3(0, 0, 1), 10, -1.0), Error);
}

TEST(GenScene, SeedDeterminism) {
  const auto a = gen_scene(5, UnitVector3(0.1, 0.2, 0.3), 100);
  const auto b = gen_scene(5, UnitVector3(0.1, 0.2, 0.3), 100);
  const auto c = gen_scene(6, UnitVector3(0.1, 0.2, 0.3), 100);
  EXPECT_EQ(a.points[17].x, b.points[17].x);
  EXPECT_NE(a.points[17].x, c.points[17].x);
}

TEST(InjectOutliers, Rates) {
  const auto clean = gen_scene(3, UnitVector3(0.3, 0.3, 0.9), 10000);
  const auto none = inject_outliers(clean, 0.0, 1);
  EXPECT_EQ(std::count(none.outlier_mask.begin(), none.outlier_mask.end(), true), 0);
  EXPECT_EQ(none.flows[42].u, clean.flows[42].u);
  const auto all = inject_outliers(clean, 1.0, 1);
  EXPECT_EQ(std::count(all.outlier_mask.begin(), all.outlier_mask.end(), true), 10000);
  const auto half = inject_outliers(clean, 0.5, 1);
  const auto k = std::count(half.outlier_mask.begin(), half.outlier_mask.end(), true);
  EXPECT_GE(k, 4700);
  EXPECT_LE(k, 5300);
  EXPECT_THROW(inject_outliers(clean, 1.5, 1), Error);
}

TEST(InjectOutliers, MagnitudesStayWithinCleanRange) {
  const auto clean = gen_scene(4, UnitVector3(0.3, -0.3, 0.9), 2000);
  double lo = 1e300, hi = 0;
  for (const auto& f : clean.flows) {
    lo = std::min(lo, std::hypot(f.u, f.v));
    hi = std::max(hi, std::hypot(f.u, f.v));
  }
  const auto noisy = inject_outliers(clean, 0.5, 9);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (!noisy.outlier_mask[i]) continue;
    const double m = std::hypot(noisy.flows[i].u, noisy.flows[i].v);
    EXPECT_GE(m, lo - 1e-9);
    EXPECT_LE(m, hi + 1e-9);
  }
}

TEST(AddFlowNoise, ClampAndSpread) {
  const auto clean = gen_scene(5, UnitVector3(0, 0.3, 0.9), 100000);
  const auto same = add_flow_noise(clean, 0.0, 2.0, 1);
  EXPECT_EQ(same.flows[7].u, clean.flows[7].u);

  const auto sat = add_flow_noise(clean, 1e6, 2.0, 1);
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_NEAR(std::abs(sat.flows[i].u - clean.flows[i].u), 2.0, 1e-9);
    EXPECT_NEAR(std::abs(sat.flows[i].v - clean.flows[i].v), 2.0, 1e-9);
  }

  const auto wide = add_flow_noise(clean, 1.0, 1e9, 2);
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = wide.flows[i].u - clean.flows[i].u;
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(clean.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, 1.0, 0.05);

  const auto capped = add_flow_noise(clean, 2.0, 2.0, 3);
  for (std::size_t i = 0; i < clean.size(); ++i) ASSERT_LE(std::abs(capped.flows[i].u - clean.flows[i].u), 2.0 + 1e-9);
}

TEST(PerturbRotation, IdentityAtZeroAndSmallOtherwise) {
  const auto clean = gen_scene(6, UnitVector3(0, 0.3, 0.9), 10);
  const auto same = perturb_rotation(clean, 0.0, 1);
  EXPECT_EQ(same.applied_rotation.matrix().m, Mat3::identity().m);
  const auto rotated = perturb_rotation(clean, 0.1, 1);
  const Vec3 z{0, 0, 1};
  const double angle = angular_distance(UnitVector3(rotated.applied_rotation * z), UnitVector3(z));
  EXPECT_LT(angle, deg_to_rad(1.0));
  EXPECT_NE(rotated.applied_rotation.matrix().m, Mat3::identity().m);
}

TEST(RandomHeading, Uniform) {
  std::mt19937_64 rng(7);
  Vec3 mean;
  for (int i = 0; i < 10000; ++i) mean += random_heading(rng).vec();
  EXPECT_LT(norm(mean / 10000.0), 0.03);
}

TEST(Maa, Examples) {
  const std::vector<double> zeros(5, 0.0), big{6, 7, 100};
  EXPECT_EQ(maa(zeros, 5), 1.0);
  EXPECT_EQ(maa(big, 5), 0.0);
  const std::vector<double> e{1, 3, 7};
  EXPECT_DOUBLE_EQ(maa(e, 5), 0.4);

  // Numeric integration of the empirical CDF agrees.
  double area = 0;
  const int steps = 10000;
  for (int i = 0; i < steps; ++i) {
    const double x = 5.0 * (i + 0.5) / steps;
    area += static_cast<double>(std::count_if(e.begin(), e.end(), [&](double v) { return v <= x; })) / 3.0;
  }
  EXPECT_NEAR(area / steps, 0.4, 1e-3);

  EXPECT_THROW(maa({}, 5), Error);
  EXPECT_THROW(maa(e, 0), Error);
}

TEST(Maa, MonotoneAndPermutationInvariant) {
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> ex(0.3);
  std::vector<double> e(200);
  for (auto& v : e) v = ex(rng);
  double prev = 0;
  for (double t = 0.5; t < 20; t += 0.5) {
    const double m = maa(e, t);
    EXPECT_GE(m, prev);
    prev = m;
  }
  auto shuffled = e;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(maa(shuffled, 5), maa(e, 5), 1e-15);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
  EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}

}  // namespace
}  // namespace flight
