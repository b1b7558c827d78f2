#include <gtest/gtest.h>

#include "flight/bench.hpp"
#include "flight/error.hpp"

namespace flight {
namespace {

TEST(Methods, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_EQ(method_name(Method::kPnStar), "pn_star");
  EXPECT_FALSE(parse_method("magsac"));
}

TEST(RunMethod, EveryMethodOnCleanData) {
  const UnitVector3 t(0.2, -0.3, 0.9);
  const auto corrs = gen_scene(1, t, 400).correspondences();
  for (Method m : kAllMethods) {
    const auto r = run_method(m, corrs, 576, MethodSettings{}, 3);
    EXPECT_LE(angular_error_deg(r.direction, t), 1.0) << method_name(m);
    EXPECT_GE(r.ms, 0.0);
    EXPECT_EQ(r.winning_bin.has_value(), m == Method::kFlight);
  }
}

TEST(BenchGrid, Presets) {
  const auto robust = BenchGrid::robustness();
  EXPECT_EQ(robust.outlier_rates, (std::vector<double>{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}));
  EXPECT_EQ(robust.methods.size(), 5u);
  EXPECT_EQ(robust.cell_count(), 7u);
  const auto rot = BenchGrid::rotation();
  EXPECT_EQ(rot.rotation_sigmas.size(), 6u);
  EXPECT_DOUBLE_EQ(rot.rotation_sigmas.back(), 0.25);
  EXPECT_EQ(rot.outlier_rates, std::vector<double>{0.2});
}

TEST(BenchGrid, ValidationNamesFields) {
  BenchGrid g;
  g.trials = 0;
  g.outlier_rates = {1.5};
  try {
    g.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("trials"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("outlier_rates"), std::string::npos);
  }
}

TEST(BenchGrid, CellOrder) {
  BenchGrid g;
  g.outlier_rates = {0.1, 0.2};
  g.noise_sigmas = {0, 1, 2};
  g.rotation_sigmas = {0, 0.1};
  ASSERT_EQ(g.cell_count(), 12u);
  const auto c = grid_cell(g, 7);  // outlier 1, noise 0, rotation 1
  EXPECT_EQ(c.outlier_rate, 0.2);
  EXPECT_EQ(c.noise_sigma, 0.0);
  EXPECT_EQ(c.rotation_sigma, 0.1);
}

TEST(RunGrid, SingleCellOneTrial) {
  BenchGrid g;
  g.trials = 1;
  g.points = 200;
  g.timing_repeats = 1;
  const auto report = run_grid(g);
  ASSERT_EQ(report.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(report.rows[i].method, kAllMethods[i]);
    EXPECT_EQ(report.rows[i].trials, 1u);
    EXPECT_EQ(report.rows[i].maa.size(), 3u);
    EXPECT_EQ(report.rows[i].errors_deg.size(), 1u);
  }
  EXPECT_NE(report.find(Method::kTwoPoint, 0.2, 2.0, 0.0), nullptr);
  EXPECT_EQ(report.find(Method::kTwoPoint, 0.3, 2.0, 0.0), nullptr);
}

TEST(RunGrid, DeterministicApartFromTimings) {
  BenchGrid g;
  g.outlier_rates = {0.2, 0.5};
  g.trials = 6;
  g.points = 300;
  g.timing_repeats = 1;
  g.seed = 17;
  const auto a = run_grid(g);
  g.settings.flight.threads = 3;
  const auto b = run_grid(g);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].errors_deg, b.rows[i].errors_deg);
    EXPECT_EQ(a.rows[i].maa, b.rows[i].maa);
    EXPECT_EQ(a.rows[i].failures, b.rows[i].failures);
  }
  const auto s1 = bench_scene(g, 1, 4), s2 = bench_scene(g, 1, 4);
  EXPECT_EQ(s1.heading, s2.heading);
  EXPECT_EQ(s1.flows[3].u, s2.flows[3].u);
  EXPECT_NE(bench_scene(g, 0, 4).heading, s1.heading);
}

TEST(RunGrid, CleanCellIsAccurate) {
  BenchGrid g;
  g.methods = {Method::kFlight};
  g.outlier_rates = {0.0};
  g.noise_sigmas = {0.0};
  g.trials = 100;
  g.timing_repeats = 1;
  const auto r = run_grid(g);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_GE(r.rows[0].maa[1], 0.99);
  EXPECT_EQ(r.rows[0].failures, 0u);
}

}  // namespace
}  // namespace flight
