#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "flight/error.hpp"
#include "flight/lattice.hpp"
#include "flight/synth.hpp"

namespace flight {
namespace {

std::vector<std::size_t> brute_force_near(const FibonacciLattice& lat, const UnitVector3& c, double bound) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < lat.size(); ++j)
    if (angular_distance(lat.point(j), c) <= bound) out.push_back(j);
  return out;
}

std::size_t brute_force_nearest(const FibonacciLattice& lat, const UnitVector3& v) {
  std::size_t best = 0;
  double best_d = 10.0;
  for (std::size_t j = 0; j < lat.size(); ++j) {
    const double d = angular_distance(lat.point(j), v);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

TEST(BinRadius, Examples) {
  EXPECT_GE(bin_radius(64000), 0.0090);
  EXPECT_LE(bin_radius(64000), 0.0092);
  EXPECT_DOUBLE_EQ(bin_radius(4), 1.15);
  EXPECT_NEAR(bin_radius(1000000), 0.0023, 1e-12);
}

TEST(Lattice, TwoPoints) {
  const FibonacciLattice lat(2);
  EXPECT_DOUBLE_EQ(lat.point(0).z(), 0.5);
  EXPECT_DOUBLE_EQ(lat.point(1).z(), -0.5);
  EXPECT_THROW(FibonacciLattice(1), Error);
}

TEST(Lattice, UnitNormAndFormula) {
  const FibonacciLattice lat(1000);
  ASSERT_EQ(lat.size(), 1000u);
  for (std::size_t j = 0; j < lat.size(); ++j) {
    const Vec3 p{lat.xs()[j], lat.ys()[j], lat.zs()[j]};
    EXPECT_NEAR(norm(p), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.z, 1.0 - (2.0 * static_cast<double>(j) + 1.0) / 1000.0);
    EXPECT_LT(norm(p - fibonacci_point(j, 1000)), 1e-15);
  }
}

TEST(Lattice, GapsAndBalance) {
  const FibonacciLattice lat(1000);
  double max_nn = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    double nn = 10.0;
    for (std::size_t j = 0; j < lat.size(); ++j)
      if (i != j) nn = std::min(nn, angular_distance(lat.point(i), lat.point(j)));
    EXPECT_GT(nn, 0.0);
    max_nn = std::max(max_nn, nn);
  }
  EXPECT_LT(max_nn, 0.2);
  for (std::size_t m : {100u, 1000u, 64000u}) {
    const FibonacciLattice l(m);
    Vec3 mean;
    for (std::size_t j = 0; j < l.size(); ++j) mean += l.point(j).vec();
    EXPECT_LT(norm(mean / static_cast<double>(m)), 0.05) << m;
  }
}

TEST(Lattice, UniformNearestNeighbourRatio) {
  const FibonacciLattice lat(64000);
  const double r = bin_radius(64000);
  double lo = 10.0, hi = 0.0;
  for (std::size_t j = 0; j < lat.size(); ++j) {
    const auto region = bins_near(lat, lat.point(j), 2.0 * r);
    double nn = 10.0;
    for (std::size_t k : region.member_indices)
      if (k != j) nn = std::min(nn, angular_distance(lat.point(j), lat.point(k)));
    lo = std::min(lo, nn);
    hi = std::max(hi, nn);
  }
  EXPECT_LT(hi / lo, 2.0);
}

TEST(Lattice, CoverageHasNoHoles) {
  std::mt19937_64 rng(42);
  for (std::size_t m : {1000u, 64000u}) {
    const FibonacciLattice lat(m);
    for (int i = 0; i < 100000; ++i) {
      const UnitVector3 v = random_heading(rng);
      const std::size_t j = nearest_bin(lat, v);
      ASSERT_LE(angular_distance(lat.point(j), v), lat.radius()) << m;
    }
  }
}

TEST(BinsNear, Examples) {
  const FibonacciLattice lat(500);
  EXPECT_EQ(bins_near(lat, UnitVector3(0.3, -0.2, 0.9), kPi).member_indices.size(), 500u);
  const auto self = bins_near(lat, lat.point(123), 1e-9);
  EXPECT_EQ(self.member_indices, std::vector<std::size_t>{123});
  EXPECT_EQ(self.center_index, 123u);

  const FibonacciLattice dense(64000);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto n = bins_near(dense, random_heading(rng), 0.209).member_indices.size();
    const double expected = 64000.0 * (1.0 - std::cos(0.209)) / 2.0;
    EXPECT_NEAR(static_cast<double>(n), expected, 0.15 * expected);
  }
}

TEST(BinsNear, EmptyRegionIsAnError) {
  const FibonacciLattice lat(100);
  const UnitVector3 between = UnitVector3(lat.point(0).vec() + lat.point(1).vec());
  try {
    bins_near(lat, between, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegionTooSmall);
  }
  EXPECT_THROW(bins_near(lat, between, 0.0), Error);
  EXPECT_THROW(bins_near(lat, between, 4.0), Error);
}

TEST(BinsNear, EqualsBruteForce) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> bound(0.001, 1.0);
  for (std::size_t m : {2u, 37u, 1000u, 20000u}) {
    const FibonacciLattice lat(m);
    for (int i = 0; i < 60; ++i) {
      UnitVector3 c = random_heading(rng);
      if (i % 5 == 0) c = lat.point(rng() % m);
      const double b = (i % 3 == 0) ? kPi * bound(rng) : bound(rng) * 0.3;
      const auto expected = brute_force_near(lat, c, b);
      if (expected.empty()) {
        EXPECT_THROW(bins_near(lat, c, b), Error);
        continue;
      }
      const auto region = bins_near(lat, c, b);
      EXPECT_EQ(region.member_indices, expected);
      EXPECT_EQ(region.center_index, brute_force_nearest(lat, c));
    }
  }
}

TEST(BinsNear, BoundaryShellUsesExactDistance) {
  // Members sitting exactly at the bound must be kept; the dot-product
  // shortcut alone would be ambiguous there.
  const FibonacciLattice lat(5000);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const UnitVector3 c = random_heading(rng);
    const std::size_t k = rng() % lat.size();
    const double b = angular_distance(lat.point(k), c);
    const auto region = bins_near(lat, c, b);
    EXPECT_TRUE(std::binary_search(region.member_indices.begin(), region.member_indices.end(), k));
    EXPECT_EQ(region.member_indices, brute_force_near(lat, c, b));
  }
}

TEST(NearestBin, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (std::size_t m : {2u, 10u, 1000u, 64000u}) {
    const FibonacciLattice lat(m);
    for (int i = 0; i < 200; ++i) {
      const UnitVector3 v = random_heading(rng);
      EXPECT_EQ(nearest_bin(lat, v), brute_force_nearest(lat, v)) << m;
    }
  }
}

TEST(LatticeBlocks, PartitionAndRadii) {
  const FibonacciLattice lat(20000);
  const LatticeBlocks blocks(lat, 16);
  ASSERT_EQ(blocks.lattice_size(), lat.size());
  std::vector<int> seen(lat.size(), 0);
  double max_r = 0.0;
  for (std::size_t b = 0; b < blocks.count(); ++b) {
    const UnitVector3 c = UnitVector3::assume_unit(blocks.center(b));
    const auto members = blocks.members(b);
    EXPECT_TRUE(std::is_sorted(members.begin(), members.end()));
    for (std::uint32_t j : members) {
      ++seen[j];
      EXPECT_EQ(blocks.block_of(j), b);
      EXPECT_LE(angular_distance(lat.point(j), c), blocks.radius(b));
    }
    max_r = std::max(max_r, blocks.radius(b));
  }
  EXPECT_EQ(max_r, blocks.max_radius());
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  EXPECT_THROW(LatticeBlocks(lat, 0), Error);
}

TEST(AngularCap, AgreesWithExactDistance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, kPi);
  for (int i = 0; i < 20000; ++i) {
    const UnitVector3 c = random_heading(rng), p = random_heading(rng);
    const double b = (i % 2) ? angular_distance(c, p) : u(rng);
    EXPECT_EQ(AngularCap(c, b).contains(p.vec()), angular_distance(p, c) <= b);
  }
}

}  // namespace
}  // namespace flight
