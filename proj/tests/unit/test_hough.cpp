#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "flight/error.hpp"
#include "flight/hough.hpp"
#include "flight/synth.hpp"

namespace flight {
namespace {

std::vector<GreatCircle> random_circles(std::mt19937_64& rng, std::size_t n) {
  std::vector<GreatCircle> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({canonical_sign(random_heading(rng))});
  return out;
}

// The double loop written straight from the definitions.
std::vector<double> naive_totals(std::span<const GreatCircle> circles, const FibonacciLattice& lat,
                                 const ChordLookupTable& table) {
  std::vector<double> g(lat.size(), 0.0);
  for (std::size_t j = 0; j < lat.size(); ++j)
    for (const auto& c : circles) g[j] += table.lookup(circle_bin_distance(c.normal, lat.point(j)));
  return g;
}

void expect_totals(const Accumulator& acc, const BinSet& bins, const std::vector<double>& expected) {
  ASSERT_EQ(acc.size(), bins.size());
  for (std::size_t local = 0; local < bins.size(); ++local)
    ASSERT_EQ(acc.total(local), expected[bins.id(local)]) << "bin " << bins.id(local);
}

TEST(ChordWeight, Examples) {
  EXPECT_DOUBLE_EQ(chord_weight(0.0, 0.2), 0.4);
  EXPECT_EQ(chord_weight(0.2, 0.2), 0.0);
  EXPECT_NEAR(chord_weight(0.12, 0.2), 0.32, 1e-15);
  EXPECT_EQ(chord_weight(0.3, 0.2), 0.0);
}

TEST(CircleBinDistance, Examples) {
  const UnitVector3 z(0, 0, 1);
  EXPECT_DOUBLE_EQ(circle_bin_distance(z, UnitVector3(1, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(circle_bin_distance(z, z), kPi / 2);
  EXPECT_NEAR(circle_bin_distance(z, UnitVector3(0, std::sin(0.1), std::cos(0.1))), 1.4708, 1e-4);
  EXPECT_NEAR(circle_bin_distance(z, UnitVector3(0, std::sin(0.1), std::cos(0.1))),
              kPi / 2 - std::acos(std::cos(0.1)), 1e-15);
}

TEST(ChordLookupTable, Examples) {
  const ChordLookupTable one(0.2, 1);
  ASSERT_EQ(one.subdivisions(), 1u);
  EXPECT_NEAR(one.table()[0], 2.0 * std::sqrt(0.04 - 0.01), 1e-11);
  EXPECT_NEAR(one.table()[0], 0.3464, 1e-4);
  EXPECT_THROW(ChordLookupTable(0.2, 0), Error);
  for (double r : {0.2, 0.009}) {
    const ChordLookupTable t(r);
    EXPECT_EQ(t.lookup(r), 0.0);
    EXPECT_EQ(t.lookup(2 * r), 0.0);
    EXPECT_EQ(t.lookup(kPi / 2), 0.0);
    double worst = 0.0;
    for (int i = 0; i <= 100000; ++i) {
      const double d = 0.99 * r * i / 100000.0;
      worst = std::max(worst, std::abs(t.lookup(d) - chord_weight(d, r)));
    }
    EXPECT_LT(worst, 0.02 * 2 * r) << r;
  }
}

TEST(ChordLookupTable, EntriesAreFixedPointAndMonotone) {
  const ChordLookupTable t(0.2);
  for (std::size_t s = 0; s < t.subdivisions(); ++s) {
    EXPECT_EQ(ChordLookupTable::from_fixed(t.fixed_weight(s)), t.table()[s]);
    if (s > 0) {
      EXPECT_LE(t.table()[s], t.table()[s - 1]);
    }
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.25);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    EXPECT_GE(t.lookup(a), t.lookup(b));
  }
}

TEST(ChordLookupTable, CosineSlotMatchesArccosSlot) {
  std::mt19937_64 rng(2);
  for (double r : {0.2, 0.009, 1.3}) {
    for (std::size_t k : {1u, 7u, 1024u}) {
      const ChordLookupTable t(r, k);
      std::uniform_real_distribution<double> near_cut(std::max(0.0, t.cutoff() - 1e-3), 1.0);
      std::uniform_real_distribution<double> all(0.0, 1.0);
      for (int i = 0; i < 40000; ++i) {
        const double c = (i % 2) ? all(rng) : near_cut(rng);
        const std::size_t expected = t.slot(kPi / 2 - std::acos(c));
        ASSERT_EQ(t.slot_for_abs_cosine(c), expected) << r << " " << k << " " << c;
        if (expected < k) {
          ASSERT_EQ(t.fixed_weight_below_cutoff(c), t.fixed_weight(expected));
        }
      }
      // Every breakpoint and its neighbours.
      for (std::size_t s = 0; s < k; ++s) {
        const double lo = std::sin(r * static_cast<double>(s) / static_cast<double>(k));
        for (double c : {std::nextafter(lo, 0.0), lo, std::nextafter(lo, 2.0)}) {
          if (c < 0.0) continue;
          ASSERT_EQ(t.slot_for_abs_cosine(c), t.slot(kPi / 2 - std::acos(c)));
        }
      }
    }
  }
}

TEST(Vote, MatchesNaiveDoubleLoopOnSmallInstances) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> n_dist(0, 50), m_dist(2, 200);
  std::uniform_real_distribution<double> r_dist(0.05, 0.6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto circles = random_circles(rng, n_dist(rng));
    const FibonacciLattice lat(m_dist(rng));
    const ChordLookupTable table(r_dist(rng));
    const auto expected = naive_totals(circles, lat, table);
    const BinSet plain = BinSet::whole(lat);
    expect_totals(vote(circles, plain, table), plain, expected);

    const LatticeBlocks blocks(lat, 4);
    const BinSet grouped = BinSet::whole(lat, blocks);
    expect_totals(vote(circles, grouped, table), grouped, expected);

    const ReachIndex index(BinSet::whole(lat), table.radius(), 4);
    Accumulator acc(lat.size());
    vote_into(acc, circles, index, table);
    expect_totals(acc, index.bins(), expected);
  }
}

TEST(Vote, SingleCircleOnTwoBins) {
  const FibonacciLattice lat(2);
  const ChordLookupTable table(0.6);
  const std::vector<GreatCircle> c{{UnitVector3(0, 0, 1)}};
  const auto acc = vote(c, lat, table);
  const auto expected = naive_totals(c, lat, table);
  EXPECT_EQ(acc.total(0), expected[0]);
  EXPECT_EQ(acc.total(1), expected[1]);
}

TEST(Vote, LinearityAndPoleCircles) {
  const FibonacciLattice lat(500);
  const ChordLookupTable table(0.2);
  const std::vector<GreatCircle> one{{UnitVector3(0.2, 0.5, 0.8)}};
  const std::vector<GreatCircle> three(3, one[0]);
  const auto a1 = vote(one, lat, table), a3 = vote(three, lat, table);
  for (std::size_t j = 0; j < lat.size(); ++j) EXPECT_EQ(a3.raw_total(j), 3 * a1.raw_total(j));

  const std::vector<GreatCircle> poles(5, GreatCircle{lat.point(77)});
  EXPECT_EQ(vote(poles, lat, table).total(77), 0.0);
  EXPECT_EQ(vote({}, lat, table).argmax(), std::nullopt);
}

TEST(Vote, InvariantToOrderSignAndThreads) {
  std::mt19937_64 rng(4);
  const FibonacciLattice lat(20000);
  const ChordLookupTable table(0.02);
  auto circles = random_circles(rng, 3000);
  const auto base = vote(circles, lat, table);

  std::shuffle(circles.begin(), circles.end(), rng);
  std::vector<GreatCircle> flipped;
  for (const auto& c : circles) flipped.push_back({-c.normal});
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    const auto shuffled = vote(circles, lat, table, {threads});
    const auto negated = vote(flipped, lat, table, {threads});
    for (std::size_t j = 0; j < lat.size(); ++j) {
      ASSERT_EQ(shuffled.raw_total(j), base.raw_total(j));
      ASSERT_EQ(negated.raw_total(j), base.raw_total(j));
      ASSERT_EQ(shuffled.contributors(j), base.contributors(j));
    }
  }
}

TEST(Vote, PrunedPathsMatchExhaustiveScanOnLargeLattices) {
  std::mt19937_64 rng(5);
  const FibonacciLattice sparse(1000), dense(64000);
  const ChordLookupTable sparse_table(0.2), dense_table(0.009);
  const auto circles = random_circles(rng, 400);

  const auto full_sparse = vote(circles, sparse, sparse_table);
  const ReachIndex index(BinSet::whole(sparse), 0.2);
  for (unsigned threads : {1u, 4u}) {
    Accumulator acc(sparse.size());
    vote_into(acc, circles, index, sparse_table, {threads});
    for (std::size_t local = 0; local < sparse.size(); ++local)
      ASSERT_EQ(acc.raw_total(local), full_sparse.raw_total(index.bins().id(local)));
  }

  const LatticeBlocks blocks(dense, 16);
  const auto full_dense = vote(circles, dense, dense_table);
  for (int i = 0; i < 10; ++i) {
    const UnitVector3 center = random_heading(rng);
    const BinSet region = BinSet::near(dense, blocks, center, 0.218);
    const auto expected = bins_near(dense, center, 0.218).member_indices;
    std::vector<std::size_t> ids;
    for (std::size_t local = 0; local < region.size(); ++local) ids.push_back(region.id(local));
    std::sort(ids.begin(), ids.end());
    ASSERT_EQ(ids, expected);
    const auto acc = vote(circles, region, dense_table, {2});
    for (std::size_t local = 0; local < region.size(); ++local)
      ASSERT_EQ(acc.raw_total(local), full_dense.raw_total(region.id(local)));
    const BinSet gathered = BinSet::subset(dense, expected);
    const auto acc2 = vote(circles, gathered, dense_table);
    for (std::size_t local = 0; local < gathered.size(); ++local)
      ASSERT_EQ(acc2.raw_total(local), full_dense.raw_total(gathered.id(local)));
  }
}

TEST(Accumulator, MergeAndArgmax) {
  Accumulator a(4), b(4);
  a.add(1, 10);
  b.add(1, 5);
  b.add(3, 15);
  a.merge(b);
  EXPECT_EQ(a.raw_total(1), 15);
  EXPECT_EQ(a.contributors(1), 2u);
  EXPECT_EQ(a.argmax(), std::optional<std::size_t>(1));
}

TEST(WinningBin, TiesGoToLowestIndex) {
  const FibonacciLattice lat(3);
  const ChordLookupTable table(lat.radius());
  Accumulator acc(3);
  const auto fixed = [](double v) { return std::llround(std::ldexp(v, ChordLookupTable::kFixedBits)); };
  acc.add(0, fixed(0.1));
  acc.add(1, fixed(0.5));
  acc.add(2, fixed(0.5));
  const auto out = winning_bin(acc, lat, {}, table);
  EXPECT_EQ(out.winning_index, 1u);
  EXPECT_EQ(out.heading_pair.first, lat.point(1));
  EXPECT_EQ(out.heading_pair.second, -lat.point(1));

  try {
    winning_bin(Accumulator(3), lat, {}, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConsensus);
  }
}

TEST(WinningBin, TiesUseLatticeIdWithGroupedBins) {
  // Grouped BinSets reorder bins; the tie-break must still follow lattice ids.
  const FibonacciLattice lat(400);
  const LatticeBlocks blocks(lat, 8);
  const BinSet grouped = BinSet::whole(lat, blocks);
  const ChordLookupTable table(lat.radius());
  Accumulator acc(grouped.size());
  std::size_t lowest = lat.size();
  for (std::size_t local = 0; local < grouped.size(); ++local) {
    if (grouped.id(local) % 37 != 5) continue;
    acc.add(local, 1000);
    lowest = std::min(lowest, grouped.id(local));
  }
  EXPECT_EQ(winning_bin(acc, grouped, {}, table).winning_index, lowest);
}

TEST(WinningBin, SingleCircleWinnerLiesOnIt) {
  const FibonacciLattice lat(1000);
  const ChordLookupTable table(0.2);
  const std::vector<GreatCircle> c{{UnitVector3(0.3, -0.4, 0.5)}};
  const auto out = winning_bin(vote(c, lat, table), lat, c, table);
  EXPECT_LT(circle_bin_distance(c[0].normal, lat.point(out.winning_index)), 0.2);
  EXPECT_EQ(out.inlier_circle_indices, std::vector<std::size_t>{0});
}

TEST(WinningBin, NoiselessSceneOnDenseLattice) {
  const FibonacciLattice lat(64000);
  const ChordLookupTable table(lat.radius());
  std::mt19937_64 rng(6);
  for (int s = 0; s < 5; ++s) {
    const UnitVector3 t = random_heading(rng);
    const auto corrs = gen_scene(derive_seed(6, s), t, 300).correspondences();
    std::vector<GreatCircle> circles;
    for (const auto& c : corrs)
      if (auto g = great_circle_normal(c)) circles.push_back(*g);
    const auto out = winning_bin(vote(circles, lat, table, {2}), lat, circles, table);
    const double d = std::min(angular_distance(out.heading_pair.first, t), angular_distance(out.heading_pair.second, t));
    EXPECT_LE(d, bin_radius(64000));
  }
}

TEST(DisambiguateSign, ForwardMotion) {
  const UnitVector3 t(0, 0, 1);
  const auto corrs = gen_scene(1, t, 200).correspondences();
  const auto a = disambiguate_sign({t, -t}, corrs);
  EXPECT_EQ(a.direction, t);
  EXPECT_FALSE(a.ambiguous);
  EXPECT_EQ(disambiguate_sign({-t, t}, corrs).direction, t);
}

TEST(DisambiguateSign, MajorityWinsAndTiesAreFlagged) {
  const UnitVector3 t(0.3, -0.2, 0.9);
  const auto fwd = gen_scene(2, t, 45).correspondences();
  const auto back = gen_scene(3, -t, 5).correspondences();
  std::vector<CompensatedCorrespondence> mixed(fwd);
  mixed.insert(mixed.end(), back.begin(), back.end());
  const auto d = disambiguate_sign({t, -t}, mixed);
  EXPECT_EQ(d.direction, t);
  EXPECT_GT(d.positive_votes, d.negative_votes);

  const std::vector<CompensatedCorrespondence> split{fwd[0], back[0]};
  const auto tie = disambiguate_sign({t, -t}, split);
  EXPECT_TRUE(tie.ambiguous);
  EXPECT_EQ(tie.direction, t);
  EXPECT_THROW(disambiguate_sign({t, -t}, {}), Error);
}

}  // namespace
}  // namespace flight
