#include "flight/estimator.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <tuple>

#include "flight/eigen3.hpp"
#include "flight/error.hpp"

namespace flight {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::kInvalidConfig, message);
}

}  // namespace

void FlightConfig::validate() const {
  require(m_sparse >= 2 && m_dense >= 2 && es_batch >= 2 && lookup_subdivisions >= 1, "counts must be at least 2");
  require(r_sparse > 0.0 && r_sparse < kPi / 2.0, "r_sparse must lie in (0, π/2)");
  require(r_dense > 0.0 && r_dense < kPi / 2.0, "r_dense must lie in (0, π/2)");
  require(es_min_fraction > 0.0 && es_min_fraction <= 1.0, "es_min_fraction must lie in (0, 1]");
  require(region_bound >= 0.0 && region_bound <= kPi, "region_bound must lie in [0, π]");
}

double orthogonality_objective(std::span<const UnitVector3> normals, const UnitVector3& p) {
  double s = 0.0;
  for (const auto& n : normals) {
    const double d = dot(n, p);
    s += d * d;
  }
  return s;
}

NlrResult nlr_refine(std::span<const UnitVector3> normals, const UnitVector3& fallback) {
  NlrResult out{fallback, 0.0, true};
  if (normals.size() < 2) return out;

  Mat3 a;
  for (const auto& n : normals) {
    const Vec3& v = n.vec();
    a(0, 0) += v.x * v.x;
    a(0, 1) += v.x * v.y;
    a(0, 2) += v.x * v.z;
    a(1, 1) += v.y * v.y;
    a(1, 2) += v.y * v.z;
    a(2, 2) += v.z * v.z;
  }
  a(1, 0) = a(0, 1);
  a(2, 0) = a(0, 2);
  a(2, 1) = a(1, 2);

  const SymmetricEigen3 eig = symmetric_eigen3(a);
  out.min_eigenvalue = eig.values[0];
  // Rank < 2: the smallest eigenvalue is not simple and its eigenvector is
  // arbitrary within a plane.
  if (!(eig.values[1] > 1e-10 * eig.values[2])) return out;

  UnitVector3 p = UnitVector3::assume_unit(eig.vectors[0]);
  if (dot(p, fallback) < 0.0) p = -p;
  out.direction = p;
  out.degenerate = false;
  return out;
}

namespace {

struct LatticeKey {
  std::size_t count;
  double radius;
  auto operator<=>(const LatticeKey&) const = default;
};

// Entries live for the whole process: estimators are cheap to construct and
// are often created per call, so the lattices must outlive them.
template <typename Key, typename Value, typename Make>
std::shared_ptr<const Value> cached(std::map<Key, std::shared_ptr<const Value>>& cache, std::mutex& mu, const Key& key,
                                    Make make) {
  std::lock_guard lock(mu);
  auto& slot = cache[key];
  if (!slot) slot = std::shared_ptr<const Value>(make());
  return slot;
}

}  // namespace

std::shared_ptr<const FibonacciLattice> shared_lattice(std::size_t count, double radius) {
  static std::mutex mu;
  static std::map<LatticeKey, std::shared_ptr<const FibonacciLattice>> cache;
  return cached(cache, mu, LatticeKey{count, radius}, [&] { return new FibonacciLattice(count, radius); });
}

std::shared_ptr<const ChordLookupTable> shared_lookup(double radius, std::size_t subdivisions) {
  static std::mutex mu;
  static std::map<LatticeKey, std::shared_ptr<const ChordLookupTable>> cache;
  return cached(cache, mu, LatticeKey{subdivisions, radius}, [&] { return new ChordLookupTable(radius, subdivisions); });
}

std::shared_ptr<const ReachIndex> shared_reach_index(std::size_t count, double radius) {
  static std::mutex mu;
  static std::map<LatticeKey, std::shared_ptr<const ReachIndex>> cache;
  return cached(cache, mu, LatticeKey{count, radius}, [&] {
    const auto lattice = shared_lattice(count, radius);
    std::vector<std::size_t> all(lattice->size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return new ReachIndex(BinSet::subset(*lattice, all), radius);
  });
}

std::shared_ptr<const LatticeBlocks> shared_blocks(std::size_t count, double radius) {
  constexpr std::size_t kGroupSize = 16;
  static std::mutex mu;
  static std::map<LatticeKey, std::shared_ptr<const LatticeBlocks>> cache;
  return cached(cache, mu, LatticeKey{count, radius},
                [&] { return new LatticeBlocks(*shared_lattice(count, radius), kGroupSize); });
}

struct FlightEstimator::Circles {
  std::vector<GreatCircle> circles;
  std::vector<std::size_t> source;  // correspondence index of each circle
};

FlightEstimator::FlightEstimator(FlightConfig config) : config_(config) {
  config_.validate();
  sparse_ = shared_lattice(config_.m_sparse, config_.r_sparse);
  dense_ = shared_lattice(config_.m_dense, config_.r_dense);
  sparse_table_ = shared_lookup(config_.r_sparse, config_.lookup_subdivisions);
  dense_table_ = shared_lookup(config_.r_dense, config_.lookup_subdivisions);
  if (config_.hierarchical) {
    sparse_index_ = shared_reach_index(config_.m_sparse, config_.r_sparse);
    dense_blocks_ = shared_blocks(config_.m_dense, config_.r_dense);
  }
}

FlightEstimator::Circles FlightEstimator::build_circles(std::span<const CompensatedCorrespondence> corrs) const {
  Circles out;
  out.circles.reserve(corrs.size());
  out.source.reserve(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (auto gc = great_circle_normal(corrs[i])) {
      out.circles.push_back(*gc);
      out.source.push_back(i);
    }
  }
  if (out.circles.size() < 2)
    throw Error(ErrorCode::kInsufficientData, "insufficient data: fewer than 2 usable correspondences");
  return out;
}

HeadingEstimate FlightEstimator::estimate(std::span<const CompensatedCorrespondence> corrs) const {
  return config_.early_stop ? estimate_with_early_stopping(corrs) : estimate_all(corrs);
}

HeadingEstimate FlightEstimator::estimate_all(std::span<const CompensatedCorrespondence> corrs) const {
  const auto start = Clock::now();
  HeadingEstimate est;
  const Circles circles = build_circles(corrs);
  est.stage_timings["circles"] = ms_since(start);

  const auto t0 = Clock::now();
  const VoteOptions opts{config_.threads};
  Accumulator acc;
  if (config_.hierarchical) {
    acc = Accumulator(sparse_->size());
    vote_into(acc, circles.circles, *sparse_index_, *sparse_table_, opts);
  } else {
    acc = vote(circles.circles, *dense_, *dense_table_, opts);
  }
  est.stage_timings[config_.hierarchical ? "sparse_vote" : "dense_vote"] = ms_since(t0);
  est.batches_consumed = 1;

  est = finish(circles, corrs, acc, std::move(est));
  est.stage_timings["total"] = ms_since(start);
  return est;
}

HeadingEstimate FlightEstimator::estimate_with_early_stopping(std::span<const CompensatedCorrespondence> corrs) const {
  const auto start = Clock::now();
  HeadingEstimate est;
  const Circles circles = build_circles(corrs);
  est.stage_timings["circles"] = ms_since(start);

  const auto t0 = Clock::now();
  const std::size_t n = circles.circles.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(config_.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }

  const VoteOptions opts{config_.threads};
  const BinSet dense_bins = BinSet::whole(*dense_);
  Accumulator acc(config_.hierarchical ? sparse_->size() : dense_->size());
  const auto vote_batch = [&](std::span<const GreatCircle> batch) {
    if (config_.hierarchical)
      vote_into(acc, batch, *sparse_index_, *sparse_table_, opts);
    else
      vote_into(acc, batch, dense_bins, *dense_table_, opts);
  };

  std::vector<GreatCircle> batch;
  batch.reserve(config_.es_batch);
  std::optional<std::size_t> previous;
  std::size_t consumed = 0;
  while (consumed < n) {
    batch.clear();
    const std::size_t end = std::min(n, consumed + config_.es_batch);
    for (std::size_t k = consumed; k < end; ++k) batch.push_back(circles.circles[order[k]]);
    vote_batch(batch);
    consumed = end;
    ++est.batches_consumed;

    const auto winner = acc.argmax();
    if (previous && winner && *winner == *previous &&
        static_cast<double>(acc.contributors(*winner)) >= config_.es_min_fraction * static_cast<double>(consumed))
      break;
    previous = winner;
  }
  est.stage_timings[config_.hierarchical ? "sparse_vote" : "dense_vote"] = ms_since(t0);

  est = finish(circles, corrs, acc, std::move(est));
  est.stage_timings["total"] = ms_since(start);
  return est;
}

HeadingEstimate FlightEstimator::finish(const Circles& circles, std::span<const CompensatedCorrespondence> corrs,
                                        const Accumulator& first_stage, HeadingEstimate est) const {
  const VoteOptions opts{config_.threads};
  const auto first_winner = first_stage.argmax();
  if (!first_winner) throw Error(ErrorCode::kNoConsensus, "no consensus: every bin is empty");

  // The final vote: either the dense lattice restricted to the neighbourhood
  // of the sparse winner, or (non-hierarchical) the full dense accumulator.
  std::vector<GreatCircle> voters;
  std::vector<std::size_t> voter_source;  // index into circles.circles
  std::optional<BinSet> region_bins;
  Accumulator final_acc;
  const Accumulator* final_ptr = &first_stage;

  if (config_.hierarchical) {
    const auto t0 = Clock::now();
    est.sparse_bin = *first_winner;
    const UnitVector3 center = sparse_->point(*first_winner);
    const double bound = config_.effective_region_bound();
    region_bins.emplace(BinSet::near(*dense_, *dense_blocks_, center, bound));

    // A circle farther than bound + r_dense from the center cannot reach any
    // bin of the region, so it is dropped before the vote.
    const double reach = bound + config_.r_dense;
    const double max_cos = reach < kPi / 2.0 ? std::sin(reach) + 1e-9 : 2.0;
    for (std::size_t i = 0; i < circles.circles.size(); ++i) {
      if (std::abs(dot(circles.circles[i].normal, center)) < max_cos) {
        voters.push_back(circles.circles[i]);
        voter_source.push_back(i);
      }
    }
    est.stage_timings["region"] = ms_since(t0);

    const auto t1 = Clock::now();
    final_acc = vote(voters, *region_bins, *dense_table_, opts);
    final_ptr = &final_acc;
    est.stage_timings["dense_vote"] = ms_since(t1);
  }

  const auto t2 = Clock::now();
  const std::span<const GreatCircle> final_circles =
      config_.hierarchical ? std::span<const GreatCircle>(voters) : std::span<const GreatCircle>(circles.circles);
  const VoteOutcome outcome = config_.hierarchical
                                  ? winning_bin(*final_ptr, *region_bins, final_circles, *dense_table_)
                                  : winning_bin(*final_ptr, *dense_, final_circles, *dense_table_);
  est.winning_bin = outcome.winning_index;
  est.circles_used = circles.circles.size();
  est.inlier_count = outcome.inlier_circle_indices.size();

  std::vector<CompensatedCorrespondence> inlier_corrs;
  std::vector<UnitVector3> inlier_normals;
  inlier_corrs.reserve(est.inlier_count);
  inlier_normals.reserve(est.inlier_count);
  for (std::size_t k : outcome.inlier_circle_indices) {
    const std::size_t ci = config_.hierarchical ? voter_source[k] : k;
    inlier_corrs.push_back(corrs[circles.source[ci]]);
    inlier_normals.push_back(circles.circles[ci].normal);
  }
  const SignDecision sign = disambiguate_sign(outcome.heading_pair, inlier_corrs);
  est.direction = sign.direction;
  est.sign_ambiguous = sign.ambiguous;
  est.stage_timings["sign"] = ms_since(t2);

  if (config_.nlr) {
    const auto t3 = Clock::now();
    const NlrResult refined = nlr_refine(inlier_normals, est.direction);
    est.direction = refined.direction;
    est.nlr_degenerate = refined.degenerate;
    est.stage_timings["nlr"] = ms_since(t3);
  }
  return est;
}

HeadingEstimate estimate(std::span<const CompensatedCorrespondence> corrs, const FlightConfig& config) {
  return FlightEstimator(config).estimate(corrs);
}

HeadingEstimate estimate_with_early_stopping(std::span<const CompensatedCorrespondence> corrs,
                                             const FlightConfig& config) {
  return FlightEstimator(config).estimate_with_early_stopping(corrs);
}

}  // namespace flight
