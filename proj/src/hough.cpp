#include "flight/hough.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include "flight/error.hpp"

namespace flight {

double chord_weight(double distance, double radius) {
  if (!(distance < radius)) return 0.0;
  return 2.0 * std::sqrt(radius * radius - distance * distance);
}

double circle_bin_distance(const UnitVector3& normal, const UnitVector3& bin_center) {
  return kPi / 2.0 - std::acos(std::abs(dot(normal.vec(), bin_center.vec())));
}

namespace {

// Slot of |n·s| through the arccos path, exactly as the naive evaluation does.
std::size_t slot_via_arccos(const ChordLookupTable& t, double abs_cosine) {
  return t.slot(kPi / 2.0 - std::acos(abs_cosine));
}

// Smallest c ∈ [0, 1] with slot_via_arccos(c) ≥ level, by bisection over
// the ordered bit patterns of non-negative doubles.
double smallest_cosine_reaching(const ChordLookupTable& t, std::size_t level) {
  std::uint64_t lo = std::bit_cast<std::uint64_t>(0.0);
  std::uint64_t hi = std::bit_cast<std::uint64_t>(1.0);
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (slot_via_arccos(t, std::bit_cast<double>(mid)) >= level)
      hi = mid;
    else
      lo = mid;
  }
  return std::bit_cast<double>(hi);
}

}  // namespace

ChordLookupTable::ChordLookupTable(double radius, std::size_t subdivisions) : radius_(radius) {
  if (subdivisions == 0) throw Error(ErrorCode::kInvalidArgument, "lookup table needs k ≥ 1");
  if (!(radius > 0.0) || !(radius < kPi / 2.0))
    throw Error(ErrorCode::kInvalidArgument, "lookup radius must lie in (0, π/2)");

  const std::size_t k = subdivisions;
  table_.resize(k);
  fixed_.assign(k + 1, 0);
  const double scale = std::ldexp(1.0, kFixedBits);
  for (std::size_t i = 0; i < k; ++i) {
    const double d = (static_cast<double>(i) + 0.5) * radius / static_cast<double>(k);
    fixed_[i] = std::llround(chord_weight(d, radius) * scale);
    table_[i] = from_fixed(fixed_[i]);
  }

  breakpoints_.resize(k + 2);
  breakpoints_[0] = 0.0;
  for (std::size_t level = 1; level <= k; ++level) breakpoints_[level] = smallest_cosine_reaching(*this, level);
  breakpoints_[k + 1] = std::numeric_limits<double>::infinity();
  cutoff_ = breakpoints_[k];

  // Uniform cells over [0, cutoff). The domain of a cell is found on the
  // doubles themselves, so rounding in cell(·) cannot send a value to a cell
  // whose bracket misses it.
  const std::size_t cells = 2 * k;
  cells_.resize(cells);
  cell_scale_ = static_cast<double>(cells) / cutoff_;
  const auto first_in_cell = [&](std::size_t g) {
    // Smallest non-negative double c with cell index ≥ g; indices grow with c.
    std::uint64_t lo = 0, hi = std::bit_cast<std::uint64_t>(cutoff_);
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      const double c = std::bit_cast<double>(mid);
      if (static_cast<std::size_t>(static_cast<std::int64_t>(c * cell_scale_)) >= g) hi = mid;
      else lo = mid + 1;
    }
    return std::bit_cast<double>(lo);
  };
  double begin = 0.0;
  for (std::size_t g = 0; g < cells; ++g) {
    const double end = g + 1 < cells ? first_in_cell(g + 1) : cutoff_;
    Cell& e = cells_[g];
    const std::size_t s = search_slot(begin);
    const double last = std::nextafter(end, 0.0);
    if (end > begin && search_slot(last) > s + 1) {
      e = {0.0, {0, 0}, kSearch};
    } else {
      e = {breakpoints_[s + 1], {fixed_[s], fixed_[s + 1]}, static_cast<std::uint32_t>(s)};
    }
    begin = std::max(begin, end);
  }
}

std::size_t ChordLookupTable::search_slot(double abs_cosine) const {
  const std::size_t k = table_.size();
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.begin() + static_cast<std::ptrdiff_t>(k + 1),
                                   abs_cosine);
  const std::ptrdiff_t s = it - breakpoints_.begin() - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(s, 0, static_cast<std::ptrdiff_t>(k - 1)));
}

std::size_t ChordLookupTable::slot(double distance) const {
  const std::size_t k = table_.size();
  if (!(distance < radius_)) return k;
  if (distance <= 0.0) return 0;
  const double s = std::floor(distance * static_cast<double>(k) / radius_);
  return std::min(static_cast<std::size_t>(s), k - 1);
}

double ChordLookupTable::lookup(double distance) const {
  const std::size_t s = slot(distance);
  return s < table_.size() ? table_[s] : 0.0;
}

BinSet BinSet::whole(const FibonacciLattice& lattice) {
  BinSet b;
  b.xs_ = lattice.xs();
  b.ys_ = lattice.ys();
  b.zs_ = lattice.zs();
  return b;
}

void BinSet::gather(const FibonacciLattice& lattice) {
  const std::size_t n = ids_.size();
  storage_.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ids_[i] >= lattice.size()) throw Error(ErrorCode::kInvalidArgument, "bin id outside the lattice");
    storage_[i] = lattice.xs()[ids_[i]];
    storage_[n + i] = lattice.ys()[ids_[i]];
    storage_[2 * n + i] = lattice.zs()[ids_[i]];
  }
  const std::span<const double> all(storage_);
  xs_ = all.subspan(0, n);
  ys_ = all.subspan(n, n);
  zs_ = all.subspan(2 * n, n);
}

BinSet BinSet::subset(const FibonacciLattice& lattice, std::span<const std::size_t> ids) {
  BinSet b;
  b.ids_.assign(ids.begin(), ids.end());
  b.gather(lattice);
  return b;
}

BinSet BinSet::subset(const FibonacciLattice& lattice, std::span<const std::size_t> ids,
                      const LatticeBlocks& blocks) {
  if (blocks.lattice_size() != lattice.size())
    throw Error(ErrorCode::kInvalidArgument, "blocks were built for another lattice");
  std::vector<std::pair<std::uint32_t, std::size_t>> keyed;
  keyed.reserve(ids.size());
  for (std::size_t id : ids) {
    if (id >= lattice.size()) throw Error(ErrorCode::kInvalidArgument, "bin id outside the lattice");
    keyed.emplace_back(static_cast<std::uint32_t>(blocks.block_of(id)), id);
  }
  std::sort(keyed.begin(), keyed.end());

  BinSet b;
  b.ids_.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const std::uint32_t blk = keyed[i].first;
    if (i == 0 || keyed[i - 1].first != blk)
      b.groups_.push_back({blocks.center(blk), blocks.radius(blk), static_cast<std::uint32_t>(i), 0});
    b.ids_.push_back(keyed[i].second);
    b.groups_.back().end = static_cast<std::uint32_t>(i + 1);
  }
  b.gather(lattice);
  return b;
}

BinSet BinSet::near(const FibonacciLattice& lattice, const LatticeBlocks& blocks, const UnitVector3& center,
                    double bound) {
  if (blocks.lattice_size() != lattice.size())
    throw Error(ErrorCode::kInvalidArgument, "blocks were built for another lattice");
  if (!(bound > 0.0) || bound > kPi) throw Error(ErrorCode::kInvalidArgument, "region bound must lie in (0, π]");
  const AngularCap cap(center, bound);
  // A block whose center is farther than bound + its radius holds no member.
  const double reach = bound + blocks.max_radius() + 1e-9;
  const double min_block_dot = reach < kPi ? std::cos(reach) : -2.0;

  BinSet b;
  for (std::size_t blk = 0; blk < blocks.count(); ++blk) {
    if (dot(blocks.center(blk), center.vec()) < min_block_dot) continue;
    const auto begin = static_cast<std::uint32_t>(b.ids_.size());
    for (std::uint32_t j : blocks.members(blk))
      if (cap.contains(lattice.point(j).vec())) b.ids_.push_back(j);
    const auto end = static_cast<std::uint32_t>(b.ids_.size());
    if (end > begin) b.groups_.push_back({blocks.center(blk), blocks.radius(blk), begin, end});
  }
  if (b.ids_.empty())
    throw Error(ErrorCode::kRegionTooSmall, "region too small: no bins within " + std::to_string(bound) + " rad");
  b.gather(lattice);
  return b;
}

BinSet BinSet::whole(const FibonacciLattice& lattice, const LatticeBlocks& blocks) {
  std::vector<std::size_t> all(lattice.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return subset(lattice, all, blocks);
}

namespace {

// Cube-map cells over normals up to sign: the face is the axis of the largest
// |component|, with the normal flipped so that component is positive.
struct CubeCell {
  int axis;
  double u, v;
};

CubeCell cube_coordinates(const Vec3& n) {
  const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  if (ax >= ay && ax >= az) return {0, n.y / n.x, n.z / n.x};
  if (ay >= az) return {1, n.z / n.y, n.x / n.y};
  return {2, n.x / n.z, n.y / n.z};
}

Vec3 cube_direction(int axis, double u, double v) {
  switch (axis) {
    case 0: return {1.0, u, v};
    case 1: return {v, 1.0, u};
    default: return {u, v, 1.0};
  }
}

}  // namespace

ReachIndex::ReachIndex(BinSet bins, double radius, std::size_t cells_per_edge)
    : bins_(std::move(bins)), radius_(radius), edge_(cells_per_edge) {
  if (cells_per_edge == 0) throw Error(ErrorCode::kInvalidArgument, "reach index needs at least one cell per edge");
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reach radius must be positive");
  const std::size_t g = edge_;
  const double step = 2.0 / static_cast<double>(g);
  offsets_.reserve(3 * g * g + 1);
  offsets_.push_back(0);
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t a = 0; a < g; ++a) {
      for (std::size_t b = 0; b < g; ++b) {
        const double u0 = -1.0 + step * static_cast<double>(a), v0 = -1.0 + step * static_cast<double>(b);
        const UnitVector3 mid(cube_direction(axis, u0 + step / 2.0, v0 + step / 2.0));
        // The cell is a small convex spherical quad, so its farthest point
        // from the middle direction is a corner.
        double spread = 0.0;
        for (double du : {0.0, step})
          for (double dv : {0.0, step})
            spread = std::max(spread, angular_distance(mid, UnitVector3(cube_direction(axis, u0 + du, v0 + dv))));
        const double reach = radius + spread + 1e-9;
        const double max_cos = reach < kPi / 2.0 ? std::sin(reach) : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < bins_.size(); ++j) {
          const double c = std::abs(mid.x() * bins_.xs()[j] + mid.y() * bins_.ys()[j] + mid.z() * bins_.zs()[j]);
          if (c < max_cos) members_.push_back(static_cast<std::uint32_t>(j));
        }
        offsets_.push_back(static_cast<std::uint32_t>(members_.size()));
      }
    }
  }
}

std::size_t ReachIndex::cell_of(const Vec3& normal) const {
  const CubeCell c = cube_coordinates(normal);
  const auto clamp_cell = [&](double t) {
    const auto k = static_cast<std::size_t>(std::max(0.0, (t + 1.0) * static_cast<double>(edge_) / 2.0));
    return std::min(k, edge_ - 1);
  };
  return (static_cast<std::size_t>(c.axis) * edge_ + clamp_cell(c.u)) * edge_ + clamp_cell(c.v);
}

std::vector<double> Accumulator::totals() const {
  std::vector<double> out(fixed_.size());
  for (std::size_t j = 0; j < fixed_.size(); ++j) out[j] = total(j);
  return out;
}

void Accumulator::merge(const Accumulator& other) {
  if (other.size() != size()) throw Error(ErrorCode::kInvalidArgument, "accumulator size mismatch");
  for (std::size_t j = 0; j < fixed_.size(); ++j) {
    fixed_[j] += other.fixed_[j];
    contributors_[j] += other.contributors_[j];
  }
  circles_voted_ += other.circles_voted_;
}

std::optional<std::size_t> Accumulator::argmax() const {
  std::optional<std::size_t> best;
  std::int64_t best_total = 0;
  for (std::size_t j = 0; j < fixed_.size(); ++j) {
    if (fixed_[j] > best_total) {
      best_total = fixed_[j];
      best = j;
    }
  }
  return best;
}

namespace {

void vote_range(Accumulator& acc, std::span<const GreatCircle> circles, const BinSet& bins,
                const ChordLookupTable& table) {
  const std::size_t m = bins.size();
  const double* xs = bins.xs().data();
  const double* ys = bins.ys().data();
  const double* zs = bins.zs().data();
  const double cutoff = table.cutoff();

  // A circle at angular distance D from a group center is at least D − ρ
  // from every member, so the group is out of reach once D ≥ ρ + r, i.e.
  // |n·center| ≥ sin(ρ + r). The margin keeps the skip strictly conservative.
  const auto groups = bins.groups();
  std::vector<double> skip_cosine(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double reach = groups[g].radius + table.radius() + 1e-9;
    skip_cosine[g] = reach < kPi / 2.0 ? std::sin(reach) : std::numeric_limits<double>::infinity();
  }

  // Pass 1 compacts the bins a circle can reach (cheap dot products only);
  // pass 2 resolves their slots. Most bins never reach pass 2.
  std::vector<std::uint32_t> hit_index(m + 1);
  for (const GreatCircle& circle : circles) {
    const double nx = circle.normal.x(), ny = circle.normal.y(), nz = circle.normal.z();
    const auto abs_cosine = [&](std::size_t j) { return std::abs(nx * xs[j] + ny * ys[j] + nz * zs[j]); };
    std::size_t hits = 0;
    const auto scan = [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        hit_index[hits] = static_cast<std::uint32_t>(j);
        hits += abs_cosine(j) < cutoff ? 1 : 0;
      }
    };
    if (groups.empty()) {
      scan(0, m);
    } else {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const Vec3& o = groups[g].center;
        if (std::abs(nx * o.x + ny * o.y + nz * o.z) >= skip_cosine[g]) continue;
        scan(groups[g].begin, groups[g].end);
      }
    }
    for (std::size_t h = 0; h < hits; ++h) {
      const std::uint32_t j = hit_index[h];
      acc.add(j, table.fixed_weight_below_cutoff(abs_cosine(j)));
    }
  }
  acc.note_circles(circles.size());
}

void vote_range(Accumulator& acc, std::span<const GreatCircle> circles, const ReachIndex& index,
                const ChordLookupTable& table) {
  const BinSet& bins = index.bins();
  const double* xs = bins.xs().data();
  const double* ys = bins.ys().data();
  const double* zs = bins.zs().data();
  const double cutoff = table.cutoff();
  std::vector<std::uint32_t> hit_index(bins.size() + 1);
  std::vector<double> hit_cosine(bins.size() + 1);
  for (const GreatCircle& circle : circles) {
    const double nx = circle.normal.x(), ny = circle.normal.y(), nz = circle.normal.z();
    std::size_t hits = 0;
    for (const std::uint32_t j : index.candidates(circle.normal.vec())) {
      const double c = std::abs(nx * xs[j] + ny * ys[j] + nz * zs[j]);
      hit_index[hits] = j;
      hit_cosine[hits] = c;
      hits += c < cutoff ? 1 : 0;
    }
    for (std::size_t h = 0; h < hits; ++h) acc.add(hit_index[h], table.fixed_weight_below_cutoff(hit_cosine[h]));
  }
  acc.note_circles(circles.size());
}

// Below this many circle–bin pairs threads cost more than they save.
constexpr std::size_t kParallelWorkThreshold = std::size_t{1} << 20;

template <typename Source>
void vote_parallel(Accumulator& acc, std::span<const GreatCircle> circles, const Source& source,
                   std::size_t bin_count, const ChordLookupTable& table, VoteOptions options) {
  if (acc.size() != bin_count) throw Error(ErrorCode::kInvalidArgument, "accumulator size mismatch");
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, options.threads), std::max<std::size_t>(1, circles.size()));
  if (workers == 1 || circles.size() * bin_count < kParallelWorkThreshold) {
    vote_range(acc, circles, source, table);
    return;
  }
  std::vector<Accumulator> partial(workers, Accumulator(bin_count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t n = circles.size();
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back(
        [&, w, begin, end] { vote_range(partial[w], circles.subspan(begin, end - begin), source, table); });
  }
  for (auto& t : pool) t.join();
  for (const auto& p : partial) acc.merge(p);
}

}  // namespace

void vote_into(Accumulator& acc, std::span<const GreatCircle> circles, const BinSet& bins,
               const ChordLookupTable& table, VoteOptions options) {
  vote_parallel(acc, circles, bins, bins.size(), table, options);
}

void vote_into(Accumulator& acc, std::span<const GreatCircle> circles, const ReachIndex& index,
               const ChordLookupTable& table, VoteOptions options) {
  if (table.radius() > index.radius())
    throw Error(ErrorCode::kInvalidArgument, "lookup radius exceeds the reach index radius");
  vote_parallel(acc, circles, index, index.bins().size(), table, options);
}

Accumulator vote(std::span<const GreatCircle> circles, const BinSet& bins, const ChordLookupTable& table,
                 VoteOptions options) {
  Accumulator acc(bins.size());
  vote_into(acc, circles, bins, table, options);
  return acc;
}

Accumulator vote(std::span<const GreatCircle> circles, const FibonacciLattice& lattice,
                 const ChordLookupTable& table, VoteOptions options) {
  return vote(circles, BinSet::whole(lattice), table, options);
}

VoteOutcome winning_bin(const Accumulator& acc, const BinSet& bins, std::span<const GreatCircle> circles,
                        const ChordLookupTable& table) {
  if (acc.size() != bins.size()) throw Error(ErrorCode::kInvalidArgument, "accumulator size mismatch");
  auto best = acc.argmax();
  if (!best) throw Error(ErrorCode::kNoConsensus, "no consensus: every bin is empty");
  // Local order may differ from lattice order; ties go to the lowest id.
  for (std::size_t j = *best + 1; j < acc.size(); ++j)
    if (acc.raw_total(j) == acc.raw_total(*best) && bins.id(j) < bins.id(*best)) best = j;

  VoteOutcome out;
  out.local_index = *best;
  out.winning_index = bins.id(*best);
  const UnitVector3 s = bins.point(*best);
  out.heading_pair = {s, -s};
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const double c = std::abs(dot(circles[i].normal.vec(), s.vec()));
    if (c < table.cutoff()) out.inlier_circle_indices.push_back(i);
  }
  return out;
}

VoteOutcome winning_bin(const Accumulator& acc, const FibonacciLattice& lattice,
                        std::span<const GreatCircle> circles, const ChordLookupTable& table) {
  return winning_bin(acc, BinSet::whole(lattice), circles, table);
}

namespace {

// Depths (λ₁, λ₂) of the midpoint triangulation p̂·λ₁ ≈ t + q·λ₂; nullopt
// for (near-)parallel rays.
std::optional<std::pair<double, double>> midpoint_depths(const CompensatedCorrespondence& c, const Vec3& t) {
  const double a = dot(c.p_hat, c.p_hat);
  const double b = dot(c.p_hat, c.q);
  const double cc = dot(c.q, c.q);
  const double d = dot(c.p_hat, t);
  const double e = dot(c.q, t);
  const double det = a * cc - b * b;
  if (!(det > 1e-15 * a * cc)) return std::nullopt;
  return std::pair{(d * cc - b * e) / det, (b * d - a * e) / det};
}

std::size_t count_in_front(std::span<const CompensatedCorrespondence> inliers, const Vec3& t) {
  std::size_t n = 0;
  for (const auto& c : inliers) {
    const auto depths = midpoint_depths(c, t);
    if (depths && depths->first > 0.0 && depths->second > 0.0) ++n;
  }
  return n;
}

}  // namespace

SignDecision disambiguate_sign(const std::pair<UnitVector3, UnitVector3>& pair,
                               std::span<const CompensatedCorrespondence> inliers) {
  if (inliers.empty()) throw Error(ErrorCode::kInvalidArgument, "sign disambiguation needs inliers");
  SignDecision out;
  out.positive_votes = count_in_front(inliers, pair.first.vec());
  out.negative_votes = count_in_front(inliers, pair.second.vec());
  out.ambiguous = out.positive_votes == out.negative_votes;
  out.direction = out.negative_votes > out.positive_votes ? pair.second : pair.first;
  return out;
}

}  // namespace flight
