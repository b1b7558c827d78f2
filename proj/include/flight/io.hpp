#pragma once

// Text formats: correspondence files, line-delimited result records, the
// key=value bench grid, and the bench report tables.
//
// Correspondence file (UTF-8, '#' starts a comment line, blank lines ignored):
//
//   flight-correspondences 1
//   intrinsics <fx> <fy> <cx> <cy>
//   rotation <r00> <r01> <r02> <r10> <r11> <r12> <r20> <r21> <r22>
//   heading <tx> <ty> <tz>          (optional ground truth)
//   <x1> <y1> <x2> <y2>             (one match per line, pixels, ≥ 2 lines)
//
// The rotation is the known inter-frame rotation applied to first-frame
// points before voting.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flight/bench.hpp"
#include "flight/error.hpp"
#include "flight/geometry.hpp"
#include "flight/synth.hpp"

namespace flight {

inline constexpr std::string_view kCorrespondenceMagic = "flight-correspondences";
inline constexpr int kCorrespondenceVersion = 1;

struct PixelMatch {
  PixelPoint first;
  PixelPoint second;
};

struct CorrespondenceFile {
  Intrinsics intrinsics;
  RotationMatrix rotation;
  std::optional<UnitVector3> heading;
  std::vector<PixelMatch> matches;
};

/// Strict parse. Errors carry "<source>:<line>:<column>: " and one of
/// kBadVersion, kMalformedHeader, kNonFinite, kMalformedRecord,
/// kTooFewRecords, kInvalidRotation, kInvalidIntrinsics.
CorrespondenceFile parse_correspondences(std::istream& in, std::string_view source = "<input>");
/// As above; an unreadable path raises ErrorCode::kIo.
CorrespondenceFile read_correspondence_file(const std::filesystem::path& path);

/// Writes every number with 17 significant digits, so parsing restores it.
void write_correspondences(std::ostream& out, const CorrespondenceFile& file);
/// Throws ErrorCode::kIo when the path cannot be written.
void write_correspondence_file(const std::filesystem::path& path, const CorrespondenceFile& file);

/// p̂ = R·normalize(first), q = normalize(second), per match.
std::vector<CompensatedCorrespondence> compensated(const CorrespondenceFile& file);

/// The scene as pixel matches (principal point at the origin, fx = fy =
/// focal), identity as the known rotation, and its heading as ground truth.
CorrespondenceFile to_correspondence_file(const SyntheticScene& scene);

struct ResultRecord {
  std::string method;
  UnitVector3 heading{0, 0, 1};
  std::optional<double> error_deg;
  double ms = 0.0;
  std::size_t inliers = 0;
  std::size_t batches = 0;
  std::size_t iterations = 0;
  bool sign_ambiguous = false;
  std::optional<std::size_t> winning_bin;
};

/// One JSON object per line with a fixed field order.
std::string to_json_line(const ResultRecord& record);
std::string error_json_line(std::string_view method, const Error& error);

/// `key = value` lines; '#' comments and blank lines are skipped.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};
std::vector<KeyValue> parse_key_values(std::istream& in);

/// Builds a grid from key=value text. A `preset` key (robustness, rotation
/// or none) applies first wherever it appears; the remaining keys override
/// it. Unknown keys and unparsable values are all reported together in one
/// ErrorCode::kInvalidConfig.
BenchGrid parse_grid(std::istream& in);
BenchGrid read_grid_file(const std::filesystem::path& path);
/// Names of the keys parse_grid accepts.
std::vector<std::string_view> grid_keys();

/// One row per method × cell, header first.
void write_report_csv(std::ostream& out, const BenchReport& report);
/// A "grid" record followed by one "row" record per table row, one JSON
/// object per line.
void write_report_jsonl(std::ostream& out, const BenchGrid& grid, const BenchReport& report);

}  // namespace flight
