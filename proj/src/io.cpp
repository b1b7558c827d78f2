#include "flight/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flight/error.hpp"

namespace flight {

namespace {

using Json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

bool is_comment_or_blank(const std::vector<Token>& tokens) {
  return tokens.empty() || tokens.front().text.front() == '#';
}

class Parser {
 public:
  explicit Parser(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(ErrorCode code, std::size_t line, std::size_t column, const std::string& msg) const {
    throw Error(code, std::string(source_) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg);
  }

  // A finite double filling the whole token; `shape` is the code for text
  // that is not a number at all.
  double number(const Token& t, std::size_t line, ErrorCode shape) const {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc::result_out_of_range) fail(ErrorCode::kNonFinite, line, t.column, "number out of range");
    if (ec != std::errc() || ptr != last)
      fail(shape, line, t.column, "expected a number, got '" + std::string(t.text) + "'");
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, line, t.column, "non-finite number '" + std::string(t.text) + "'");
    return v;
  }

  template <std::size_t N>
  std::array<double, N> numbers(const std::vector<Token>& tokens, std::size_t line, ErrorCode shape,
                                std::string_view what) const {
    if (tokens.size() != N + 1)
      fail(shape, line, tokens.size() > N + 1 ? tokens[N + 1].column : tokens.back().column,
           std::string(what) + " takes " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = number(tokens[i + 1], line, shape);
    return out;
  }

 private:
  std::string_view source_;
};

}  // namespace

CorrespondenceFile parse_correspondences(std::istream& in, std::string_view source) {
  const Parser p(source);
  CorrespondenceFile file;
  bool have_magic = false, have_intrinsics = false, have_rotation = false, have_heading = false;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (is_comment_or_blank(tokens)) continue;
    const std::string_view head = tokens.front().text;

    if (!have_magic) {
      if (head != kCorrespondenceMagic)
        p.fail(ErrorCode::kMalformedHeader, line_no, tokens.front().column,
               "expected '" + std::string(kCorrespondenceMagic) + " <version>'");
      if (tokens.size() != 2) p.fail(ErrorCode::kMalformedHeader, line_no, tokens.back().column, "expected a version");
      if (tokens[1].text != std::to_string(kCorrespondenceVersion))
        p.fail(ErrorCode::kBadVersion, line_no, tokens[1].column,
               "unsupported version '" + std::string(tokens[1].text) + "'");
      have_magic = true;
      continue;
    }

    const bool keyword = head == "intrinsics" || head == "rotation" || head == "heading";
    if (keyword && !file.matches.empty())
      p.fail(ErrorCode::kMalformedHeader, line_no, tokens.front().column,
             "'" + std::string(head) + "' after the first record");
    if (head == "intrinsics") {
      if (have_intrinsics) p.fail(ErrorCode::kMalformedHeader, line_no, 1, "duplicate intrinsics");
      const auto v = p.numbers<4>(tokens, line_no, ErrorCode::kMalformedHeader, "intrinsics");
      if (!(v[0] > 0.0) || !(v[1] > 0.0))
        p.fail(ErrorCode::kInvalidIntrinsics, line_no, tokens[v[0] > 0.0 ? 2 : 1].column,
               "focal lengths must be positive");
      file.intrinsics = {v[0], v[1], v[2], v[3]};
      have_intrinsics = true;
    } else if (head == "rotation") {
      if (have_rotation) p.fail(ErrorCode::kMalformedHeader, line_no, 1, "duplicate rotation");
      const auto v = p.numbers<9>(tokens, line_no, ErrorCode::kMalformedHeader, "rotation");
      Mat3 m;
      for (std::size_t i = 0; i < 9; ++i) m.m[i] = v[i];
      if (!RotationMatrix::is_valid(m))
        p.fail(ErrorCode::kInvalidRotation, line_no, tokens.front().column,
               "invalid rotation: not orthonormal with determinant +1");
      file.rotation = RotationMatrix(m);
      have_rotation = true;
    } else if (head == "heading") {
      if (have_heading) p.fail(ErrorCode::kMalformedHeader, line_no, 1, "duplicate heading");
      const auto v = p.numbers<3>(tokens, line_no, ErrorCode::kMalformedHeader, "heading");
      const auto h = UnitVector3::try_normalize({v[0], v[1], v[2]});
      if (!h) p.fail(ErrorCode::kMalformedHeader, line_no, tokens[1].column, "heading must be nonzero");
      file.heading = *h;
      have_heading = true;
    } else {
      if (!have_intrinsics || !have_rotation)
        p.fail(ErrorCode::kMalformedHeader, line_no, tokens.front().column,
               "record before the intrinsics and rotation lines");
      if (tokens.size() != 4)
        p.fail(ErrorCode::kMalformedRecord, line_no, tokens.size() > 4 ? tokens[4].column : tokens.back().column,
               "a record is 'x1 y1 x2 y2'");
      std::array<double, 4> v{};
      for (std::size_t i = 0; i < 4; ++i) v[i] = p.number(tokens[i], line_no, ErrorCode::kMalformedRecord);
      file.matches.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
  }
  if (in.bad()) throw Error(ErrorCode::kIo, std::string(source) + ": read error");
  const std::size_t end_line = line_no + 1;
  if (!have_magic) p.fail(ErrorCode::kMalformedHeader, end_line, 1, "missing version line");
  if (!have_intrinsics) p.fail(ErrorCode::kMalformedHeader, end_line, 1, "missing intrinsics line");
  if (!have_rotation) p.fail(ErrorCode::kMalformedHeader, end_line, 1, "missing rotation line");
  if (file.matches.size() < 2)
    p.fail(ErrorCode::kTooFewRecords, end_line, 1,
           "need at least 2 records, found " + std::to_string(file.matches.size()));
  return file;
}

CorrespondenceFile read_correspondence_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_correspondences(in, path.string());
}

void write_correspondences(std::ostream& out, const CorrespondenceFile& file) {
  out << kCorrespondenceMagic << ' ' << kCorrespondenceVersion << '\n';
  const Intrinsics& k = file.intrinsics;
  out << "intrinsics " << g17(k.fx) << ' ' << g17(k.fy) << ' ' << g17(k.cx) << ' ' << g17(k.cy) << '\n';
  out << "rotation";
  for (double v : file.rotation.matrix().m) out << ' ' << g17(v);
  out << '\n';
  if (file.heading)
    out << "heading " << g17(file.heading->x()) << ' ' << g17(file.heading->y()) << ' ' << g17(file.heading->z())
        << '\n';
  for (const PixelMatch& m : file.matches)
    out << g17(m.first.u) << ' ' << g17(m.first.v) << ' ' << g17(m.second.u) << ' ' << g17(m.second.v) << '\n';
}

void write_correspondence_file(const std::filesystem::path& path, const CorrespondenceFile& file) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_correspondences(out, file);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<CompensatedCorrespondence> compensated(const CorrespondenceFile& file) {
  std::vector<CompensatedCorrespondence> out;
  out.reserve(file.matches.size());
  for (const PixelMatch& m : file.matches) {
    const HomogeneousPoint p = normalize_pixel(file.intrinsics, m.first);
    const HomogeneousPoint q = normalize_pixel(file.intrinsics, m.second);
    out.push_back({compensate_rotation(file.rotation, p), q.lifted()});
  }
  return out;
}

CorrespondenceFile to_correspondence_file(const SyntheticScene& scene) {
  CorrespondenceFile file;
  file.intrinsics = {scene.focal, scene.focal, 0.0, 0.0};
  file.heading = scene.heading;
  const auto corrs = scene.correspondences();
  file.matches.reserve(corrs.size());
  for (const auto& c : corrs) {
    // The second point is a ray once a rotation error is applied; project it.
    const Vec3 q = c.q / c.q.z;
    file.matches.push_back({{scene.focal * c.p_hat.x, scene.focal * c.p_hat.y}, {scene.focal * q.x, scene.focal * q.y}});
  }
  return file;
}

std::string to_json_line(const ResultRecord& r) {
  Json j;
  j["type"] = "result";
  j["method"] = r.method;
  j["heading"] = {r.heading.x(), r.heading.y(), r.heading.z()};
  j["error_deg"] = r.error_deg ? Json(*r.error_deg) : Json(nullptr);
  j["ms"] = r.ms;
  j["inliers"] = r.inliers;
  j["batches"] = r.batches;
  j["iterations"] = r.iterations;
  j["sign_ambiguous"] = r.sign_ambiguous;
  j["winning_bin"] = r.winning_bin ? Json(*r.winning_bin) : Json(nullptr);
  return j.dump();
}

std::string error_json_line(std::string_view method, const Error& error) {
  Json j;
  j["type"] = "error";
  j["method"] = std::string(method);
  j["code"] = std::string(to_string(error.code()));
  j["message"] = error.what();
  return j.dump();
}

std::vector<KeyValue> parse_key_values(std::istream& in) {
  std::vector<KeyValue> out;
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    out.push_back({std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))), line_no});
  }
  return out;
}

namespace {

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    std::string_view item = s.substr(0, comma);
    while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.remove_prefix(1);
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.remove_suffix(1);
    out.push_back(item);
    if (comma == std::string_view::npos) return out;
    s.remove_prefix(comma + 1);
  }
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename T>
std::optional<T> to_unsigned(std::string_view s) {
  T v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

std::optional<std::vector<double>> to_doubles(std::string_view s) {
  std::vector<double> out;
  for (std::string_view item : split_list(s)) {
    const auto v = to_double(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<Method>> to_methods(std::string_view s) {
  if (s == "all") return std::vector<Method>(kAllMethods.begin(), kAllMethods.end());
  std::vector<Method> out;
  for (std::string_view item : split_list(s)) {
    const auto m = parse_method(item);
    if (!m) return std::nullopt;
    out.push_back(*m);
  }
  return out;
}

constexpr std::array<std::string_view, 18> kGridKeys = {
    "preset",          "methods",           "outlier_rates", "noise_sigmas",       "noise_cap",
    "rotation_sigmas", "trials",            "points",        "focal",              "extent",
    "thresholds",      "timing_repeats",    "seed",          "threads",            "flight.hierarchical",
    "flight.nlr",      "flight.early_stop", "two_point.threshold"};

}  // namespace

std::vector<std::string_view> grid_keys() { return {kGridKeys.begin(), kGridKeys.end()}; }

BenchGrid parse_grid(std::istream& in) {
  const std::vector<KeyValue> kvs = parse_key_values(in);
  std::vector<std::string> bad;
  const auto reject = [&](const KeyValue& kv, std::string_view why) {
    bad.push_back("'" + kv.key + "' (line " + std::to_string(kv.line) + ": " + std::string(why) + ")");
  };

  BenchGrid grid;
  for (const KeyValue& kv : kvs) {
    if (kv.key != "preset") continue;
    if (kv.value == "robustness") grid = BenchGrid::robustness();
    else if (kv.value == "rotation") grid = BenchGrid::rotation();
    else if (kv.value != "none") reject(kv, "expected robustness, rotation or none");
  }

  const auto set = [&](const KeyValue& kv, auto parsed, auto& field) {
    if (parsed) field = *parsed;
    else reject(kv, "bad value '" + kv.value + "'");
  };
  for (const KeyValue& kv : kvs) {
    const std::string& k = kv.key;
    const std::string_view v = kv.value;
    if (k == "preset") continue;
    else if (k == "methods") set(kv, to_methods(v), grid.methods);
    else if (k == "outlier_rates") set(kv, to_doubles(v), grid.outlier_rates);
    else if (k == "noise_sigmas") set(kv, to_doubles(v), grid.noise_sigmas);
    else if (k == "noise_cap") set(kv, to_double(v), grid.noise_cap);
    else if (k == "rotation_sigmas") set(kv, to_doubles(v), grid.rotation_sigmas);
    else if (k == "trials") set(kv, to_unsigned<std::size_t>(v), grid.trials);
    else if (k == "points") set(kv, to_unsigned<std::size_t>(v), grid.points);
    else if (k == "focal") set(kv, to_double(v), grid.focal);
    else if (k == "extent") set(kv, to_double(v), grid.extent);
    else if (k == "thresholds") set(kv, to_doubles(v), grid.thresholds);
    else if (k == "timing_repeats") set(kv, to_unsigned<std::size_t>(v), grid.timing_repeats);
    else if (k == "seed") set(kv, to_unsigned<std::uint64_t>(v), grid.seed);
    else if (k == "threads") set(kv, to_unsigned<unsigned>(v), grid.settings.flight.threads);
    else if (k == "flight.hierarchical") set(kv, to_bool(v), grid.settings.flight.hierarchical);
    else if (k == "flight.nlr") set(kv, to_bool(v), grid.settings.flight.nlr);
    else if (k == "flight.early_stop") set(kv, to_bool(v), grid.settings.flight.early_stop);
    else if (k == "two_point.threshold") set(kv, to_double(v), grid.settings.two_point.inlier_angle_threshold);
    else reject(kv, "unknown key");
  }
  // Values that parse but are out of range are reported alongside.
  std::string out_of_range;
  try {
    grid.validate();
  } catch (const Error& e) {
    out_of_range = e.what();
  }
  if (!bad.empty() || !out_of_range.empty()) {
    std::string msg = "invalid grid config:";
    for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : " ") + bad[i];
    if (!out_of_range.empty()) msg += (bad.empty() ? " " : "; ") + out_of_range;
    throw Error(ErrorCode::kInvalidConfig, msg);
  }
  return grid;
}

BenchGrid read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_grid(in);
}

void write_report_csv(std::ostream& out, const BenchReport& report) {
  out << "method,outlier_rate,noise_sigma,rotation_sigma,trials,failures";
  for (double t : report.thresholds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",maa_%g", t);
    out << buf;
  }
  out << ",mean_error_deg,median_error_deg,mean_ms,median_ms\n";
  for (const BenchRow& r : report.rows) {
    out << method_name(r.method) << ',' << g17(r.cell.outlier_rate) << ',' << g17(r.cell.noise_sigma) << ','
        << g17(r.cell.rotation_sigma) << ',' << r.trials << ',' << r.failures;
    for (double m : r.maa) out << ',' << g17(m);
    out << ',' << g17(r.mean_error_deg) << ',' << g17(r.median_error_deg) << ',' << g17(r.mean_ms) << ','
        << g17(r.median_ms) << '\n';
  }
}

void write_report_jsonl(std::ostream& out, const BenchGrid& grid, const BenchReport& report) {
  Json g;
  g["type"] = "grid";
  Json methods = Json::array();
  for (Method m : grid.methods) methods.push_back(std::string(method_name(m)));
  g["methods"] = methods;
  g["outlier_rates"] = grid.outlier_rates;
  g["noise_sigmas"] = grid.noise_sigmas;
  g["noise_cap"] = grid.noise_cap;
  g["rotation_sigmas"] = grid.rotation_sigmas;
  g["trials"] = grid.trials;
  g["points"] = grid.points;
  g["focal"] = grid.focal;
  g["extent"] = grid.extent;
  g["thresholds"] = grid.thresholds;
  g["timing_repeats"] = grid.timing_repeats;
  g["seed"] = grid.seed;
  g["flight"] = {{"hierarchical", grid.settings.flight.hierarchical},
                 {"nlr", grid.settings.flight.nlr},
                 {"early_stop", grid.settings.flight.early_stop}};
  out << g.dump() << '\n';
  for (const BenchRow& r : report.rows) {
    Json j;
    j["type"] = "row";
    j["method"] = std::string(method_name(r.method));
    j["outlier_rate"] = r.cell.outlier_rate;
    j["noise_sigma"] = r.cell.noise_sigma;
    j["rotation_sigma"] = r.cell.rotation_sigma;
    j["trials"] = r.trials;
    j["failures"] = r.failures;
    j["maa"] = r.maa;
    j["mean_error_deg"] = r.mean_error_deg;
    j["median_error_deg"] = r.median_error_deg;
    j["mean_ms"] = r.mean_ms;
    j["median_ms"] = r.median_ms;
    out << j.dump() << '\n';
  }
}

}  // namespace flight
