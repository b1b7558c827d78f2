#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "flight/bench.hpp"
#include "flight/error.hpp"
#include "flight/io.hpp"
#include "flight/synth.hpp"

namespace {

using namespace flight;

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

struct EstimateArgs {
  std::string input;
  std::string method = "flight";
  bool no_nlr = false;
  bool no_early_stop = false;
  bool no_hierarchical = false;
  std::string output;
};

struct SynthArgs {
  std::string heading = "random";
  std::size_t n = 500;
  double outliers = 0.0;
  double noise = 0.0;
  double noise_cap = 2.0;
  double rotation = 0.0;
  double focal = 576.0;
  double extent = 0.5;
  std::string output;
};

struct BenchArgs {
  std::string grid;
  std::string preset;
  std::size_t trials = 0;
  std::string output;
};

// Writes to stdout and, when open, to the results file.
class RecordSink {
 public:
  explicit RecordSink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw Error(ErrorCode::kIo, "cannot write " + path);
  }
  void emit(const std::string& line) {
    std::cout << line << '\n';
    if (file_.is_open()) file_ << line << '\n';
  }

 private:
  std::ofstream file_;
};

UnitVector3 parse_heading(const std::string& text, std::mt19937_64& rng) {
  if (text == "random") return random_heading(rng);
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    try {
      v.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error(ErrorCode::kInvalidArgument, "bad heading component '" + item + "'");
  }
  if (v.size() != 3) throw Error(ErrorCode::kInvalidArgument, "heading must be 'random' or 'x,y,z'");
  return UnitVector3(Vec3{v[0], v[1], v[2]});
}

int run_estimate(const Globals& g, const EstimateArgs& a) {
  std::vector<Method> methods;
  if (a.method == "all") {
    methods.assign(kAllMethods.begin(), kAllMethods.end());
  } else if (auto m = parse_method(a.method)) {
    methods.push_back(*m);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown method '" + a.method + "'");
  }

  RecordSink sink(a.output);
  CorrespondenceFile file;
  try {
    file = read_correspondence_file(a.input);
  } catch (const Error& e) {
    sink.emit(error_json_line("", e));
    return 1;
  }
  const auto corrs = compensated(file);

  MethodSettings settings;
  settings.flight.nlr = !a.no_nlr;
  settings.flight.early_stop = !a.no_early_stop;
  settings.flight.hierarchical = !a.no_hierarchical;
  settings.flight.threads = g.threads;
  const double focal = 0.5 * (file.intrinsics.fx + file.intrinsics.fy);

  int status = 0;
  for (Method m : methods) {
    try {
      const MethodResult r = run_method(m, corrs, focal, settings, g.seed);
      ResultRecord rec;
      rec.method = std::string(method_name(m));
      rec.heading = r.direction;
      if (file.heading) rec.error_deg = angular_error_deg(r.direction, *file.heading);
      rec.ms = r.ms;
      rec.inliers = r.inliers;
      rec.batches = r.batches;
      rec.iterations = r.iterations;
      rec.sign_ambiguous = r.sign_ambiguous;
      rec.winning_bin = r.winning_bin;
      sink.emit(to_json_line(rec));
    } catch (const Error& e) {
      sink.emit(error_json_line(method_name(m), e));
      status = 1;
    }
  }
  return status;
}

int run_synth(const Globals& g, const SynthArgs& a) {
  std::mt19937_64 rng(derive_seed(g.seed, 0));
  const UnitVector3 heading = parse_heading(a.heading, rng);
  SyntheticScene s = gen_scene(derive_seed(g.seed, 1), heading, a.n, a.focal, a.extent);
  s = inject_outliers(std::move(s), a.outliers, derive_seed(g.seed, 2));
  s = add_flow_noise(std::move(s), a.noise, a.noise_cap, derive_seed(g.seed, 3));
  s = perturb_rotation(std::move(s), a.rotation, derive_seed(g.seed, 4));
  write_correspondence_file(a.output, to_correspondence_file(s));
  return 0;
}

int run_bench(const Globals& g, const BenchArgs& a, bool seed_given, bool threads_given) {
  BenchGrid grid;
  if (!a.grid.empty()) grid = read_grid_file(a.grid);
  if (a.preset == "robustness") {
    if (!a.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "give either a grid file or --preset");
    grid = BenchGrid::robustness();
  } else if (a.preset == "rotation") {
    if (!a.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "give either a grid file or --preset");
    grid = BenchGrid::rotation();
  } else if (!a.preset.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + a.preset + "'");
  }
  if (a.trials > 0) grid.trials = a.trials;
  if (seed_given) grid.seed = g.seed;
  if (threads_given || a.grid.empty()) grid.settings.flight.threads = g.threads;

  const BenchReport report = run_grid(grid);
  std::ofstream csv(a.output + ".csv");
  std::ofstream jsonl(a.output + ".jsonl");
  if (!csv || !jsonl) throw Error(ErrorCode::kIo, "cannot write " + a.output + ".csv/.jsonl");
  write_report_csv(csv, report);
  write_report_jsonl(jsonl, grid, report);
  write_report_csv(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLIGHT heading estimation: estimate, generate synthetic data, benchmark"};
  app.set_config("--config", "", "key=value settings file; command-line flags take precedence");
  app.require_subcommand(1);

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  auto* threads_opt = app.add_option("--threads", g.threads, "Voting threads (default: all cores)")
                          ->envname("FLIGHT_THREADS")
                          ->check(CLI::PositiveNumber);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the heading from a correspondence file");
  estimate->add_option("input", est.input, "Correspondence file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--method", est.method, "flight, pn, pn_star, two_point, foe_hough or all")
      ->capture_default_str();
  estimate->add_flag("--no-nlr", est.no_nlr, "Skip the least-squares refinement");
  estimate->add_flag("--no-early-stop", est.no_early_stop, "Vote every correspondence at once");
  estimate->add_flag("--no-hierarchical", est.no_hierarchical, "One pass over the full dense lattice");
  estimate->add_option("--output", est.output, "Also write the records to this file");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic correspondence file with ground truth");
  synth->add_option("--heading", syn.heading, "'random' or x,y,z")->capture_default_str();
  synth->add_option("--n", syn.n, "Correspondences")->capture_default_str()->check(CLI::Range(2ul, 100000000ul));
  synth->add_option("--outliers", syn.outliers, "Outlier probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  synth->add_option("--noise", syn.noise, "Flow noise sigma, pixels")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--noise-cap", syn.noise_cap, "Per-component noise clamp, pixels")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--rotation", syn.rotation, "Rotation error sigma, degrees")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--focal", syn.focal, "Focal length, pixels")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--extent", syn.extent, "Half-range of normalized coordinates")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("--output", syn.output, "Output file")->required();

  BenchArgs ben;
  auto* bench = app.add_subcommand("bench", "Run a benchmark grid");
  bench->add_option("grid", ben.grid, "key=value grid file")->check(CLI::ExistingFile);
  bench->add_option("--preset", ben.preset, "robustness or rotation");
  bench->add_option("--trials", ben.trials, "Override the trials per cell");
  bench->add_option("--output", ben.output, "Writes <output>.csv and <output>.jsonl")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) return run_estimate(g, est);
    if (*synth) return run_synth(g, syn);
    if (*bench) return run_bench(g, ben, seed_opt->count() > 0, threads_opt->count() > 0);
  } catch (const Error& e) {
    std::cout << error_json_line("", e) << '\n';
    return 1;
  }
  return 0;
}
