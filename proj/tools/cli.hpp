#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rossbytrap/modes.hpp"
#include "rossbytrap/rays.hpp"
#include "rossbytrap/spectral.hpp"
#include "rossbytrap/trapped_set.hpp"

namespace rossbytrap::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline const std::vector<std::string> kScenarios{"rays", "lambda", "evolve", "modes", "spectrum", "report"};

struct ProfileSpec {
  std::string name = "2+sin";
  double constant = 2.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs{1.0};
  CoriolisProfile build() const { return CoriolisProfile(name, constant, cos_coeffs, sin_coeffs); }
};

struct RaysParams {
  std::vector<PhasePoint> points;
  int random_count = 0;  // extra points drawn with the run seed
  std::array<double, 2> random_x2{0.0, kTwoPi}, random_xi1{0.5, 3.0}, random_xi2{-0.8, 0.8};
  double t_end = 100.0;
  double dt = 0.0;  // 0: default_ray_step per point
  int sample_stride = 10;
  bool drift = true;  // also compute F_time, F_space, F_action
};

struct DatumSpec {
  GaussianWkb gaussian;
  std::string snapshot;  // tabulated datum: path of a field snapshot, replaces the Gaussian
};

struct EvolveParams {
  std::string label = "evolve";
  DatumSpec datum;
  BranchFilter filter = BranchFilter::Rossby;
  std::vector<double> times{0.0, 10.0};  // slow times t; the PDE runs to t/ε
  std::optional<std::array<double, 2>> window;  // [T, 2T] for the minimum of local mass
  RegionOmega omega;
  std::vector<int> snapshots;  // indices into times
  std::vector<int> husimi;     // indices into times
  HusimiOptions husimi_opts{4, 4, 2, 2, std::nullopt, std::nullopt};
  // half-widths of the frequency band around the datum's (ξ₁, ξ₂)
  std::array<double, 2> husimi_half_width{0.75, 0.75};
};

struct ModesParams {
  DatumSpec datum;
  double t = 1.0;  // slow time of the scalar-vs-full comparison
};

struct SpectrumParams {
  double xi1 = 1.0;
  int k_lo = 0, k_hi = 4;
  std::string branch = "plus";
  int n_pairs = 5;
};

struct RunConfig {
  std::string scenario;
  ProfileSpec profile;
  std::vector<double> epsilons{1.0 / 8, 1.0 / 16, 1.0 / 32};
  int box_m = 4;
  int n2_min = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  int threads = 0;
  LambdaGrid lambda;
  RaysParams rays;
  EvolveParams evolve;
  ModesParams modes;
  SpectrumParams spectrum;
  json snapshot;  // effective configuration recorded in the manifest
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::string> epsilon_list;
  std::optional<int> threads;
};

/// Parses "0.125,1/16,0.03125"; ConfigError on malformed or non-positive entries.
std::vector<double> parse_epsilon_list(const std::string& s);

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError. All checks that need no computation happen here.
RunConfig parse_config(const json& j, const std::string& scenario, const Overrides& ov);
RunConfig load_config(const std::optional<std::string>& path, const std::string& scenario, const Overrides& ov);

/// Grid used for a given ε.
Grid2D grid_for(const RunConfig& cfg, double eps);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& p);

/// Stages every output in a hidden directory and moves it into place on
/// commit; the manifest is written last through a temporary file and rename.
/// Destroying an uncommitted sink removes everything it staged.
class OutputSink {
public:
  explicit OutputSink(fs::path out_dir);
  ~OutputSink();
  OutputSink(const OutputSink&) = delete;
  OutputSink& operator=(const OutputSink&) = delete;

  void write(const std::string& name, const std::string& bytes);
  /// Moves staged files into the output directory and writes manifest.json
  /// with their digests merged into `manifest`.
  void commit(json manifest);
  const fs::path& dir() const { return out_; }

private:
  fs::path out_, stage_;
  bool created_out_ = false;
  bool committed_ = false;
  std::vector<std::pair<std::string, std::string>> files_;  // name, digest
};

/// Flat snapshot: 8-byte magic, int32 version, int32 components, int32 N1,
/// int32 N2, float64 L1, float64 ε, float64 t; then row-major complex128
/// values in [component][i1][i2] order, little-endian.
std::string encode_snapshot(const StateField& U);
StateField decode_snapshot(const std::string& bytes);
StateField read_snapshot(const fs::path& p);

std::string csv_number(double v);
/// File-name tag for an ε value, e.g. "eps0.125".
std::string eps_tag(double eps);

/// Minimal deterministic SVG line/scatter chart.
struct Series {
  std::string name;
  std::vector<double> x, y;
  bool points = false;
  std::vector<double> color_value;  // optional per-point value mapped to a colour ramp
};
struct Chart {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
  std::string render() const;
};

/// Runs one compute scenario into cfg.output_dir; returns the manifest.
json run_scenario(const RunConfig& cfg);

/// Reads run directories, checks their manifests and writes comparison
/// tables and charts into out_dir. ConfigError on empty input,
/// ManifestMismatch on inconsistent ε-sequences or digest mismatches.
json run_report(const std::vector<std::string>& runs, const std::string& out_dir);

}  // namespace rossbytrap::cli
