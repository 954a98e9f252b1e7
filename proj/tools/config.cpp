#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap::cli {

namespace {

// Wraps one JSON object, remembers which keys were read and rejects the rest.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  template <class T>
  T get(const std::string& k, T def) {
    if (!j_.contains(k)) return def;
    return value<T>(k);
  }

  template <class T>
  T req(const std::string& k) {
    if (!j_.contains(k)) throw ConfigError(where() + ": missing required key '" + k + "'");
    return value<T>(k);
  }

  Reader sub(const std::string& k) {
    used_.insert(k);
    return Reader(j_.at(k), path_ + "." + k);
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(where() + ": unknown key '" + k + "'");
  }

  std::string where() const { return path_.empty() ? "config" : path_; }

private:
  template <class T>
  T value(const std::string& k) {
    used_.insert(k);
    const json& v = j_.at(k);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where() + "." + k + " has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::array<double, 2> pair_of(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(what + " must be a two-element numeric array");
  const std::array<double, 2> r{v[0].get<double>(), v[1].get<double>()};
  if (!(r[0] < r[1])) throw ConfigError(what + " must be increasing");
  return r;
}

std::vector<double> numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(what + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> indices(const json& v, const std::string& what, std::size_t bound) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of time indices");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<int>() < 0 || static_cast<std::size_t>(e.get<int>()) >= bound)
      throw ConfigError(what + " entries must be indices into evolve.times");
    out.push_back(e.get<int>());
  }
  return out;
}

ProfileSpec parse_profile(const json& v) {
  if (v.is_string()) {
    const auto p = CoriolisProfile::builtin(v.get<std::string>());  // ConfigError if unknown
    return {p.name(), p.constant(), p.cos_coeffs(), p.sin_coeffs()};
  }
  Reader r(v, "profile");
  ProfileSpec s;
  s.name = r.get<std::string>("name", "custom");
  s.constant = r.get<double>("constant", 0.0);
  s.cos_coeffs = r.has("cos") ? numbers(r.raw("cos"), "profile.cos") : std::vector<double>{};
  s.sin_coeffs = r.has("sin") ? numbers(r.raw("sin"), "profile.sin") : std::vector<double>{};
  r.finish();
  (void)s.build();
  return s;
}

DatumSpec parse_datum(Reader r) {
  DatumSpec d;
  GaussianWkb& g = d.gaussian;
  d.snapshot = r.get<std::string>("snapshot", "");
  g.x1c = r.get<double>("x1c", g.x1c);
  g.x2c = r.get<double>("x2c", g.x2c);
  g.sigma1 = r.get<double>("sigma1", g.sigma1);
  g.sigma2 = r.get<double>("sigma2", g.sigma2);
  g.xi1 = r.get<double>("xi1", g.xi1);
  g.xi2 = r.get<double>("xi2", g.xi2);
  const std::string pol = r.get<std::string>("polarization", "rossby");
  if (pol == "rossby") g.polarization = Polarization::Rossby;
  else if (pol == "poincare_plus") g.polarization = Polarization::PoincarePlus;
  else if (pol == "poincare_minus") g.polarization = Polarization::PoincareMinus;
  else if (pol == "raw") g.polarization = Polarization::Raw;
  else throw ConfigError("datum.polarization must be rossby, poincare_plus, poincare_minus or raw");
  if (r.has("raw")) {
    const json& v = r.raw("raw");
    if (!v.is_array() || v.size() != 3) throw ConfigError("datum.raw must hold three [re, im] pairs");
    for (int c = 0; c < 3; ++c) {
      if (!v[c].is_array() || v[c].size() != 2 || !v[c][0].is_number() || !v[c][1].is_number())
        throw ConfigError("datum.raw must hold three [re, im] pairs");
      g.raw[c] = cdouble(v[c][0].get<double>(), v[c][1].get<double>());
    }
  }
  r.finish();
  if (!(g.sigma1 > 0.0) || !(g.sigma2 > 0.0)) throw ConfigError("datum widths must be positive");
  if (!d.snapshot.empty() && !fs::exists(d.snapshot)) throw ConfigError("datum.snapshot does not exist: " + d.snapshot);
  return d;
}

RegionOmega parse_omega(Reader r) {
  RegionOmega o;
  if (r.has("x1")) {
    const auto x = pair_of(r.raw("x1"), "omega.x1");
    o.x1_lo = x[0];
    o.x1_hi = x[1];
  }
  if (r.has("x2")) {
    const auto x = pair_of(r.raw("x2"), "omega.x2");
    o.full_x2 = false;
    o.x2_lo = x[0];
    o.x2_hi = x[1];
  }
  o.collar_cells = r.get<int>("collar_cells", o.collar_cells);
  if (o.collar_cells < 0) throw ConfigError("omega.collar_cells must be >= 0");
  r.finish();
  return o;
}

std::vector<double> parse_times(const json& v) {
  if (v.is_array()) {
    auto t = numbers(v, "evolve.times");
    if (t.empty()) throw ConfigError("evolve.times is empty");
    for (double x : t)
      if (!(x >= 0.0)) throw ConfigError("evolve.times must be non-negative");
    return t;
  }
  Reader r(v, "evolve.times");
  const double a = r.req<double>("start"), b = r.req<double>("stop");
  const int n = r.req<int>("count");
  r.finish();
  if (!(a >= 0.0) || !(b >= a) || n < 1) throw ConfigError("evolve.times needs 0 <= start <= stop and count >= 1");
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return t;
}

json effective(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["profile"] = {{"name", c.profile.name}, {"constant", c.profile.constant}, {"cos", c.profile.cos_coeffs},
                  {"sin", c.profile.sin_coeffs}};
  j["epsilons"] = c.epsilons;
  j["grid"] = {{"box_multiple", c.box_m}, {"n2_min", c.n2_min}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

}  // namespace

std::vector<double> parse_epsilon_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) throw ConfigError("empty entry in epsilon list '" + s + "'");
    double v;
    try {
      std::size_t pos = 0;
      const auto slash = item.find('/');
      if (slash != std::string::npos) {
        const double num = std::stod(item.substr(0, slash), &pos);
        if (pos != slash) throw std::invalid_argument("");
        const std::string den_s = item.substr(slash + 1);
        const double den = std::stod(den_s, &pos);
        if (pos != den_s.size()) throw std::invalid_argument("");
        v = num / den;
      } else {
        v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument("");
      }
    } catch (const std::exception&) {
      throw ConfigError("cannot parse epsilon '" + item + "'");
    }
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("epsilon must be positive, got " + item);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("epsilon list is empty");
  return out;
}

Grid2D grid_for(const RunConfig& cfg, double eps) {
  Grid2D g = Grid2D::for_epsilon(eps, cfg.box_m);
  g.N2 = std::max(g.N2, cfg.n2_min);
  return g;
}

RunConfig parse_config(const json& j, const std::string& scenario, const Overrides& ov) {
  if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end())
    throw ConfigError("unknown scenario '" + scenario + "'");
  Reader r(j, "");
  RunConfig c;
  c.scenario = scenario;
  if (r.has("scenario") && r.get<std::string>("scenario", "") != scenario)
    throw ConfigError("config scenario '" + j.at("scenario").get<std::string>() + "' does not match subcommand '" +
                      scenario + "'");
  if (r.has("profile")) c.profile = parse_profile(r.raw("profile"));
  if (r.has("epsilons")) {
    c.epsilons = numbers(r.raw("epsilons"), "epsilons");
    if (c.epsilons.empty()) throw ConfigError("epsilons is empty");
    for (double e : c.epsilons)
      if (!(e > 0.0)) throw ConfigError("epsilon must be positive");
  }
  if (r.has("grid")) {
    Reader g = r.sub("grid");
    c.box_m = g.get<int>("box_multiple", c.box_m);
    c.n2_min = g.get<int>("n2_min", c.n2_min);
    g.finish();
    if (c.box_m < 1) throw ConfigError("grid.box_multiple must be >= 1");
    if (c.n2_min < 0 || (c.n2_min & (c.n2_min - 1))) throw ConfigError("grid.n2_min must be a power of two");
  }
  c.seed = r.get<std::uint64_t>("seed", 0);
  c.output_dir = r.get<std::string>("output_dir", "");
  c.threads = r.get<int>("threads", 0);

  if (r.has("rays")) {
    Reader s = r.sub("rays");
    RaysParams& p = c.rays;
    if (s.has("points")) {
      const json& pts = s.raw("points");
      if (!pts.is_array()) throw ConfigError("rays.points must be an array");
      for (const auto& e : pts) {
        Reader pr(e, "rays.points[]");
        p.points.push_back({pr.get<double>("x1", 0.0), pr.req<double>("x2"), pr.req<double>("xi1"),
                            pr.req<double>("xi2")});
        pr.finish();
      }
    }
    if (s.has("random")) {
      Reader rr = s.sub("random");
      p.random_count = rr.req<int>("count");
      if (rr.has("x2")) p.random_x2 = pair_of(rr.raw("x2"), "rays.random.x2");
      if (rr.has("xi1")) p.random_xi1 = pair_of(rr.raw("xi1"), "rays.random.xi1");
      if (rr.has("xi2")) p.random_xi2 = pair_of(rr.raw("xi2"), "rays.random.xi2");
      rr.finish();
      if (p.random_count < 0) throw ConfigError("rays.random.count must be >= 0");
    }
    p.t_end = s.get<double>("t_end", p.t_end);
    p.dt = s.get<double>("dt", p.dt);
    p.sample_stride = s.get<int>("sample_stride", p.sample_stride);
    p.drift = s.get<bool>("drift", p.drift);
    s.finish();
    if (p.dt < 0.0 || p.sample_stride < 1) throw ConfigError("rays.dt must be >= 0 and sample_stride >= 1");
  }
  if (r.has("lambda")) {
    Reader s = r.sub("lambda");
    LambdaGrid& g = c.lambda;
    if (s.has("x2")) {
      const auto v = pair_of(s.raw("x2"), "lambda.x2");
      g.x2_lo = v[0];
      g.x2_hi = v[1];
    }
    if (s.has("xi2")) {
      const auto v = pair_of(s.raw("xi2"), "lambda.xi2");
      g.xi2_lo = v[0];
      g.xi2_hi = v[1];
    }
    if (s.has("xi1")) {
      const auto v = pair_of(s.raw("xi1"), "lambda.xi1");
      g.xi1_lo = v[0];
      g.xi1_hi = v[1];
    }
    g.n_x2 = s.get<int>("n_x2", g.n_x2);
    g.n_xi2 = s.get<int>("n_xi2", g.n_xi2);
    s.finish();
    if (g.n_x2 < 1 || g.n_xi2 < 1) throw ConfigError("lambda grid sizes must be >= 1");
  }
  if (r.has("evolve")) {
    Reader s = r.sub("evolve");
    EvolveParams& p = c.evolve;
    p.label = s.get<std::string>("label", p.label);
    if (s.has("datum")) p.datum = parse_datum(s.sub("datum"));
    const std::string f = s.get<std::string>("filter", "rossby");
    if (f == "all") p.filter = BranchFilter::All;
    else if (f == "rossby") p.filter = BranchFilter::Rossby;
    else if (f == "poincare") p.filter = BranchFilter::Poincare;
    else throw ConfigError("evolve.filter must be all, rossby or poincare");
    if (s.has("times")) p.times = parse_times(s.raw("times"));
    if (s.has("window")) p.window = pair_of(s.raw("window"), "evolve.window");
    if (s.has("omega")) p.omega = parse_omega(s.sub("omega"));
    if (s.has("snapshots")) p.snapshots = indices(s.raw("snapshots"), "evolve.snapshots", p.times.size());
    if (s.has("husimi")) {
      Reader h = s.sub("husimi");
      if (h.has("times")) p.husimi = indices(h.raw("times"), "evolve.husimi.times", p.times.size());
      p.husimi_opts.x1_stride = h.get<int>("x1_stride", p.husimi_opts.x1_stride);
      p.husimi_opts.x2_stride = h.get<int>("x2_stride", p.husimi_opts.x2_stride);
      p.husimi_opts.k1_stride = h.get<int>("k1_stride", p.husimi_opts.k1_stride);
      p.husimi_opts.k2_stride = h.get<int>("k2_stride", p.husimi_opts.k2_stride);
      if (h.has("half_width")) {
        const auto w = numbers(h.raw("half_width"), "evolve.husimi.half_width");
        if (w.size() != 2) throw ConfigError("evolve.husimi.half_width needs two entries");
        p.husimi_half_width = {w[0], w[1]};
      }
      h.finish();
      if (!(p.husimi_half_width[0] > 0.0) || !(p.husimi_half_width[1] > 0.0))
        throw ConfigError("evolve.husimi.half_width must be positive");
    }
    s.finish();
  }
  if (r.has("modes")) {
    Reader s = r.sub("modes");
    if (s.has("datum")) c.modes.datum = parse_datum(s.sub("datum"));
    c.modes.t = s.get<double>("t", c.modes.t);
    s.finish();
    if (!(c.modes.t >= 0.0)) throw ConfigError("modes.t must be >= 0");
  }
  if (r.has("spectrum")) {
    Reader s = r.sub("spectrum");
    SpectrumParams& p = c.spectrum;
    p.xi1 = s.get<double>("xi1", p.xi1);
    p.k_lo = s.get<int>("k_lo", p.k_lo);
    p.k_hi = s.get<int>("k_hi", p.k_hi);
    p.branch = s.get<std::string>("branch", p.branch);
    p.n_pairs = s.get<int>("n_pairs", p.n_pairs);
    s.finish();
    if (p.k_lo < 0 || p.k_hi < p.k_lo) throw ConfigError("spectrum needs 0 <= k_lo <= k_hi");
    if (p.branch != "plus" && p.branch != "minus") throw ConfigError("spectrum.branch must be plus or minus");
    if (p.n_pairs < 1) throw ConfigError("spectrum.n_pairs must be >= 1");
  }
  r.finish();

  if (ov.out) c.output_dir = *ov.out;
  if (ov.epsilon_list) c.epsilons = parse_epsilon_list(*ov.epsilon_list);
  if (ov.threads) c.threads = *ov.threads;
  if (c.output_dir.empty()) throw ConfigError("no output directory: pass --out or set output_dir");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");

  // checks that need only the grids
  for (double eps : c.epsilons) {
    const Grid2D g = grid_for(c, eps);
    g.validate();
    if (scenario == "evolve") {
      c.evolve.omega.validate(g);
      if (c.evolve.husimi_opts.x1_stride < 1 || g.N1 % c.evolve.husimi_opts.x1_stride ||
          c.evolve.husimi_opts.x2_stride < 1 || g.N2 % c.evolve.husimi_opts.x2_stride ||
          c.evolve.husimi_opts.k1_stride < 1 || c.evolve.husimi_opts.k2_stride < 1)
        throw ConfigError("husimi strides must be positive and divide the grid sizes");
    }
  }
  if (scenario == "evolve" && c.evolve.window && c.evolve.window->at(1) > c.evolve.times.back())
    throw ConfigError("evolve.window extends beyond the last output time");

  c.snapshot = effective(c);
  if (scenario != "report" && j.contains(scenario)) c.snapshot[scenario] = j.at(scenario);
  return c;
}

RunConfig load_config(const std::optional<std::string>& path, const std::string& scenario, const Overrides& ov) {
  json j = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + *path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("invalid JSON in " + *path + ": " + e.what());
    }
  }
  return parse_config(j, scenario, ov);
}

}  // namespace rossbytrap::cli
