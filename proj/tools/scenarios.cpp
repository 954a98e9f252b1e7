#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Husimi CSVs beyond this many rows are refused rather than written.
constexpr std::size_t kMaxHusimiRows = 4'000'000;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// CSV row from numbers
template <class... T>
std::string row(T... v) {
  std::string s;
  ((s += (s.empty() ? "" : ",") + csv_number(static_cast<double>(v))), ...);
  return s + "\n";
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json grid_json(const Grid2D& g) {
  return {{"epsilon", g.epsilon}, {"N1", g.N1}, {"N2", g.N2}, {"L1", g.L1}};
}

json base_manifest(const RunConfig& cfg) {
  json m;
  m["tool"] = "rossbytrap";
  m["format"] = 1;
  m["scenario"] = cfg.scenario;
  m["config"] = cfg.snapshot;
  m["profile"] = cfg.snapshot["profile"];
  m["epsilons"] = cfg.epsilons;
  m["seed"] = cfg.seed;
  json grids = json::array();
  for (double eps : cfg.epsilons) grids.push_back(grid_json(grid_for(cfg, eps)));
  m["grids"] = grids;
  return m;
}

StateField make_datum(const RunConfig& cfg, const CoriolisProfile& p, const DatumSpec& d, double eps,
                      std::vector<LagrangianSample>* cloud) {
  const Grid2D g = grid_for(cfg, eps);
  if (!d.snapshot.empty()) {
    StateField U = read_snapshot(d.snapshot);
    const Grid2D& h = U.grid;
    if (h.N1 != g.N1 || h.N2 != g.N2 || h.L1 != g.L1 || h.epsilon != eps)
      throw ConfigError("snapshot grid (N1=" + std::to_string(h.N1) + ", N2=" + std::to_string(h.N2) +
                        ") does not match the run grid for epsilon " + csv_number(eps));
    U.time = 0.0;
    return U;
  }
  WkbResult w = wkb_initial(p, gaussian_wkb(p, d.gaussian), g);
  if (cloud) *cloud = std::move(w.cloud);
  return std::move(w.field);
}

void add_datum_digest(json& m, const DatumSpec& d) {
  if (!d.snapshot.empty()) m["datum_snapshot_sha256"] = sha256_file(d.snapshot);
}

// ---------------------------------------------------------------- rays

json run_rays(const RunConfig& cfg, OutputSink& sink) {
  const CoriolisProfile p = cfg.profile.build();
  const RaysParams& rp = cfg.rays;
  std::vector<PhasePoint> pts = rp.points;
  std::mt19937_64 rng(cfg.seed);
  auto draw = [&rng](const std::array<double, 2>& r) {
    // 53 random bits mapped to [lo, hi): identical across standard libraries
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return r[0] + (r[1] - r[0]) * u;
  };
  for (int i = 0; i < rp.random_count; ++i) {
    PhasePoint q;
    q.x2 = draw(rp.random_x2);
    q.xi1 = draw(rp.random_xi1);
    q.xi2 = draw(rp.random_xi2);
    pts.push_back(q);
  }
  if (pts.empty()) throw ConfigError("rays: no points (give rays.points or rays.random.count)");
  for (const auto& q : pts) require_admissible(p, q);

  const int n = static_cast<int>(pts.size());
  std::vector<Trajectory> traj(n);
  std::vector<std::array<double, 4>> drift(n, {kNaN, kNaN, kNaN, kNaN});
  std::vector<std::string> errors(n), drift_notes(n);
  RayOptions ro;
  ro.sample_stride = rp.sample_stride;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const double dt = rp.dt > 0.0 ? rp.dt : default_ray_step(p, pts[i]);
      traj[i] = integrate_ray(p, pts[i], rp.t_end, dt, ro);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      continue;
    }
    if (!rp.drift) continue;
    std::string note;
    try {
      const PeriodData pd = find_period(p, pts[i]);
      drift[i][3] = pd.period;
      drift[i][0] = drift_F_time(p, pts[i], pd);
    } catch (const ComputeError& e) {
      note += std::string(e.what()) + "; ";
    }
    try {
      drift[i][1] = drift_F_space_signed(p, pts[i].xi1, pts[i].x2, pts[i].xi2);
    } catch (const ComputeError& e) {
      note += std::string(e.what()) + "; ";
    }
    try {
      drift[i][2] = drift_F_action(p, pts[i]);
    } catch (const ComputeError& e) {
      note += std::string(e.what()) + "; ";
    }
    drift_notes[i] = note;
  }
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty()) throw ToleranceExceeded("ray " + std::to_string(i) + ": " + errors[i]);

  Chart chart{"Ray drift in x1", "t", "x1", false, false, {}};
  json per = json::array();
  for (int i = 0; i < n; ++i) {
    std::string csv = "t,x1,x2,xi1,xi2,E\n";
    Series s;
    char nm[40];
    std::snprintf(nm, sizeof nm, "trajectory_%03d.csv", i);
    s.name = nm;
    for (const RayState& st : traj[i].samples) {
      const PhasePoint& q = st.point;
      csv += row(st.time, q.x1, q.x2, q.xi1, q.xi2, rossby_energy(p, q.xi1, q.x2, q.xi2));
      s.x.push_back(st.time);
      s.y.push_back(q.x1);
    }
    sink.write(nm, csv);
    if (i < 8) chart.series.push_back(std::move(s));
    per.push_back({{"file", nm},
                   {"start", {pts[i].x1, pts[i].x2, pts[i].xi1, pts[i].xi2}},
                   {"dt", traj[i].dt},
                   {"max_energy_drift", traj[i].max_energy_drift}});
    if (rp.drift && !drift_notes[i].empty()) per.back()["drift_notes"] = drift_notes[i];
  }
  if (rp.drift) {
    std::string csv = "xi1,x2,xi2,F_time,F_space,F_action,period\n";
    for (int i = 0; i < n; ++i)
      csv += row(pts[i].xi1, pts[i].x2, pts[i].xi2, drift[i][0], drift[i][1], drift[i][2], drift[i][3]);
    sink.write("drift.csv", csv);
  }
  sink.write("rays.svg", chart.render());
  json summary = {{"points", n}, {"t_end", rp.t_end}, {"rays", per}};
  sink.write("rays_summary.json", summary.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------- lambda

json run_lambda(const RunConfig& cfg, OutputSink& sink) {
  const CoriolisProfile p = cfg.profile.build();
  const LambdaCloud cloud = sample_lambda(p, cfg.lambda);
  std::string csv = "x2,xi2,xi1_root,F_residual\n";
  Series s{"Lambda roots", {}, {}, true, {}};
  for (const LambdaPoint& lp : cloud.points()) {
    csv += row(lp.x2, lp.xi2, lp.xi1_root, lp.F_time_residual);
    s.x.push_back(lp.x2);
    s.y.push_back(lp.xi2);
    s.color_value.push_back(std::log10(lp.xi1_root));
  }
  sink.write("lambda_cloud.csv", csv);
  sink.write("lambda_cloud.svg",
             Chart{"Trapped set: (x2, xi2) colored by log10 xi1", "x2", "xi2", false, false, {s}}.render());
  const LambdaSummary& su = cloud.summary;
  json failed = json::array();
  for (const LambdaNode& nd : cloud.nodes)
    if (nd.status == NodeStatus::Failed)
      failed.push_back({{"x2", cloud.grid.x2(nd.i)}, {"xi2", cloud.grid.xi2(nd.j)}, {"error", nd.message}});
  json summary = {{"nodes", su.nodes},
                  {"nodes_with_root", su.nodes_with_root},
                  {"skipped", su.skipped},
                  {"failed", su.failed},
                  {"points", su.points},
                  {"coverage", su.coverage},
                  {"max_neighbor_jump", su.max_neighbor_jump},
                  {"locally_graph", su.locally_graph},
                  {"failed_nodes", failed}};
  sink.write("lambda_summary.json", summary.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------- evolve

// Whether F(ξ₁, ·, 0) changes sign over the Rossby-weighted support of the cloud.
json cloud_meets_lambda(const CoriolisProfile& p, const std::vector<LagrangianSample>& cloud, double xi1) {
  double wmax = 0.0;
  for (const auto& s : cloud) wmax = std::max(wmax, std::abs(s.rossby_weight));
  std::vector<double> x2s;
  for (const auto& s : cloud)
    if (std::abs(s.rossby_weight) > 1e-3 * wmax) x2s.push_back(s.point.x2);
  std::sort(x2s.begin(), x2s.end());
  x2s.erase(std::unique(x2s.begin(), x2s.end()), x2s.end());
  int sign = 0;
  for (double x2 : x2s) {
    if (std::fabs(p.db(x2)) < 1e-3) continue;
    const int s = drift_F(p, xi1, x2, 0.0) > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return true;
    sign = s;
  }
  return false;
}

int k_of(double xi, double period, double eps) { return static_cast<int>(std::lround(xi * period / (kTwoPi * eps))); }

std::string husimi_csv(const StateField& U, const EvolveParams& ep) {
  HusimiOptions o = ep.husimi_opts;
  const Grid2D& g = U.grid;
  if (ep.datum.snapshot.empty()) {
    const double e = g.epsilon;
    const GaussianWkb& d = ep.datum.gaussian;
    o.k1_band = std::make_pair(k_of(d.xi1 - ep.husimi_half_width[0], g.L1, e),
                               k_of(d.xi1 + ep.husimi_half_width[0], g.L1, e));
    o.k2_band = std::make_pair(k_of(d.xi2 - ep.husimi_half_width[1], kTwoPi, e),
                               k_of(d.xi2 + ep.husimi_half_width[1], kTwoPi, e));
  }
  const auto span = [](const std::optional<std::pair<int, int>>& b, int n, int stride) {
    return static_cast<std::size_t>((b ? b->second - b->first + 1 : n) / stride + 1);
  };
  const std::size_t rows = static_cast<std::size_t>(g.N1 / o.x1_stride) * (g.N2 / o.x2_stride) *
                           span(o.k1_band, g.N1, o.k1_stride) * span(o.k2_band, g.N2, o.k2_stride);
  if (rows > kMaxHusimiRows)
    throw ConfigError("Husimi grid would have about " + std::to_string(rows) +
                      " rows; raise the strides or narrow half_width");
  const HusimiDensity h = husimi(U, o);
  std::string csv = "x1,x2,xi1,xi2,density\n";
  for (std::size_t a = 0; a < h.x1.size(); ++a)
    for (std::size_t b = 0; b < h.x2.size(); ++b)
      for (std::size_t c = 0; c < h.xi1.size(); ++c)
        for (std::size_t d = 0; d < h.xi2.size(); ++d) csv += row(h.x1[a], h.x2[b], h.xi1[c], h.xi2[d], h.at(a, b, c, d));
  return csv;
}

json run_evolve(const RunConfig& cfg, OutputSink& sink) {
  const CoriolisProfile p = cfg.profile.build();
  const EvolveParams& ep = cfg.evolve;
  EvolveOptions eo;
  eo.filter = ep.filter;
  Chart chart{"Local mass in Omega: " + ep.label, "t (slow time)", "local mass / initial", false, true, {}};
  json per = json::array();
  for (double eps : cfg.epsilons) {
    std::vector<LagrangianSample> cloud;
    const StateField U0 = make_datum(cfg, p, ep.datum, eps, &cloud);
    std::vector<double> times;
    for (double t : ep.times) times.push_back(t / eps);
    const Evolution ev = evolve(p, U0, times, eo);

    const std::string tag = eps_tag(eps);
    std::string csv = "t,local_mass,total_mass\n";
    std::vector<double> lm(times.size());
    double drift = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      lm[j] = local_mass(ev.field(j), ep.omega);
      const double n = ev.norm(j);
      drift = std::max(drift, std::fabs(n - ev.norm(0)) / ev.norm(0));
      csv += row(ep.times[j], lm[j], n);
    }
    sink.write("timeseries_" + tag + ".csv", csv);

    const double m0 = lm[0];
    double m_min = std::numeric_limits<double>::infinity(), crossing = kNaN;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const bool in = !ep.window || (ep.times[j] >= ep.window->at(0) && ep.times[j] <= ep.window->at(1));
      if (in) m_min = std::min(m_min, lm[j]);
      if (std::isnan(crossing) && lm[j] < 1e-2 * m0) crossing = ep.times[j];
    }
    Series s{tag, ep.times, {}, false, {}};
    for (double v : lm) s.y.push_back(v / m0);
    chart.series.push_back(std::move(s));

    for (int j : ep.snapshots) {
      StateField f = ev.field(j);
      f.time = ep.times[j];
      sink.write("field_" + tag + "_t" + std::to_string(j) + ".bin", encode_snapshot(f));
    }
    for (int j : ep.husimi) sink.write("husimi_" + tag + "_t" + std::to_string(j) + ".csv", husimi_csv(ev.field(j), ep));

    json e = {{"epsilon", eps},
              {"grid", grid_json(ev.grid())},
              {"input_norm", U0.norm()},
              {"retained_norm", ev.norm(0)},
              {"branch_gap", nan_safe(ev.branch_gap())},
              {"active_modes", ev.active_modes().size()},
              {"initial_local_mass", m0},
              {"min_local_mass", nan_safe(m_min)},
              {"min_over_initial", nan_safe(m_min / m0)},
              {"first_time_below_1pct", nan_safe(crossing)},
              {"max_norm_drift", drift}};
    if (!cloud.empty()) e["cloud_meets_lambda"] = cloud_meets_lambda(p, cloud, ep.datum.gaussian.xi1);
    per.push_back(e);
  }
  sink.write("local_mass.svg", chart.render());
  json summary = {{"label", ep.label}, {"window", ep.window ? json(*ep.window) : json(nullptr)}, {"runs", per}};
  if (cfg.epsilons.size() >= 2) {
    std::vector<double> m;
    for (const auto& e : per) m.push_back(e["min_local_mass"].is_null() ? kNaN : e["min_local_mass"].get<double>());
    const std::size_t k = m.size();
    summary["last_pair_slope"] = nan_safe(std::log(m[k - 1] / m[k - 2]) / std::log(cfg.epsilons[k - 1] / cfg.epsilons[k - 2]));
  }
  sink.write("evolve_summary.json", summary.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------- modes

json run_modes(const RunConfig& cfg, OutputSink& sink) {
  const CoriolisProfile p = cfg.profile.build();
  std::string csv = "epsilon,roundtrip,scalar_vs_full,norm_minus,norm_zero,norm_plus\n";
  std::vector<double> rt, sv;
  for (double eps : cfg.epsilons) {
    const StateField U = make_datum(cfg, p, cfg.modes.datum, eps, nullptr);
    const Grid2D& g = U.grid;
    const ModeFields mf = project_modes(p, U);
    const StateField back = reconstruct(p, mf);
    double d = 0.0;
    for (std::size_t i = 0; i < U.values.size(); ++i) d += std::norm(U.values[i] - back.values[i]);
    rt.push_back(std::sqrt(d * g.dx1() * g.dx2()) / U.norm());

    const StateField R0 = reconstruct_mode(p, g, mf.u2[1], Branch::Zero);
    const double t = cfg.modes.t / eps;
    const auto full = evolve(p, R0, std::vector<double>{t}).u2(0);
    const auto scal = scalar_rossby_evolve(p, g, mf.u2[1], {t})[0];
    double s = 0.0, n = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) {
      s += std::norm(full[i] - scal[i]);
      n += std::norm(mf.u2[1][i]);
    }
    sv.push_back(n > 0.0 ? std::sqrt(s / n) : kNaN);
    csv += row(eps, rt.back(), sv.back(), mf.norm(0), mf.norm(1), mf.norm(2));
  }
  sink.write("modes.csv", csv);
  Chart chart{"Mode decomposition errors", "epsilon", "relative error", true, true,
              {{"round trip", cfg.epsilons, rt, false, {}}, {"scalar vs full Rossby", cfg.epsilons, sv, false, {}}}};
  sink.write("modes.svg", chart.render());
  json summary = {{"t", cfg.modes.t}};
  if (cfg.epsilons.size() >= 2) {
    summary["roundtrip_slope"] = nan_safe(loglog_slope(cfg.epsilons, rt));
    summary["scalar_vs_full_slope"] = nan_safe(loglog_slope(cfg.epsilons, sv));
  }
  sink.write("modes_summary.json", summary.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------- spectrum

json run_spectrum(const RunConfig& cfg, OutputSink& sink) {
  const CoriolisProfile p = cfg.profile.build();
  const SpectrumParams& sp = cfg.spectrum;
  std::vector<SpectrumTable> tabs;
  json residuals = json::array();
  Chart chart{"Bohr-Sommerfeld levels: |lambda_direct - lambda_BS|", "k", "difference", false, true, {}};
  for (double eps : cfg.epsilons) {
    const int n2 = grid_for(cfg, eps).N2;
    tabs.push_back(bohr_sommerfeld_levels(p, sp.xi1, eps, sp.k_lo, sp.k_hi, sp.branch, n2));
    std::string csv = "k,lambda_direct,lambda_bs,diff\n";
    Series s{eps_tag(eps), {}, {}, false, {}};
    for (const SpectrumRow& r : tabs.back().rows) {
      csv += row(r.k, r.lambda_direct, r.lambda_bs, r.diff());
      s.x.push_back(r.k);
      s.y.push_back(std::fabs(r.diff()));
    }
    chart.series.push_back(std::move(s));
    sink.write("spectrum_" + eps_tag(eps) + ".csv", csv);
    const ResidualReport rr = scalar_residual_check(p, sp.xi1, eps, sp.n_pairs, n2);
    json ent = json::array();
    for (const ResidualEntry& e : rr.entries)
      ent.push_back({{"index", e.index}, {"lambda", e.lambda}, {"residual", e.residual}, {"off_spectrum", e.off_spectrum}});
    residuals.push_back({{"epsilon", eps}, {"entries", ent}});
  }
  sink.write("spectrum.svg", chart.render());
  json summary = {{"xi1", sp.xi1}, {"branch", sp.branch}, {"k_lo", sp.k_lo}, {"k_hi", sp.k_hi}, {"residuals", residuals}};
  if (tabs.size() >= 2) {
    const ShiftFit f = fit_bs_shift(tabs);
    json fit = {{"k", f.k}, {"mu", f.mu}, {"epsilons", f.epsilons}, {"max_raw", f.max_raw},
                {"max_residual", f.max_residual}, {"slope_raw", f.slope_raw}, {"slope_residual", f.slope_residual}};
    sink.write("spectrum_fit.json", fit.dump(2) + "\n");
    std::vector<double> r0;
    for (const auto& r : residuals) r0.push_back(r["entries"][0]["residual"].get<double>());
    summary["residual_slope"] = nan_safe(loglog_slope(cfg.epsilons, r0));
  }
  sink.write("spectrum_summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace

json run_scenario(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  OutputSink sink(cfg.output_dir);
  json m = base_manifest(cfg);
  json summary;
  if (cfg.scenario == "rays") summary = run_rays(cfg, sink);
  else if (cfg.scenario == "lambda") summary = run_lambda(cfg, sink);
  else if (cfg.scenario == "evolve") {
    add_datum_digest(m, cfg.evolve.datum);
    summary = run_evolve(cfg, sink);
  } else if (cfg.scenario == "modes") {
    add_datum_digest(m, cfg.modes.datum);
    summary = run_modes(cfg, sink);
  } else if (cfg.scenario == "spectrum") summary = run_spectrum(cfg, sink);
  else throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  m["timings"] = {{"wall_seconds", since(t0)}};
  sink.commit(m);
  return m;
}

}  // namespace rossbytrap::cli
