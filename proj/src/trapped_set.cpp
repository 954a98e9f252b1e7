#include "rossbytrap/trapped_set.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "rossbytrap/errors.hpp"

namespace rossbytrap {

double drift_F(const CoriolisProfile& profile, double xi1, double x2, double xi2,
               const PeriodOptions& period) {
  try {
    return drift_F_space_signed(profile, xi1, x2, xi2);
  } catch (const NoTurningPoints&) {
    // circulating orbit: the turning-point formula does not apply
    return drift_F_time(profile, {0.0, x2, xi1, xi2}, period);
  }
}

namespace {

// |b′| at or below roundoff of the Fourier sum counts as a zero of b′.
constexpr double kBprimeZero = 1e-12;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Log-spaced nodes from |a| to |b| carrying the common sign of a and b.
std::vector<double> log_nodes(double a, double b, int per_decade) {
  const double s = a < 0.0 ? -1.0 : 1.0;
  double lo = std::fabs(a), hi = std::fabs(b);
  if (lo > hi) std::swap(lo, hi);
  const int n = std::max(1, static_cast<int>(std::ceil(per_decade * std::log10(hi / lo))));
  std::vector<double> out(n + 1);
  for (int k = 0; k <= n; ++k) out[k] = s * lo * std::pow(hi / lo, static_cast<double>(k) / n);
  out[n] = s * hi;
  return out;
}

double safe_F(const CoriolisProfile& profile, double xi1, double x2, double xi2,
              const PeriodOptions& period) {
  try {
    return drift_F(profile, xi1, x2, xi2, period);
  } catch (const ComputeError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

LambdaPoint refine_root(const CoriolisProfile& profile, double x2, double xi2, double a,
                        double b, double Fa, double Fb, const LambdaOptions& opts) {
  LambdaPoint lp;
  lp.x2 = x2;
  lp.xi2 = xi2;
  lp.bracket_lo = std::min(a, b);
  lp.bracket_hi = std::max(a, b);
  if (Fa == 0.0 || Fb == 0.0) {
    lp.xi1_root = Fa == 0.0 ? a : b;
  } else {
    auto f = [&](double xi1) { return drift_F(profile, xi1, x2, xi2, opts.period); };
    auto tol = [&](double u, double v) {
      return std::fabs(u - v) <= opts.root_tol * std::max(std::fabs(u), std::fabs(v));
    };
    std::uintmax_t iters = 200;
    const bool ordered = a < b;
    auto [r0, r1] = boost::math::tools::toms748_solve(f, ordered ? a : b, ordered ? b : a,
                                                      ordered ? Fa : Fb, ordered ? Fb : Fa, tol,
                                                      iters);
    lp.xi1_root = 0.5 * (r0 + r1);
  }
  lp.F_residual = std::fabs(drift_F(profile, lp.xi1_root, x2, xi2, opts.period));
  if (opts.cross_check_time) {
    try {
      lp.F_time_residual =
          std::fabs(drift_F_time(profile, {0.0, x2, lp.xi1_root, xi2}, opts.period));
    } catch (const ComputeError&) {
      lp.F_time_residual = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return lp;
}

std::vector<LambdaPoint> roots_on_half_line(const CoriolisProfile& profile, double x2, double xi2,
                                            double lo, double hi, const LambdaOptions& opts,
                                            EndpointSigns* signs) {
  const std::vector<double> nodes = log_nodes(lo, hi, opts.nodes_per_decade);
  std::vector<double> F(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) F[k] = safe_F(profile, nodes[k], x2, xi2, opts.period);

  const double bp = profile.db(x2);
  auto first_finite = std::find_if(F.begin(), F.end(), [](double v) { return std::isfinite(v); });
  auto last_finite = std::find_if(F.rbegin(), F.rend(), [](double v) { return std::isfinite(v); });
  if (signs && first_finite != F.end()) {
    signs->small_xi1 = sign_of(bp * *first_finite);
    signs->large_xi1 = sign_of(bp * *last_finite);
  }

  std::vector<LambdaPoint> out;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    if (!std::isfinite(F[k]) || !std::isfinite(F[k + 1])) continue;
    if (F[k] == 0.0 && k > 0) continue;  // already reported as the right end of the previous pair
    if (F[k] * F[k + 1] <= 0.0 && !(F[k] == 0.0 && F[k + 1] == 0.0))
      out.push_back(refine_root(profile, x2, xi2, nodes[k], nodes[k + 1], F[k], F[k + 1], opts));
  }
  return out;
}

}  // namespace

EndpointSigns endpoint_signs(const CoriolisProfile& profile, double x2, double xi2, double xi1_lo,
                             double xi1_hi, const PeriodOptions& period) {
  double a = xi1_lo, b = xi1_hi;
  if (std::fabs(a) > std::fabs(b)) std::swap(a, b);
  const double bp = profile.db(x2);
  return {sign_of(bp * drift_F(profile, a, x2, xi2, period)),
          sign_of(bp * drift_F(profile, b, x2, xi2, period))};
}

std::vector<LambdaPoint> find_lambda_roots(const CoriolisProfile& profile, double x2, double xi2,
                                           double xi1_lo, double xi1_hi,
                                           const LambdaOptions& opts) {
  const AdmissibilityMargins margins;
  if (!(std::fabs(profile.db(x2)) > kBprimeZero)) throw Inadmissible("b'(x2) = 0: F has no sign structure");
  if (xi1_lo > xi1_hi) std::swap(xi1_lo, xi1_hi);

  std::vector<std::pair<double, double>> pieces;
  if (xi1_lo < 0.0 && xi1_hi > 0.0) {
    if (xi1_lo < -margins.xi1) pieces.emplace_back(-margins.xi1, xi1_lo);
    if (xi1_hi > margins.xi1) pieces.emplace_back(margins.xi1, xi1_hi);
  } else if (xi1_hi <= 0.0) {
    pieces.emplace_back(std::min(xi1_hi, -margins.xi1), xi1_lo);
  } else {
    pieces.emplace_back(std::max(xi1_lo, margins.xi1), xi1_hi);
  }

  std::vector<LambdaPoint> out;
  std::ostringstream why;
  for (const auto& [a, b] : pieces) {
    if (std::fabs(a) >= std::fabs(b)) continue;
    EndpointSigns s;
    auto roots = roots_on_half_line(profile, x2, xi2, a, b, opts, &s);
    if (roots.empty())
      why << "[" << a << ", " << b << "]: sign(b'F) = " << s.small_xi1 << " at small |xi1|, "
          << s.large_xi1 << " at large |xi1|; ";
    out.insert(out.end(), roots.begin(), roots.end());
  }
  if (out.empty()) throw NoSignChange(why.str() + "enlarge the xi1 range");
  std::sort(out.begin(), out.end(),
            [](const LambdaPoint& p, const LambdaPoint& q) { return p.xi1_root < q.xi1_root; });
  return out;
}

std::vector<LambdaPoint> LambdaCloud::points() const {
  std::vector<LambdaPoint> out;
  for (const auto& n : nodes) out.insert(out.end(), n.roots.begin(), n.roots.end());
  return out;
}

namespace {

LambdaNode process_node(const CoriolisProfile& profile, const LambdaGrid& grid, int i, int j,
                        const LambdaOptions& opts) {
  LambdaNode node;
  node.i = i;
  node.j = j;
  const double x2 = grid.x2(i), xi2 = grid.xi2(j);
  if (std::fabs(profile.db(x2)) < grid.bprime_margin || !admissible(profile, {0.0, x2, grid.xi1_lo, xi2})) {
    node.status = NodeStatus::Skipped;
    return node;
  }
  try {
    node.roots = find_lambda_roots(profile, x2, xi2, grid.xi1_lo, grid.xi1_hi, opts);
    node.status = NodeStatus::Root;
  } catch (const NoSignChange&) {
    node.status = NodeStatus::NoRoot;
  } catch (const ComputeError& e) {
    node.status = NodeStatus::Failed;
    node.message = e.what();
  }
  return node;
}

// Hausdorff distance between two root lists of equal length (sorted).
double root_jump(const std::vector<LambdaPoint>& a, const std::vector<LambdaPoint>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k].xi1_root - b[k].xi1_root));
  return m;
}

void summarize(LambdaCloud& cloud, const LambdaOptions& opts) {
  LambdaSummary& s = cloud.summary;
  const LambdaGrid& g = cloud.grid;
  s = LambdaSummary{};
  s.nodes = static_cast<int>(cloud.nodes.size());
  for (const auto& n : cloud.nodes) {
    switch (n.status) {
      case NodeStatus::Root:
        ++s.nodes_with_root;
        break;
      case NodeStatus::Skipped:
        ++s.skipped;
        break;
      case NodeStatus::Failed:
        ++s.failed;
        break;
      case NodeStatus::NoRoot:
        break;
    }
    s.points += static_cast<int>(n.roots.size());
    for (std::size_t k = 0; k + 1 < n.roots.size(); ++k) {
      const double gap = n.roots[k + 1].xi1_root - n.roots[k].xi1_root;
      if (!(gap > 4.0 * opts.root_tol * std::fabs(n.roots[k + 1].xi1_root))) s.locally_graph = false;
    }
  }
  const int usable = s.nodes - s.skipped;
  s.coverage = usable > 0 ? static_cast<double>(s.nodes_with_root) / usable : 0.0;
  auto at = [&](int i, int j) -> const LambdaNode& { return cloud.nodes[i * g.n_xi2 + j]; };
  for (int i = 0; i < g.n_x2; ++i)
    for (int j = 0; j < g.n_xi2; ++j) {
      const auto& a = at(i, j);
      if (a.roots.empty()) continue;
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
        if (i + di >= g.n_x2 || j + dj >= g.n_xi2) continue;
        const auto& b = at(i + di, j + dj);
        if (b.roots.size() == a.roots.size())
          s.max_neighbor_jump = std::max(s.max_neighbor_jump, root_jump(a.roots, b.roots));
      }
    }
}

void check_grid(const LambdaGrid& grid) {
  if (grid.n_x2 < 1 || grid.n_xi2 < 1) throw ConfigError("lambda grid needs at least one node per axis");
  if (!(grid.xi1_lo > 0.0 && grid.xi1_hi > grid.xi1_lo))
    throw ConfigError("lambda grid needs 0 < xi1_lo < xi1_hi");
}

}  // namespace

LambdaCloud sample_lambda(const CoriolisProfile& profile, const LambdaGrid& grid,
                          const LambdaOptions& opts) {
  check_grid(grid);
  LambdaCloud cloud;
  cloud.grid = grid;
  const int n = grid.n_x2 * grid.n_xi2;
  cloud.nodes.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k)
    cloud.nodes[k] = process_node(profile, grid, k / grid.n_xi2, k % grid.n_xi2, opts);
  summarize(cloud, opts);
  return cloud;
}

LambdaCloud sample_lambda_serial(const CoriolisProfile& profile, const LambdaGrid& grid,
                                 const LambdaOptions& opts) {
  check_grid(grid);
  LambdaCloud cloud;
  cloud.grid = grid;
  const int n = grid.n_x2 * grid.n_xi2;
  cloud.nodes.resize(n);
  for (int k = 0; k < n; ++k)
    cloud.nodes[k] = process_node(profile, grid, k / grid.n_xi2, k % grid.n_xi2, opts);
  summarize(cloud, opts);
  return cloud;
}

ScalingFit smallxi_scaling(const CoriolisProfile& profile, double x2, double xi2,
                           const std::vector<double>& xi1_sequence, double xi1_margin) {
  if (xi1_sequence.size() < 2) throw FitFailure("need at least two xi1 values");
  if (!(std::fabs(profile.db(x2)) > kBprimeZero)) throw Inadmissible("b'(x2) = 0");
  ScalingFit fit;
  fit.xi1 = xi1_sequence;
  fit.F.reserve(xi1_sequence.size());
  int sign = 0;
  for (double xi1 : xi1_sequence) {
    const double F = drift_F(profile, xi1, x2, xi2);
    const int s = sign_of(F);
    if (s == 0 || (sign != 0 && s != sign)) {
      std::ostringstream os;
      os << "F changes sign or vanishes at xi1 = " << xi1;
      throw FitFailure(os.str());
    }
    sign = s;
    fit.F.push_back(F);
  }
  const std::size_t n = xi1_sequence.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += std::log(std::fabs(fit.xi1[k]));
    my += std::log(std::fabs(fit.F[k]));
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  fit.min_abs_F_xi1 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = std::log(std::fabs(fit.xi1[k])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(std::fabs(fit.F[k])) - my);
    fit.min_abs_F_xi1 = std::min(fit.min_abs_F_xi1, std::fabs(fit.F[k] * fit.xi1[k]));
  }
  if (!(sxx > 0.0)) throw FitFailure("xi1 sequence has no spread");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  // Between the admissibility margin and the smallest sampled ξ₁ the sign of F must not change.
  double smallest = fit.xi1[0];
  for (double v : fit.xi1)
    if (std::fabs(v) < std::fabs(smallest)) smallest = v;
  const double s = smallest < 0.0 ? -1.0 : 1.0;
  fit.no_root_below = true;
  if (std::fabs(smallest) > 2.0 * xi1_margin) {
    for (double v : log_nodes(s * 2.0 * xi1_margin, smallest, 8)) {
      const double F = safe_F(profile, v, x2, xi2, LambdaOptions{}.period);
      if (std::isfinite(F) && sign_of(F) != sign) fit.no_root_below = false;
    }
  }
  return fit;
}

namespace {

struct FixedEnergyFamily {
  const CoriolisProfile& profile;
  double E;
  double lo, hi;  // bracket for the well centre

  double center(double xi1) const { return well_center(profile, xi1, lo, hi, E > 0.0 ? 1 : -1); }
  double area(double xi1) const { return kTwoPi * action_A(profile, xi1, E, center(xi1)); }
  double slope(double xi1, double h) const { return (area(xi1 + h) - area(xi1 - h)) / (2.0 * h); }
  double F(double xi1) const {
    const double c = center(xi1);
    const double g = libration_function(profile, xi1, E, c);
    if (!(g > 0.0)) throw NoClosedOrbit("energy shell collapsed at the stencil point");
    return drift_F_space_signed(profile, xi1, c, std::sqrt(g));
  }
};

}  // namespace

AreaReport extremal_area_check(const CoriolisProfile& profile, const LambdaPoint& lp) {
  AreaReport r;
  const double xi1 = lp.xi1_root;
  r.E = rossby_energy(profile, xi1, lp.x2, lp.xi2);
  TurningPoints tp;
  try {
    tp = turning_points(profile, xi1, r.E, lp.x2);
  } catch (const NoTurningPoints& e) {
    throw NoClosedOrbit(e.what());
  }
  const FixedEnergyFamily fam{profile, r.E, tp.x_minus, tp.x_plus};

  r.stencil_h = 1e-4 * std::fabs(xi1);
  r.a_prime_root = fam.slope(xi1, r.stencil_h);
  r.a_prime_lo = fam.slope(lp.bracket_lo, 1e-4 * std::fabs(lp.bracket_lo));
  r.a_prime_hi = fam.slope(lp.bracket_hi, 1e-4 * std::fabs(lp.bracket_hi));
  const double h2 = 1e-3 * std::fabs(xi1);
  r.a_second_root = (fam.area(xi1 + h2) - 2.0 * fam.area(xi1) + fam.area(xi1 - h2)) / (h2 * h2);
  r.sign_change = r.a_prime_lo * r.a_prime_hi < 0.0;
  r.tolerance = 1e-6 * std::max({1.0, std::fabs(r.a_prime_lo), std::fabs(r.a_prime_hi)});
  r.critical = std::fabs(r.a_prime_root) <= r.tolerance;
  r.extremum = r.a_second_root > 0.0 ? "min" : (r.a_second_root < 0.0 ? "max" : "flat");

  r.F_lo = fam.F(lp.bracket_lo);
  r.F_hi = fam.F(lp.bracket_hi);
  auto rel = [](double ap, double F) { return std::fabs(ap + F) / std::max(std::fabs(F), 1e-300); };
  r.slope_relation_err = std::max(rel(r.a_prime_lo, r.F_lo), rel(r.a_prime_hi, r.F_hi));
  return r;
}

}  // namespace rossbytrap
