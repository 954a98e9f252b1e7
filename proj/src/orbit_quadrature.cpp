// Turning-point integrals over librating orbits: the drift functional from
// its spatial representation, the action variable, and its inversion.

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "rossbytrap/errors.hpp"
#include "rossbytrap/rays.hpp"

namespace rossbytrap {

namespace {

constexpr double kQuadTol = 1e-12;
constexpr std::size_t kQuadLevels = 15;

// Bisect between a point with g > 0 and one with g <= 0 down to adjacent
// doubles; returns the endpoint on the positive side.
template <class G>
double refine_boundary(const G& g, double inside, double outside) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    if (g(mid) > 0.0)
      inside = mid;
    else
      outside = mid;
  }
  return inside;
}

// ∫_{lo}^{hi} f(x)/√g(x) dx (or f·√g when `sqrt_numerator`) with g vanishing
// at both ends. The double-exponential rule clusters nodes at the ends and
// absorbs the inverse square-root singularity; within roundoff of an end, g is
// replaced by its linear model so cancellation cannot produce g <= 0.
template <class F, class G, class DG>
double endpoint_singular_integral(const F& f, const G& g, const DG& dg, double lo, double hi,
                                  bool sqrt_numerator, double* err_out) {
  const double slope_lo = std::fabs(dg(lo)), slope_hi = std::fabs(dg(hi));
  const double mid = 0.5 * (lo + hi);
  const double near = 1e-10 * (hi - lo);
  auto integrand = [&](double x, double dist) {
    double gx;
    if (std::fabs(dist) < near)
      gx = (x < mid ? slope_lo : slope_hi) * std::fabs(dist);
    else
      gx = g(x);
    if (!(gx > 0.0)) gx = (x < mid ? slope_lo : slope_hi) * std::fabs(dist);
    if (!(gx > 0.0)) return 0.0;
    return sqrt_numerator ? f(x) * std::sqrt(gx) : f(x) / std::sqrt(gx);
  };
  boost::math::quadrature::tanh_sinh<double> rule(kQuadLevels);
  double err = 0.0;
  const double v = rule.integrate(integrand, lo, hi, kQuadTol, &err);
  if (err_out) *err_out = err;
  return v;
}

}  // namespace

double libration_function(const CoriolisProfile& profile, double xi1, double E, double x) {
  const ProfileValue v = profile.eval(x);
  return v.db * xi1 / E - xi1 * xi1 - v.b * v.b;
}

namespace {

double libration_slope(const CoriolisProfile& profile, double xi1, double E, double x) {
  const ProfileValue v = profile.eval(x);
  return v.d2b * xi1 / E - 2.0 * v.b * v.db;
}

}  // namespace

TurningPoints turning_points(const CoriolisProfile& profile, double xi1, double E, double x2) {
  if (!(E != 0.0) || !std::isfinite(E)) throw NoTurningPoints("energy is zero");
  auto g = [&](double x) { return libration_function(profile, xi1, E, x); };

  // Interior starting point: x2 itself, or a nudge off it when x2 is a
  // turning point (ξ₂ = 0).
  double start = x2;
  if (!(g(x2) > 1e-13 * (xi1 * xi1 + 1.0))) {
    const double d = 1e-7;
    const double gp = g(x2 + d), gm = g(x2 - d);
    if (gp > 0.0 && gp >= gm)
      start = x2 + d;
    else if (gm > 0.0)
      start = x2 - d;
    else
      throw DegenerateOrbit("zero-amplitude orbit (x2 is a fixed point of the flow)");
  }

  const double h = kTwoPi / 4096.0;
  auto scan = [&](double from, double dir, double limit) -> std::pair<bool, double> {
    double x = from;
    while (dir * (x - limit) < 0.0) {
      const double xn = x + dir * h;
      if (!(g(xn) > 0.0)) return {true, refine_boundary(g, x, xn)};
      x = xn;
    }
    return {false, 0.0};
  };
  const auto [hit_plus, x_plus] = scan(start, 1.0, start + kTwoPi);
  if (!hit_plus) throw NoTurningPoints("g > 0 on the whole circle (circulating orbit)");
  const auto [hit_minus, x_minus] = scan(start, -1.0, x_plus - kTwoPi);
  if (!hit_minus) throw NoTurningPoints("g > 0 on the whole circle (circulating orbit)");
  return {x_minus, x_plus};
}

double drift_F_space_signed(const CoriolisProfile& profile, double xi1, double x2, double xi2) {
  require_admissible(profile, {0.0, x2, xi1, xi2});
  const double E = rossby_energy(profile, xi1, x2, xi2);
  const TurningPoints tp = turning_points(profile, xi1, E, x2);
  auto g = [&](double x) { return libration_function(profile, xi1, E, x); };
  auto dg = [&](double x) { return libration_slope(profile, xi1, E, x); };
  auto f = [&](double x) { return profile.db(x) / E - 2.0 * xi1; };
  double err = 0.0;
  const double I = endpoint_singular_integral(f, g, dg, tp.x_minus, tp.x_plus, false, &err);
  if (!std::isfinite(I) || err > 1e-7 * std::max(1.0, std::fabs(I))) {
    std::ostringstream os;
    os << "turning-point integral error estimate " << err << " (value " << I << ")";
    throw QuadratureFailure(os.str());
  }
  return E > 0.0 ? I : -I;
}

double drift_F_space(const CoriolisProfile& profile, double xi1, double x2, double xi2) {
  return std::fabs(drift_F_space_signed(profile, xi1, x2, xi2));
}

double well_center(const CoriolisProfile& profile, double xi1, double lo, double hi, int sign) {
  auto neg = [&](double x) { return -sign * rossby_energy(profile, xi1, x, 0.0); };
  std::uintmax_t iters = 500;
  const double x0 = boost::math::tools::brent_find_minima(neg, lo, hi, 52, iters).first;
  // The minimizer is only good to √eps; polish on the zero of ∂E/∂x₂ at ξ₂ = 0,
  // whose numerator is b″K − 2bb′² with K = ξ₁² + b².
  auto dE = [&](double x) {
    const ProfileValue v = profile.eval(x);
    return v.d2b * (xi1 * xi1 + v.b * v.b) - 2.0 * v.b * v.db * v.db;
  };
  const double w = 1e-6 * std::max(1.0, hi - lo);
  const double a = x0 - w, b = x0 + w;
  const double fa = dE(a), fb = dE(b);
  if (!(fa * fb < 0.0)) return x0;
  iters = 100;
  auto [r0, r1] = boost::math::tools::toms748_solve(dE, a, b, fa, fb,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r0 + r1);
}

namespace {

double global_well_center(const CoriolisProfile& profile, double xi1, int sign) {
  constexpr int kSamples = 512;
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    const double x = kTwoPi * i / kSamples;
    const double v = sign * rossby_energy(profile, xi1, x, 0.0);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double step = kTwoPi / kSamples;
  return well_center(profile, xi1, kTwoPi * best / kSamples - step, kTwoPi * best / kSamples + step,
                     sign);
}

double oriented_action(const CoriolisProfile& profile, double xi1, double E, double hint) {
  auto g = [&](double x) { return libration_function(profile, xi1, E, x); };
  auto dg = [&](double x) { return libration_slope(profile, xi1, E, x); };
  TurningPoints tp;
  try {
    tp = turning_points(profile, xi1, E, hint);
  } catch (const NoTurningPoints& e) {
    throw NoClosedOrbit(e.what());
  } catch (const DegenerateOrbit&) {
    return 0.0;
  }
  double err = 0.0;
  const double half_area = endpoint_singular_integral([](double) { return 1.0; }, g, dg,
                                                      tp.x_minus, tp.x_plus, true, &err);
  if (!std::isfinite(half_area) || err > 1e-7 * std::max(1.0, half_area))
    throw QuadratureFailure("action integral did not converge");
  // Along the motion the upper branch runs with ẋ₂ of sign −sign(E).
  return (E > 0.0 ? -1.0 : 1.0) * half_area / kPi;
}

}  // namespace

double action_A(const CoriolisProfile& profile, double xi1, double E, std::optional<double> x2_hint) {
  if (!(E != 0.0)) throw NoClosedOrbit("E = 0 level set is not a closed orbit");
  const int sign = E > 0.0 ? 1 : -1;
  const double hint = x2_hint ? *x2_hint : global_well_center(profile, xi1, sign);
  const double gh = libration_function(profile, xi1, E, hint);
  if (!(gh > -1e-12 * (xi1 * xi1 + 1.0))) {
    std::ostringstream os;
    os << "level E = " << E << " does not pass over x2 = " << hint;
    throw NoClosedOrbit(os.str());
  }
  return oriented_action(profile, xi1, E, hint);
}

double energy_from_action(const CoriolisProfile& profile, double xi1, double A, double center_lo,
                          double center_hi) {
  if (!(A != 0.0)) throw TableOutOfRange("A = 0 is the fixed point itself");
  // Oriented action is negative around maxima of E (E > 0) and positive
  // around minima.
  const int sign = A < 0.0 ? 1 : -1;
  const double xc = well_center(profile, xi1, center_lo, center_hi, sign);
  const double Ec = rossby_energy(profile, xi1, xc, 0.0);
  if (!(sign * Ec > 0.0)) throw TableOutOfRange("well has the wrong sign at this xi1");

  auto residual = [&](double E) {
    try {
      return oriented_action(profile, xi1, E, xc) - A;
    } catch (const NoClosedOrbit&) {
      throw TableOutOfRange("orbit family leaves the well before reaching the action value");
    }
  };
  // The action vanishes at the center energy Ec; walk E toward 0 until the
  // residual changes sign.
  const double r_center = -A;
  double E_far = 0.5 * Ec;
  double r_far = residual(E_far);
  for (int guard = 0; r_far * r_center > 0.0; ++guard) {
    if (guard > 60) throw TableOutOfRange("action value not attained in this well");
    E_far *= 0.5;
    r_far = residual(E_far);
  }
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  const bool far_is_lower = E_far < Ec;
  const double a = far_is_lower ? E_far : Ec, b = far_is_lower ? Ec : E_far;
  const double fa = far_is_lower ? r_far : r_center, fb = far_is_lower ? r_center : r_far;
  auto [lo, hi] = boost::math::tools::toms748_solve(residual, a, b, fa, fb, tol, iters);
  return 0.5 * (lo + hi);
}

ActionTable ActionTable::build(const CoriolisProfile& profile, double xi1, double A,
                               double center_lo, double center_hi, double h, double dA) {
  ActionTable t;
  t.xi1 = xi1;
  t.A = A;
  t.h = h;
  t.dA = dA;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if ((i != 1) && (j != 1)) continue;  // corners are not needed for the derivatives
      t.H[i][j] = energy_from_action(profile, xi1 + (i - 1) * h, A + (j - 1) * dA, center_lo,
                                     center_hi);
    }
  return t;
}

double drift_F_action(const CoriolisProfile& profile, const PhasePoint& pt) {
  require_admissible(profile, pt);
  const double E = rossby_energy(profile, pt.xi1, pt.x2, pt.xi2);
  TurningPoints tp;
  try {
    tp = turning_points(profile, pt.xi1, E, pt.x2);
  } catch (const NoTurningPoints& e) {
    throw NoClosedOrbit(e.what());
  }
  const double A0 = oriented_action(profile, pt.xi1, E, pt.x2);
  if (!(std::fabs(A0) > 1e-12)) throw TableOutOfRange("zero-amplitude orbit");
  const double h = 1e-3 * std::fabs(pt.xi1);
  const double dA = 1e-3 * std::fabs(A0);
  const ActionTable table = ActionTable::build(profile, pt.xi1, A0, tp.x_minus, tp.x_plus, h, dA);
  return kTwoPi * table.dH_dxi1() / table.dH_dA();
}

}  // namespace rossbytrap
