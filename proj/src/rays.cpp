#include "rossbytrap/rays.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "rossbytrap/errors.hpp"

namespace rossbytrap {

RayRhs ray_rhs_unchecked(const CoriolisProfile& profile, const PhasePoint& pt) {
  const ProfileValue v = profile.eval(pt.x2);
  const double xi1 = pt.xi1, xi2 = pt.xi2;
  const double K = xi1 * xi1 + xi2 * xi2 + v.b * v.b;
  const double K2 = K * K;
  RayRhs r;
  r.dx1 = v.db * (K - 2.0 * xi1 * xi1) / K2;
  r.dx2 = -2.0 * xi2 * v.db * xi1 / K2;
  r.dxi1 = 0.0;
  r.dxi2 = -(v.d2b * xi1 / K - 2.0 * v.b * v.db * v.db * xi1 / K2);
  return r;
}

RayRhs ray_rhs(const CoriolisProfile& profile, const PhasePoint& pt,
               const AdmissibilityMargins& margins) {
  require_admissible(profile, pt, margins);
  return ray_rhs_unchecked(profile, pt);
}

double x1_velocity_closed_form(const CoriolisProfile& profile, const PhasePoint& pt) {
  const ProfileValue v = profile.eval(pt.x2);
  const double s = pt.xi2 * pt.xi2 + pt.xi1 * pt.xi1 + v.b * v.b;
  return v.db * (pt.xi2 * pt.xi2 - pt.xi1 * pt.xi1 + v.b * v.b) / (s * s);
}

PhasePoint rk4_step(const CoriolisProfile& profile, const PhasePoint& p, double h) {
  auto shifted = [&](const RayRhs& k, double a) {
    return PhasePoint{p.x1 + a * k.dx1, p.x2 + a * k.dx2, p.xi1, p.xi2 + a * k.dxi2};
  };
  const RayRhs k1 = ray_rhs_unchecked(profile, p);
  const RayRhs k2 = ray_rhs_unchecked(profile, shifted(k1, 0.5 * h));
  const RayRhs k3 = ray_rhs_unchecked(profile, shifted(k2, 0.5 * h));
  const RayRhs k4 = ray_rhs_unchecked(profile, shifted(k3, h));
  const double w = h / 6.0;
  return PhasePoint{p.x1 + w * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1),
                    p.x2 + w * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2), p.xi1,
                    p.xi2 + w * (k1.dxi2 + 2.0 * k2.dxi2 + 2.0 * k3.dxi2 + k4.dxi2)};
}

Trajectory integrate_ray(const CoriolisProfile& profile, const PhasePoint& pt0, double t_end,
                         double dt, const RayOptions& opts) {
  require_admissible(profile, pt0);
  if (!(dt > 0.0) || !std::isfinite(t_end)) throw ComputeError("integrate_ray: bad time step");
  const int stride = std::max(1, opts.sample_stride);
  const double E0 = rossby_energy(profile, pt0.xi1, pt0.x2, pt0.xi2);

  double drift = 0.0;
  for (int attempt = 0; attempt <= opts.max_halvings; ++attempt) {
    const double h_target = dt / std::ldexp(1.0, attempt);
    const auto n = static_cast<long>(std::ceil(std::fabs(t_end) / h_target - 1e-9));
    Trajectory traj;
    traj.dt = (n == 0) ? h_target : std::fabs(t_end) / static_cast<double>(n);
    const double h = (t_end < 0.0) ? -traj.dt : traj.dt;
    traj.samples.reserve(static_cast<std::size_t>(n / stride + 2));
    traj.samples.push_back({pt0, 0.0, E0});
    PhasePoint cur = pt0;
    drift = 0.0;
    for (long i = 1; i <= n; ++i) {
      cur = rk4_step(profile, cur, h);
      const double E = rossby_energy(profile, cur.xi1, cur.x2, cur.xi2);
      drift = std::max(drift, std::fabs(E - E0));
      if (i % stride == 0 || i == n) traj.samples.push_back({cur, h * static_cast<double>(i), E});
    }
    if (drift <= opts.tol_E) {
      traj.max_energy_drift = drift;
      traj.max_xi1_drift = 0.0;
      return traj;
    }
  }
  std::ostringstream os;
  os << "energy drift " << drift << " exceeds tol " << opts.tol_E << " after "
     << opts.max_halvings << " halvings";
  throw ToleranceExceeded(os.str());
}

namespace {

// Jacobian of the planar field (ẋ₂, ξ̇₂) with respect to (x₂, ξ₂).
std::array<double, 4> planar_jacobian(const CoriolisProfile& profile, double xi1, double x2,
                                      double xi2) {
  const double h = 1e-6;
  const RayRhs ax = ray_rhs_unchecked(profile, {0.0, x2 + h, xi1, xi2});
  const RayRhs bx = ray_rhs_unchecked(profile, {0.0, x2 - h, xi1, xi2});
  const RayRhs ap = ray_rhs_unchecked(profile, {0.0, x2, xi1, xi2 + h});
  const RayRhs bp = ray_rhs_unchecked(profile, {0.0, x2, xi1, xi2 - h});
  return {(ax.dx2 - bx.dx2) / (2 * h), (ap.dx2 - bp.dx2) / (2 * h), (ax.dxi2 - bx.dxi2) / (2 * h),
          (ap.dxi2 - bp.dxi2) / (2 * h)};
}

}  // namespace

double linearized_frequency(const CoriolisProfile& profile, double xi1, double x2, double xi2) {
  const auto J = planar_jacobian(profile, xi1, x2, xi2);
  const double det = J[0] * J[3] - J[1] * J[2];
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

double default_ray_step(const CoriolisProfile& profile, const PhasePoint& pt) {
  const auto J = planar_jacobian(profile, pt.xi1, pt.x2, pt.xi2);
  double rate = 0.0;
  for (double j : J) rate = std::max(rate, std::fabs(j));
  rate = std::max(rate, linearized_frequency(profile, pt.xi1, pt.x2, pt.xi2));
  if (!(rate > 0.0)) return 0.05;
  return std::min(0.05, kTwoPi / (rate * 2000.0));
}

PeriodData find_period(const CoriolisProfile& profile, const PhasePoint& pt0,
                       const PeriodOptions& opts) {
  require_admissible(profile, pt0);
  PeriodData out;
  out.section_point = pt0;
  const RayRhs f0 = ray_rhs_unchecked(profile, pt0);
  double dt = opts.dt > 0.0 ? opts.dt : default_ray_step(profile, pt0);
  out.dt = dt;

  if (std::fabs(f0.dx2) < opts.fixed_point_tol && std::fabs(f0.dxi2) < opts.fixed_point_tol) {
    const double w = linearized_frequency(profile, pt0.xi1, pt0.x2, pt0.xi2);
    out.period = w > 0.0 ? kTwoPi / w : std::numeric_limits<double>::infinity();
    out.classification = OrbitClass::NearDegenerate;
    return out;
  }

  // Section on whichever planar coordinate moves fastest at the start.
  const bool on_x = std::fabs(f0.dx2) >= std::fabs(f0.dxi2);
  const double dir = (on_x ? f0.dx2 : f0.dxi2) > 0.0 ? 1.0 : -1.0;
  auto section = [&](const PhasePoint& p) {
    return on_x ? std::remainder(p.x2 - pt0.x2, kTwoPi) : p.xi2 - pt0.xi2;
  };
  const double E0 = rossby_energy(profile, pt0.xi1, pt0.x2, pt0.xi2);
  constexpr double kTolE = 1e-9;

  for (int attempt = 0; attempt < 8; ++attempt, dt *= 0.5) {
    PhasePoint cur = pt0;
    double t = 0.0;
    double s_prev = 0.0;
    double drift = 0.0;
    bool found = false;
    while (t < opts.t_max) {
      const PhasePoint next = rk4_step(profile, cur, dt);
      const double s_next = section(next);
      drift = std::max(drift, std::fabs(rossby_energy(profile, next.xi1, next.x2, next.xi2) - E0));
      if (dir * s_prev < 0.0 && dir * s_next >= 0.0 && std::fabs(s_next - s_prev) < kPi) {
        double lo = 0.0, hi = dt;
        for (int it = 0; it < 200 && hi - lo > opts.time_tol * 1e-2; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          if (dir * section(rk4_step(profile, cur, mid)) < 0.0)
            lo = mid;
          else
            hi = mid;
        }
        const double h = 0.5 * (lo + hi);
        const PhasePoint ret = rk4_step(profile, cur, h);
        out.period = t + h;
        out.circulating = std::fabs(ret.x2 - pt0.x2) > kPi;
        found = true;
        break;
      }
      cur = next;
      s_prev = s_next;
      t += dt;
    }
    if (!found) {
      std::ostringstream os;
      os << "no return to the section within t_max = " << opts.t_max;
      throw NoReturn(os.str());
    }
    if (drift <= kTolE) {
      out.dt = dt;
      out.classification =
          out.period > opts.period_max ? OrbitClass::NearDegenerate : OrbitClass::Periodic;
      return out;
    }
  }
  throw ToleranceExceeded("find_period: energy drift not controlled by step halving");
}

double drift_F_time(const CoriolisProfile& profile, const PhasePoint& pt0, const PeriodData& pd) {
  if (pd.classification != OrbitClass::Periodic)
    throw DegenerateOrbit("orbit is near-degenerate; drift functional not computed");
  const double h_target = 0.5 * pd.dt;
  const auto n = static_cast<long>(std::ceil(pd.period / h_target));
  const double h = pd.period / static_cast<double>(n);
  PhasePoint cur = pt0;
  for (long i = 0; i < n; ++i) cur = rk4_step(profile, cur, h);
  return cur.x1 - pt0.x1;
}

double drift_F_time(const CoriolisProfile& profile, const PhasePoint& pt0,
                    const PeriodOptions& opts) {
  return drift_F_time(profile, pt0, find_period(profile, pt0, opts));
}

}  // namespace rossbytrap
