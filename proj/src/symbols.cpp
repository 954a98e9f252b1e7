#include "rossbytrap/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rossbytrap/errors.hpp"

namespace rossbytrap {

namespace {

struct Scalars {
  ProfileValue bv;
  double K;      // ξ₁² + ξ₂² + b²
  double perp;   // ξ₂² + b²
};

Scalars scalars(const CoriolisProfile& profile, const PhasePoint& pt) {
  Scalars s;
  s.bv = profile.eval(pt.x2);
  s.perp = pt.xi2 * pt.xi2 + s.bv.b * s.bv.b;
  s.K = pt.xi1 * pt.xi1 + s.perp;
  return s;
}

double newton_polish(double tau, double K, double c) {
  const double f = tau * tau * tau - K * tau + c;
  const double df = 3.0 * tau * tau - K;
  if (df == 0.0) return tau;
  return tau - f / df;
}

}  // namespace

bool admissible(const CoriolisProfile& profile, const PhasePoint& pt,
                const AdmissibilityMargins& margins) {
  if (!(std::fabs(pt.xi1) >= margins.xi1)) return false;
  const double b = profile.b(pt.x2);
  return pt.xi2 * pt.xi2 + b * b >= margins.b * margins.b;
}

void require_admissible(const CoriolisProfile& profile, const PhasePoint& pt,
                        const AdmissibilityMargins& margins) {
  if (!std::isfinite(pt.x1) || !std::isfinite(pt.x2) || !std::isfinite(pt.xi1) ||
      !std::isfinite(pt.xi2))
    throw Inadmissible("non-finite phase point");
  if (!(std::fabs(pt.xi1) >= margins.xi1)) {
    std::ostringstream os;
    os << "|xi1| = " << std::fabs(pt.xi1) << " below margin " << margins.xi1;
    throw Inadmissible(os.str());
  }
  const double b = profile.b(pt.x2);
  if (pt.xi2 * pt.xi2 + b * b < margins.b * margins.b) {
    std::ostringstream os;
    os << "xi2^2 + b^2 = " << pt.xi2 * pt.xi2 + b * b << " below margin^2 at x2 = " << pt.x2;
    throw Inadmissible(os.str());
  }
}

double dispersion_residual(const CoriolisProfile& profile, const PhasePoint& pt, double epsilon,
                           double tau) {
  const Scalars s = scalars(profile, pt);
  const double c = epsilon * s.bv.db * pt.xi1;
  return tau * tau * tau - s.K * tau + c;
}

DispersionRoots dispersion_roots(const CoriolisProfile& profile, const PhasePoint& pt,
                                 double epsilon, const AdmissibilityMargins& margins) {
  require_admissible(profile, pt, margins);
  if (!(epsilon >= 0.0)) throw Inadmissible("epsilon must be non-negative");
  const Scalars s = scalars(profile, pt);
  const double K = s.K;
  const double c = epsilon * s.bv.db * pt.xi1;

  DispersionRoots r;
  r.epsilon = epsilon;
  if (c == 0.0) {
    // The cubic factors as τ(τ² − K).
    r.tau_plus = std::sqrt(K);
    r.tau_minus = -r.tau_plus;
    r.tau_zero = 0.0;
  } else {
    const double disc = 4.0 * K * K * K - 27.0 * c * c;
    if (!(disc > 0.0)) {
      std::ostringstream os;
      os << "cubic discriminant " << disc << " <= 0 (epsilon = " << epsilon << ")";
      throw DegenerateRoots(os.str());
    }
    // Trigonometric form for t³ + p t + q with p = −K, q = c.
    const double amp = 2.0 * std::sqrt(K / 3.0);
    const double arg = std::clamp(-1.5 * c / K * std::sqrt(3.0 / K), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    std::array<double, 3> t{};
    for (int k = 0; k < 3; ++k) {
      t[k] = newton_polish(amp * std::cos(theta - kTwoPi * k / 3.0), K, c);
    }
    std::sort(t.begin(), t.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    r.tau_zero = t[0];
    r.tau_plus = std::max(t[1], t[2]);
    r.tau_minus = std::min(t[1], t[2]);
    if (!(r.tau_plus > 0.0 && r.tau_minus < 0.0)) throw DegenerateRoots("root labelling failed");
  }
  r.residuals = {r.tau_minus * r.tau_minus * r.tau_minus - K * r.tau_minus + c,
                 r.tau_zero * r.tau_zero * r.tau_zero - K * r.tau_zero + c,
                 r.tau_plus * r.tau_plus * r.tau_plus - K * r.tau_plus + c};
  return r;
}

ModeMatrix mode_matrix(const CoriolisProfile& profile, const PhasePoint& pt,
                       const AdmissibilityMargins& margins) {
  require_admissible(profile, pt, margins);
  const Scalars s = scalars(profile, pt);
  const double b = s.bv.b;
  const double xi1 = pt.xi1, xi2 = pt.xi2;
  const double root = std::sqrt(s.K);
  const cdouble I(0.0, 1.0);

  ModeMatrix m;
  // τ = −√K, 0, +√K substituted in the reconstruction column
  // ((−ξ₂τ + iξ₁b), (ξ₁ξ₂ − ibτ), τ² − ξ₁²) / (τ² − ξ₁²).
  m.q(0, 0) = (xi2 * root + I * xi1 * b) / s.perp;
  m.q(1, 0) = (xi1 * xi2 + I * b * root) / s.perp;
  m.q(2, 0) = 1.0;
  m.q(0, 1) = -I * b / xi1;
  m.q(1, 1) = -xi2 / xi1;
  m.q(2, 1) = 1.0;
  m.q(0, 2) = (-xi2 * root + I * xi1 * b) / s.perp;
  m.q(1, 2) = (xi1 * xi2 - I * b * root) / s.perp;
  m.q(2, 2) = 1.0;

  m.p = m.q.inverse();
  m.jacobian = std::abs(m.q.determinant());
  return m;
}

double jacobian_closed_form(const CoriolisProfile& profile, const PhasePoint& pt) {
  const Scalars s = scalars(profile, pt);
  return 2.0 * std::pow(s.K, 1.5) / (s.perp * std::fabs(pt.xi1));
}

std::array<cdouble, 3> rossby_projector_row(const CoriolisProfile& profile, const PhasePoint& pt) {
  const Scalars s = scalars(profile, pt);
  const cdouble I(0.0, 1.0);
  return {I * s.bv.b * pt.xi1 / s.K, cdouble(-pt.xi1 * pt.xi2 / s.K, 0.0),
          cdouble(pt.xi1 * pt.xi1 / s.K, 0.0)};
}

double rossby_energy(const CoriolisProfile& profile, double xi1, double x2, double xi2) {
  const ProfileValue v = profile.eval(x2);
  return v.db * xi1 / (xi2 * xi2 + xi1 * xi1 + v.b * v.b);
}

double rossby_symbol_E(const CoriolisProfile& profile, const PhasePoint& pt,
                       const AdmissibilityMargins& margins) {
  require_admissible(profile, pt, margins);
  return rossby_energy(profile, pt.xi1, pt.x2, pt.xi2);
}

}  // namespace rossbytrap
