#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rossbytrap/errors.hpp"
#include "rossbytrap/rays.hpp"

using namespace rossbytrap;

namespace {

const CoriolisProfile& prof() {
  static const CoriolisProfile p = CoriolisProfile::shifted_sine();
  return p;
}

PeriodOptions long_orbits() {
  PeriodOptions o;
  o.t_max = 1e6;
  o.period_max = 1e6;
  return o;
}

double fd_E_xi1(const CoriolisProfile& p, const PhasePoint& pt, double h) {
  return (rossby_energy(p, pt.xi1 + h, pt.x2, pt.xi2) - rossby_energy(p, pt.xi1 - h, pt.x2, pt.xi2)) /
         (2 * h);
}

// Shoelace area of a sampled closed orbit in the (x₂, ξ₂) plane.
double shoelace(const Trajectory& tr) {
  double a = 0.0;
  const auto& s = tr.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k)
    a += s[k].point.x2 * s[k + 1].point.xi2 - s[k + 1].point.x2 * s[k].point.xi2;
  return 0.5 * a;
}

}  // namespace

TEST(RayRhs, Xi1IsConservedAndDx1MatchesDerivative) {
  const auto s = CoriolisProfile::sine();
  const PhasePoint pt{0.0, kPi / 4, 1.0, 0.0};
  const auto r = ray_rhs(s, pt);
  EXPECT_EQ(r.dxi1, 0.0);
  EXPECT_NEAR(r.dx1, -0.15713484026367722, 1e-12);
  EXPECT_NEAR(r.dx1, fd_E_xi1(s, pt, 1e-6), 1e-8);
  EXPECT_EQ(r.dx2, 0.0);  // E is even in ξ₂
}

TEST(RayRhs, MatchesFiniteDifferencesOnRandomPoints) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), uxi(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    PhasePoint pt{0.0, ux(rng), uxi(rng), uxi(rng)};
    if (std::fabs(pt.xi1) < 0.05) continue;
    const auto r = ray_rhs(prof(), pt);
    const double h = 1e-6;
    EXPECT_NEAR(r.dx1, fd_E_xi1(prof(), pt, h), 1e-8);
    EXPECT_NEAR(r.dx1, x1_velocity_closed_form(prof(), pt), 1e-12);
    const double dEdxi2 = (rossby_energy(prof(), pt.xi1, pt.x2, pt.xi2 + h) -
                           rossby_energy(prof(), pt.xi1, pt.x2, pt.xi2 - h)) / (2 * h);
    const double dEdx2 = (rossby_energy(prof(), pt.xi1, pt.x2 + h, pt.xi2) -
                          rossby_energy(prof(), pt.xi1, pt.x2 - h, pt.xi2)) / (2 * h);
    EXPECT_NEAR(r.dx2, dEdxi2, 1e-8);
    EXPECT_NEAR(r.dxi2, -dEdx2, 1e-8);
  }
  EXPECT_THROW(ray_rhs(prof(), {0.0, 1.0, 0.0, 0.1}), Inadmissible);
}

TEST(IntegrateRay, FixedPointStaysPut) {
  const double xi1 = 1.5;
  const double xc = well_center(prof(), xi1, kPi - 1.0, kPi + 1.0, -1);
  const PhasePoint pt{0.0, xc, xi1, 0.0};
  const auto tr = integrate_ray(prof(), pt, 50.0, 0.05);
  for (const auto& s : tr.samples) {
    EXPECT_NEAR(s.point.x2, xc, 1e-9);
    EXPECT_NEAR(s.point.xi2, 0.0, 1e-9);
  }
}

TEST(IntegrateRay, ConservationAndBackwardReturn) {
  const PhasePoint pt{0.3, kPi + 0.2, 1.4, 0.25};
  const auto fwd = integrate_ray(prof(), pt, 40.0, 0.02);
  EXPECT_LE(fwd.max_energy_drift, 1e-9);
  for (const auto& s : fwd.samples) EXPECT_EQ(s.point.xi1, pt.xi1);
  const auto back = integrate_ray(prof(), fwd.samples.back().point, -40.0, 0.02);
  const auto& end = back.samples.back().point;
  EXPECT_NEAR(end.x1, pt.x1, 1e-8);
  EXPECT_NEAR(end.x2, pt.x2, 1e-8);
  EXPECT_NEAR(end.xi2, pt.xi2, 1e-8);
}

TEST(IntegrateRay, ReflectionSymmetry) {
  // E is even in ξ₂, so (x₂, ξ₂, t) → (x₂, −ξ₂, −t) maps orbits to orbits.
  const PhasePoint pt{0.0, kPi - 0.3, 2.0, 0.4};
  const auto fwd = integrate_ray(prof(), pt, 15.0, 0.01);
  const PhasePoint mirrored{0.0, pt.x2, pt.xi1, -pt.xi2};
  const auto rev = integrate_ray(prof(), mirrored, -15.0, 0.01);
  EXPECT_NEAR(rev.samples.back().point.x2, fwd.samples.back().point.x2, 1e-9);
  EXPECT_NEAR(rev.samples.back().point.xi2, -fwd.samples.back().point.xi2, 1e-9);
}

TEST(IntegrateRay, FourthOrderConvergence) {
  const PhasePoint pt{0.0, kPi + 0.3, 1.2, 0.1};
  RayOptions loose;
  loose.tol_E = 1.0;  // no step halving: compare the fixed steps themselves
  const auto ref = integrate_ray(prof(), pt, 10.0, 0.005, loose).samples.back().point;
  const auto a = integrate_ray(prof(), pt, 10.0, 0.4, loose).samples.back().point;
  const auto b = integrate_ray(prof(), pt, 10.0, 0.2, loose).samples.back().point;
  const double ea = std::hypot(a.x2 - ref.x2, a.xi2 - ref.xi2);
  const double eb = std::hypot(b.x2 - ref.x2, b.xi2 - ref.xi2);
  EXPECT_NEAR(std::log2(ea / eb), 4.0, 0.5);
}

TEST(IntegrateRay, ToleranceExceededWhenStepCannotBeRefined) {
  RayOptions o;
  o.max_halvings = 0;
  o.tol_E = 1e-15;
  EXPECT_THROW(integrate_ray(prof(), {0.0, kPi + 0.4, 1.0, 0.5}, 100.0, 1.0, o), ToleranceExceeded);
}

TEST(IntegrateRay, AreaMatchesAction) {
  // ξ₁ = 2, ξ₂ = 0.3 on the well around x₂ = π (b′ < 0)
  const PhasePoint pt{0.0, kPi, 2.0, 0.3};
  const auto pd = find_period(prof(), pt, long_orbits());
  ASSERT_EQ(pd.classification, OrbitClass::Periodic);
  RayOptions o;
  const auto n = static_cast<int>(std::ceil(pd.period / 0.002));
  const auto tr = integrate_ray(prof(), pt, pd.period, pd.period / n, o);
  const double E = rossby_energy(prof(), pt.xi1, pt.x2, pt.xi2);
  const double A = action_A(prof(), pt.xi1, E, pt.x2);
  // ∮ξ₂dx₂ along the motion is minus the shoelace (counter-clockwise) area
  EXPECT_NEAR(-shoelace(tr) / kTwoPi, A, 1e-6);
}

TEST(FindPeriod, ReturnsToSectionPoint) {
  const PhasePoint pt{0.0, kPi + 0.5, 1.3, -0.2};
  const auto pd = find_period(prof(), pt, long_orbits());
  const auto n = static_cast<int>(std::ceil(pd.period / pd.dt));
  const auto end = integrate_ray(prof(), pt, pd.period, pd.period / n).samples.back().point;
  EXPECT_LE(std::hypot(std::remainder(end.x2 - pt.x2, kTwoPi), end.xi2 - pt.xi2), 1e-7);
  EXPECT_FALSE(pd.circulating);
}

TEST(FindPeriod, HarmonicLimit) {
  const double xi1 = 1.5;
  const double xc = well_center(prof(), xi1, kPi - 1.0, kPi + 1.0, -1);
  // oracle: 2×2 linearization of (ẋ₂, ξ̇₂) by finite differences of ray_rhs
  const double h = 1e-5;
  auto rhs = [&](double x, double p) { return ray_rhs_unchecked(prof(), {0.0, x, xi1, p}); };
  const double a11 = (rhs(xc + h, 0).dx2 - rhs(xc - h, 0).dx2) / (2 * h);
  const double a12 = (rhs(xc, h).dx2 - rhs(xc, -h).dx2) / (2 * h);
  const double a21 = (rhs(xc + h, 0).dxi2 - rhs(xc - h, 0).dxi2) / (2 * h);
  const double a22 = (rhs(xc, h).dxi2 - rhs(xc, -h).dxi2) / (2 * h);
  const double tr = a11 + a22, det = a11 * a22 - a12 * a21;
  ASSERT_LT(tr * tr - 4 * det, 0.0);  // elliptic
  const double omega = std::sqrt(det - tr * tr / 4);
  const auto pd = find_period(prof(), {0.0, xc + 1e-3, xi1, 0.0}, long_orbits());
  EXPECT_NEAR(pd.period / (kTwoPi / omega), 1.0, 0.01);
}

TEST(FindPeriod, StableUnderStepRefinement) {
  const PhasePoint pt{0.0, kPi + 0.4, 1.0, 0.3};
  PeriodOptions o = long_orbits();
  const auto a = find_period(prof(), pt, o);
  o.dt = 0.5 * a.dt;
  const auto b = find_period(prof(), pt, o);
  EXPECT_NEAR(a.period, b.period, 1e-8);
}

TEST(FindPeriod, FixedPointIsNearDegenerate) {
  const double xi1 = 1.5;
  const double xc = well_center(prof(), xi1, kPi - 1.0, kPi + 1.0, -1);
  const auto pd = find_period(prof(), {0.0, xc, xi1, 0.0});
  EXPECT_EQ(pd.classification, OrbitClass::NearDegenerate);
  EXPECT_THROW(drift_F_time(prof(), {0.0, xc, xi1, 0.0}, pd), DegenerateOrbit);
}

TEST(FindPeriod, LongPeriodFlaggedWithDefaults) {
  // period ≈ 527 here; a tighter cutoff classifies it near-degenerate
  PeriodOptions o;
  o.period_max = 100.0;
  const auto pd = find_period(prof(), {0.0, kPi / 2 + 0.3, 1.0, 0.2}, o);
  EXPECT_EQ(pd.classification, OrbitClass::NearDegenerate);
}

TEST(DriftF, ObservedEndpointSigns) {
  // F is the period integral of ∂E/∂ξ₁. With that definition b′F is positive
  // for small ξ₁ and, where |b′(x₂)| is large enough, negative for large ξ₁.
  for (double x2 : {0.5, kPi, kPi + 0.6}) {
    const double bp = prof().db(x2);
    const double Fs = drift_F_time(prof(), {0.0, x2, 0.1, 0.2}, long_orbits());
    const double Fl = drift_F_time(prof(), {0.0, x2, 10.0, 0.2}, long_orbits());
    EXPECT_GT(bp * Fs, 0.0) << x2;
    EXPECT_LT(bp * Fl, 0.0) << x2;
  }
}

TEST(DriftF, InvariantAlongTheFlow) {
  const PhasePoint pt{0.0, kPi + 0.2, 1.7, 0.3};
  const double F0 = drift_F_time(prof(), pt, long_orbits());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(1.0, 60.0);
  for (int i = 0; i < 4; ++i) {
    const auto moved = integrate_ray(prof(), pt, ut(rng), 0.01).samples.back().point;
    EXPECT_NEAR(drift_F_time(prof(), moved, long_orbits()), F0, 1e-7 * std::max(1.0, std::fabs(F0)));
  }
}

TEST(DriftF, SpaceAgreesWithTime) {
  for (auto [x2, xi1, xi2] : {std::tuple{kPi / 2 + 0.3, 1.0, 0.2}, std::tuple{4.412, 3.0, 0.2},
                              std::tuple{0.5, 3.0, -0.7}, std::tuple{kPi, 1.0, 0.2}}) {
    const double Ft = drift_F_time(prof(), {0.0, x2, xi1, xi2}, long_orbits());
    const double Fs = drift_F_space_signed(prof(), xi1, x2, xi2);
    EXPECT_NEAR(Fs / Ft, 1.0, 1e-5);
    EXPECT_DOUBLE_EQ(drift_F_space(prof(), xi1, x2, xi2), std::fabs(Fs));
  }
}

TEST(DriftF, EvenInXi1) {
  EXPECT_NEAR(drift_F_space_signed(prof(), 0.7, 2.5, 0.4), drift_F_space_signed(prof(), -0.7, 2.5, 0.4),
              1e-10);
}

TEST(TurningPoints, EndpointsAreZerosOfG) {
  const double xi1 = 1.2, x2 = kPi + 0.3, xi2 = 0.4;
  const double E = rossby_energy(prof(), xi1, x2, xi2);
  const auto tp = turning_points(prof(), xi1, E, x2);
  EXPECT_LT(tp.x_minus, x2);
  EXPECT_GT(tp.x_plus, x2);
  EXPECT_GT(libration_function(prof(), xi1, E, x2), 0.0);
  EXPECT_NEAR(libration_function(prof(), xi1, E, tp.x_minus), 0.0, 1e-9);
  EXPECT_NEAR(libration_function(prof(), xi1, E, tp.x_plus), 0.0, 1e-9);
}

TEST(TurningPoints, EveryNonzeroLevelLibrates) {
  // b′ changes sign on the circle, so b′ξ₁/E < 0 somewhere and g < 0 there:
  // for E ≠ 0 the level set never wraps around x₂.
  const auto p = CoriolisProfile::shifted_cosine();
  for (double xi2 : {0.0, 1.0, 3.0, 10.0}) {
    const double E = rossby_energy(p, 1.0, 1.0, xi2);
    EXPECT_NO_THROW(turning_points(p, 1.0, E, 1.0));
    const auto pd = find_period(p, {0.0, 1.0, 1.0, xi2}, long_orbits());
    EXPECT_FALSE(pd.circulating);
  }
  EXPECT_THROW(turning_points(p, 1.0, 0.0, 1.0), NoTurningPoints);
}

TEST(Action, MonotoneAndRoundTrip) {
  const double xi1 = 1.5;
  const double xc = well_center(prof(), xi1, kPi - 1.0, kPi + 1.0, -1);
  const double Ec = rossby_energy(prof(), xi1, xc, 0.0);
  double prev = 0.0;
  for (double f : {0.98, 0.9, 0.8, 0.7, 0.6}) {
    const double E = f * Ec;
    const double A = action_A(prof(), xi1, E, xc);
    EXPECT_GT(A, prev);  // Ec < 0, so E increases and A grows along the list
    prev = A;
    EXPECT_NEAR(energy_from_action(prof(), xi1, A, xc - 0.5, xc + 0.5), E, 1e-7 * std::fabs(Ec));
  }
  // zero-amplitude limit: A → 0 with a finite slope dA/dE
  const double d1 = action_A(prof(), xi1, Ec * (1 - 1e-4), xc) / (1e-4 * std::fabs(Ec));
  const double d2 = action_A(prof(), xi1, Ec * (1 - 2e-4), xc) / (2e-4 * std::fabs(Ec));
  EXPECT_NEAR(d1 / d2, 1.0, 1e-3);
  EXPECT_THROW(action_A(prof(), xi1, 0.0), NoClosedOrbit);
}

TEST(Action, DriftFromActionAgreesWithTime) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), up(-0.8, 0.8), uq(0.6, 3.0);
  int checked = 0;
  while (checked < 8) {
    const PhasePoint pt{0.0, ux(rng), uq(rng), up(rng)};
    if (std::fabs(prof().db(pt.x2)) < 0.3) continue;
    double Ft;
    try {
      Ft = drift_F_time(prof(), pt, long_orbits());
      (void)turning_points(prof(), pt.xi1, rossby_energy(prof(), pt.xi1, pt.x2, pt.xi2), pt.x2);
    } catch (const ComputeError&) {
      continue;
    }
    if (std::fabs(Ft) < 0.05) continue;
    const double Fa = drift_F_action(prof(), pt);
    EXPECT_NEAR(Fa / Ft, 1.0, 1e-3) << pt.x2 << " " << pt.xi1 << " " << pt.xi2;
    const double E = rossby_energy(prof(), pt.xi1, pt.x2, pt.xi2);
    const auto tp = turning_points(prof(), pt.xi1, E, pt.x2);
    const double A0 = action_A(prof(), pt.xi1, E, pt.x2);
    const auto t = ActionTable::build(prof(), pt.xi1, A0, tp.x_minus, tp.x_plus, 1e-3, 1e-3 * std::fabs(A0));
    EXPECT_GT(t.dH_dA(), 0.0);
    ++checked;
  }
}
