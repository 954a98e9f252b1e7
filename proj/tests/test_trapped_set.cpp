#include <cmath>

#include <gtest/gtest.h>

#include "rossbytrap/errors.hpp"
#include "rossbytrap/trapped_set.hpp"

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

}  // namespace

TEST(LambdaRoots, RootBetweenOppositeEndpointSigns) {
  const auto s = endpoint_signs(prof(), kPi, 0.2, 0.1, 10.0);
  EXPECT_EQ(s.small_xi1, 1);
  EXPECT_EQ(s.large_xi1, -1);
  const auto roots = find_lambda_roots(prof(), kPi, 0.2, 0.1, 10.0);
  ASSERT_EQ(roots.size(), 1u);
  const auto& r = roots[0];
  EXPECT_GT(r.xi1_root, r.bracket_lo);
  EXPECT_LT(r.xi1_root, r.bracket_hi);
  EXPECT_LE(r.F_residual, 1e-8);
  EXPECT_LE(r.F_time_residual, 1e-8);
  // oracle: independent F evaluations at the root and across the bracket
  EXPECT_LE(std::fabs(drift_F_space_signed(prof(), r.xi1_root, kPi, 0.2)), 1e-6);
  const double Flo = drift_F_time(prof(), {0.0, kPi, r.bracket_lo, 0.2}, long_orbits());
  const double Fhi = drift_F_time(prof(), {0.0, kPi, r.bracket_hi, 0.2}, long_orbits());
  EXPECT_LT(Flo * Fhi, 0.0);
}

TEST(LambdaRoots, SymmetricPairs) {
  const auto roots = find_lambda_roots(prof(), 0.5, -0.4, -20.0, 20.0);
  ASSERT_EQ(roots.size() % 2, 0u);
  const std::size_t n = roots.size();
  for (std::size_t k = 0; k < n / 2; ++k)
    EXPECT_NEAR(roots[k].xi1_root, -roots[n - 1 - k].xi1_root, 1e-9 * std::fabs(roots[k].xi1_root));
}

TEST(LambdaRoots, NoSignChangeNearZeroOfBprime) {
  // close to a zero of b′ the large-ξ₁ sign never turns over
  EXPECT_THROW(find_lambda_roots(prof(), kPi / 2 + 0.3, 0.2, 0.1, 30.0), NoSignChange);
  EXPECT_THROW(find_lambda_roots(prof(), kPi / 2, 0.2, 0.1, 30.0), Inadmissible);
}

TEST(LambdaCloud, ParallelMatchesSerialAndIsXi1Only) {
  LambdaGrid g;
  g.x2_lo = 2.4;
  g.x2_hi = 3.6;
  g.n_x2 = 4;
  g.xi2_lo = -0.6;
  g.xi2_hi = 0.6;
  g.n_xi2 = 3;
  g.xi1_lo = 0.2;
  g.xi1_hi = 20.0;
  LambdaOptions o;
  o.cross_check_time = false;
  const auto par = sample_lambda(prof(), g, o);
  const auto ser = sample_lambda_serial(prof(), g, o);
  ASSERT_EQ(par.nodes.size(), ser.nodes.size());
  for (std::size_t k = 0; k < par.nodes.size(); ++k) {
    ASSERT_EQ(par.nodes[k].roots.size(), ser.nodes[k].roots.size());
    for (std::size_t r = 0; r < par.nodes[k].roots.size(); ++r)
      EXPECT_EQ(par.nodes[k].roots[r].xi1_root, ser.nodes[k].roots[r].xi1_root);
  }
  EXPECT_EQ(par.summary.nodes_with_root, par.summary.nodes);
  EXPECT_DOUBLE_EQ(par.summary.coverage, 1.0);
  EXPECT_TRUE(par.summary.locally_graph);
  for (const auto& p : par.points()) EXPECT_LE(p.F_residual, 1e-8);
}

TEST(LambdaCloud, ContinuityUnderRefinement) {
  // roots along a short x₂ segment: the deviation of the midpoint root from
  // linear interpolation of its neighbours shrinks about fourfold per halving
  LambdaOptions o;
  o.cross_check_time = false;
  auto root = [&](double x2) { return find_lambda_roots(prof(), x2, 0.3, 0.2, 20.0, o).at(0).xi1_root; };
  const double x0 = 2.8;
  double prev = 0.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const double dev = std::fabs(root(x0) - 0.5 * (root(x0 - h) + root(x0 + h)));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / dev, 4.0, 0.8);
    }
    prev = dev;
  }
  EXPECT_LE(prev, 1e-2 * root(x0));
}

TEST(SmallXiScaling, SlopeMinusOneAgainstTimeOracle) {
  const std::vector<double> seq{0.4, 0.2, 0.1, 0.05};
  const double x2 = kPi / 2 + 0.3, xi2 = 0.2;
  const auto fit = smallxi_scaling(prof(), x2, xi2, seq);
  EXPECT_NEAR(fit.slope, -1.0, 0.1);
  EXPECT_TRUE(fit.no_root_below);
  EXPECT_GT(fit.min_abs_F_xi1, 1.0);
  // oracle: the same slope from time-integrated F
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double xi1 : seq) {
    const double lx = std::log(xi1);
    const double ly = std::log(std::fabs(drift_F_time(prof(), {0.0, x2, xi1, xi2}, long_orbits())));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = seq.size();
  const double slope_time = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  EXPECT_NEAR(fit.slope, slope_time, 1e-4);
}

TEST(SmallXiScaling, FitFailureOnSignChange) {
  EXPECT_THROW(smallxi_scaling(prof(), kPi, 0.2, {5.0, 1.0, 0.5}), FitFailure);
}

TEST(ExtremalArea, DerivativeChangesSignAcrossRoot) {
  const auto roots = find_lambda_roots(prof(), kPi, 0.2, 0.1, 10.0);
  const auto rep = extremal_area_check(prof(), roots.at(0));
  EXPECT_TRUE(rep.sign_change);
  EXPECT_TRUE(rep.critical);
  EXPECT_LT(rep.slope_relation_err, 0.05);
  EXPECT_FALSE(rep.extremum.empty());
  // away from the root |a′| = |F| is bounded away from zero
  const double E = rossby_energy(prof(), 3.0, kPi, 0.2);
  const double h = 1e-4;
  const double ap = kTwoPi * (action_A(prof(), 3.0 + h, E, kPi) - action_A(prof(), 3.0 - h, E, kPi)) / (2 * h);
  const double F = drift_F_time(prof(), {0.0, kPi, 3.0, 0.2}, long_orbits());
  EXPECT_GE(std::fabs(F), 0.1);
  EXPECT_NEAR(ap / -F, 1.0, 0.05);
}
