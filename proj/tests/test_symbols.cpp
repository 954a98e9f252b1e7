#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rossbytrap/errors.hpp"
#include "rossbytrap/profile.hpp"
#include "rossbytrap/symbols.hpp"

using namespace rossbytrap;

namespace {

// Root of τ³ − Kτ + c in [lo, hi] by plain bisection.
double bisect_cubic(double K, double c, double lo, double hi) {
  auto f = [&](double t) { return t * t * t - K * t + c; };
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Matrix (7) assembled from the generic column formula at the ε = 0 roots,
// with the root values taken from the factored cubic rather than the library.
Matrix3c assemble_q(double b, double xi1, double xi2) {
  const double K = xi1 * xi1 + xi2 * xi2 + b * b;
  const double taus[3] = {-std::sqrt(K), 0.0, std::sqrt(K)};
  const cdouble I(0.0, 1.0);
  Matrix3c q;
  for (int j = 0; j < 3; ++j) {
    const double t = taus[j];
    const double d = t * t - xi1 * xi1;
    q(0, j) = (-xi2 * t + I * xi1 * b) / d;
    q(1, j) = (xi1 * xi2 - I * b * t) / d;
    q(2, j) = 1.0;
  }
  return q;
}

cdouble det3(const Matrix3c& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

}  // namespace

TEST(Profile, ElementaryValues) {
  const auto s = CoriolisProfile::sine();
  auto v = s.eval(kPi / 2);
  EXPECT_NEAR(v.b, 1.0, 1e-15);
  EXPECT_NEAR(v.db, 0.0, 1e-15);
  EXPECT_NEAR(v.d2b, -1.0, 1e-15);
  v = s.eval(0.0);
  EXPECT_NEAR(v.b, 0.0, 1e-15);
  EXPECT_NEAR(v.db, 1.0, 1e-15);
  EXPECT_NEAR(v.d2b, 0.0, 1e-15);
  v = CoriolisProfile::shifted_sine().eval(kPi);
  EXPECT_NEAR(v.b, 2.0, 1e-15);
  EXPECT_NEAR(v.db, -1.0, 1e-15);
  EXPECT_NEAR(v.d2b, 0.0, 1e-15);
}

TEST(Profile, PeriodicAndDerivativesConsistent) {
  const CoriolisProfile p("mix", 0.3, {0.5, 0.0, 0.1}, {0.2, -0.4});
  for (double x : {0.1, 1.3, 2.9, 4.4, 6.0}) {
    EXPECT_NEAR(p.b(x), p.b(x + kTwoPi), 1e-13);
    EXPECT_NEAR(p.b(x), p.b(x - 3 * kTwoPi), 1e-12);
    // centered differences converge at second order
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
      const double err = std::fabs((p.b(x + h) - p.b(x - h)) / (2 * h) - p.db(x));
      if (prev > 0.0) {
        EXPECT_NEAR(prev / err, 4.0, 0.1);
      }
      prev = err;
    }
    const double h = 1e-4;
    EXPECT_NEAR((p.db(x + h) - p.db(x - h)) / (2 * h), p.eval(x).d2b, 1e-7);
    EXPECT_NEAR((p.eval(x + h).d2b - p.eval(x - h).d2b) / (2 * h), p.d3b(x), 1e-7);
  }
}

TEST(Profile, Zeros) {
  const auto s = CoriolisProfile::sine();
  ASSERT_EQ(s.zeros_of_b().size(), 2u);
  EXPECT_NEAR(s.zeros_of_b()[0], 0.0, 1e-10);
  EXPECT_NEAR(s.zeros_of_b()[1], kPi, 1e-10);
  ASSERT_EQ(s.zeros_of_bprime().size(), 2u);
  EXPECT_NEAR(s.zeros_of_bprime()[0], kPi / 2, 1e-10);
  EXPECT_NEAR(s.zeros_of_bprime()[1], 3 * kPi / 2, 1e-10);
  EXPECT_TRUE(CoriolisProfile::shifted_sine().zeros_of_b().empty());
  const auto c = CoriolisProfile::shifted_cosine();
  ASSERT_EQ(c.zeros_of_bprime().size(), 2u);
  for (double z : c.zeros_of_bprime()) EXPECT_NEAR(c.db(z), 0.0, 1e-10);
}

TEST(Profile, Builtins) {
  EXPECT_EQ(CoriolisProfile::builtin("2+sin").name(), "2+sin");
  EXPECT_THROW(CoriolisProfile::builtin("nope"), ConfigError);
}

TEST(Admissibility, Margins) {
  const auto s = CoriolisProfile::sine();
  EXPECT_TRUE(admissible(s, {0.0, 1.0, 1.0, 0.0}));
  EXPECT_FALSE(admissible(s, {0.0, 1.0, 0.0, 0.5}));
  EXPECT_FALSE(admissible(s, {0.0, 0.0, 1.0, 0.0}));  // b = 0 and ξ₂ = 0
  EXPECT_THROW(mode_matrix(s, {0.0, 0.0, 1.0, 0.0}), Inadmissible);
  EXPECT_THROW(mode_matrix(s, {0.0, 1.0, 0.0, 1.0}), Inadmissible);
}

TEST(DispersionRoots, EpsilonZeroFactors) {
  const auto s = CoriolisProfile::sine();
  const PhasePoint pt{0.0, 0.7, 1.3, -0.4};
  const auto r = dispersion_roots(s, pt, 0.0);
  const double K = 1.3 * 1.3 + 0.16 + std::sin(0.7) * std::sin(0.7);
  EXPECT_DOUBLE_EQ(r.tau_plus, std::sqrt(K));
  EXPECT_DOUBLE_EQ(r.tau_minus, -std::sqrt(K));
  EXPECT_EQ(r.tau_zero, 0.0);
}

TEST(DispersionRoots, BprimeZeroGivesExactZeroRoot) {
  const auto s = CoriolisProfile::sine();
  for (double eps : {1e-3, 0.1, 0.3}) {
    // b′(π/2) is zero up to the roundoff of cos(π/2)
    const auto r = dispersion_roots(s, {0.0, kPi / 2, 1.0, 1.0}, eps);
    EXPECT_LE(std::fabs(r.tau_zero), 1e-16 * eps);
  }
}

TEST(DispersionRoots, SlowRootLimitByBisectionAndRichardson) {
  const auto s = CoriolisProfile::sine();
  const PhasePoint pt{0.0, kPi / 4, 1.0, 0.0};
  const double K = 1.5, bp = std::sqrt(0.5);
  double q[3];
  const double eps[3] = {1e-2, 1e-3, 1e-4};
  for (int i = 0; i < 3; ++i) {
    const double c = eps[i] * bp;
    const double t_oracle = bisect_cubic(K, c, -0.5, 0.5);
    const auto r = dispersion_roots(s, pt, eps[i]);
    EXPECT_NEAR(r.tau_zero, t_oracle, 1e-15);
    q[i] = t_oracle / eps[i];
  }
  // error is O(ε²); Richardson on the last two levels
  const double extrap = (100.0 * q[2] - q[1]) / 99.0;
  EXPECT_NEAR(extrap, std::sqrt(2.0) / 3.0, 1e-9);
  EXPECT_NEAR(rossby_symbol_E(s, pt), 0.4714045207910317, 1e-13);
}

TEST(DispersionRoots, ResidualsAndOrdering) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), uxi(-3.0, 3.0);
  const auto p = CoriolisProfile::shifted_cosine();
  for (int i = 0; i < 2000; ++i) {
    PhasePoint pt{0.0, ux(rng), uxi(rng), uxi(rng)};
    if (!admissible(p, pt)) continue;
    for (double eps : {0.0, 1e-3, 1e-2}) {
      const auto r = dispersion_roots(p, pt, eps);
      EXPECT_LT(r.tau_minus, r.tau_zero);
      EXPECT_LT(r.tau_zero, r.tau_plus);
      const double taus[3] = {r.tau_minus, r.tau_zero, r.tau_plus};
      for (int k = 0; k < 3; ++k) {
        const double t = taus[k];
        EXPECT_LE(std::fabs(dispersion_residual(p, pt, eps, t)),
                  1e-12 * std::max(1.0, std::fabs(t * t * t)));
        EXPECT_DOUBLE_EQ(r.residuals[k], dispersion_residual(p, pt, eps, t));
      }
    }
  }
}

TEST(DispersionRoots, DegenerateDiscriminant) {
  // K tiny against ε b′ξ₁ forces a single real root.
  const CoriolisProfile p("steep", 0.0, {}, {0.001, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 50.0});
  const PhasePoint pt{0.0, 0.0, 0.01, 0.01};
  EXPECT_THROW(dispersion_roots(p, pt, 1.0), DegenerateRoots);
}

TEST(DispersionRoots, SlowRootAsymptoticSlopeTwo) {
  const auto p = CoriolisProfile::shifted_sine();
  const PhasePoint pt{0.0, 0.4, 1.2, 0.3};
  const double E = rossby_symbol_E(p, pt);
  const double eps[3] = {1e-2, 5e-3, 2.5e-3};
  double err[3];
  for (int i = 0; i < 3; ++i) err[i] = std::fabs(dispersion_roots(p, pt, eps[i]).tau_zero / eps[i] - E);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::log(err[i] / err[i + 1]) / std::log(2.0), 2.0, 0.2);
}

TEST(ModeMatrix, JacobianExampleAgainstAssembledDeterminant) {
  const auto s = CoriolisProfile::sine();
  const PhasePoint pt{0.0, kPi / 2, 1.0, 0.0};
  const auto m = mode_matrix(s, pt);
  const double oracle = std::abs(det3(assemble_q(1.0, 1.0, 0.0)));
  EXPECT_NEAR(oracle, 4.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.jacobian, oracle, 1e-12);
  EXPECT_NEAR(jacobian_closed_form(s, pt), oracle, 1e-12);
}

TEST(ModeMatrix, RossbyRowExample) {
  const auto s = CoriolisProfile::sine();
  const auto m = mode_matrix(s, {0.0, kPi / 2, 1.0, 0.0});
  EXPECT_NEAR(std::abs(m.p(1, 0) - cdouble(0.0, 0.5)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(m.p(1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(m.p(1, 2) - 0.5), 0.0, 1e-12);
}

TEST(ModeMatrix, RandomPointsInverseJacobianProjector) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), uxi(-4.0, 4.0);
  const auto s = CoriolisProfile::sine();
  int used = 0;
  for (int i = 0; i < 3000; ++i) {
    PhasePoint pt{0.0, ux(rng), uxi(rng), uxi(rng)};
    if (!admissible(s, pt) || std::fabs(pt.xi1) < 0.05) continue;
    ++used;
    const auto m = mode_matrix(s, pt);
    const Matrix3c pq = m.p * m.q;
    EXPECT_LE((pq - Matrix3c::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    const double b = s.b(pt.x2);
    const double oracle = std::abs(det3(assemble_q(b, pt.xi1, pt.xi2)));
    EXPECT_NEAR(m.jacobian / oracle, 1.0, 1e-10);
    EXPECT_NEAR(jacobian_closed_form(s, pt) / oracle, 1.0, 1e-10);
    EXPECT_GE(m.jacobian, 2.0);
    const double K = pt.xi1 * pt.xi1 + pt.xi2 * pt.xi2 + b * b;
    EXPECT_LE(std::abs(m.p(1, 0) - cdouble(0.0, b * pt.xi1 / K)), 1e-12);
    EXPECT_LE(std::abs(m.p(1, 1) + pt.xi1 * pt.xi2 / K), 1e-12);
    EXPECT_LE(std::abs(m.p(1, 2) - pt.xi1 * pt.xi1 / K), 1e-12);
  }
  EXPECT_GT(used, 2000);
}

TEST(RossbySymbol, OddInXi1AndZeroWhereBprimeVanishes) {
  const auto p = CoriolisProfile::shifted_sine();
  const PhasePoint a{0.0, 1.1, 0.8, -0.3}, b{0.0, 1.1, -0.8, -0.3};
  EXPECT_DOUBLE_EQ(rossby_symbol_E(p, a), -rossby_symbol_E(p, b));
  EXPECT_LE(std::fabs(rossby_symbol_E(p, {0.0, kPi / 2, 1.0, 0.5})), 1e-16);
  EXPECT_THROW(rossby_symbol_E(p, {0.0, 1.0, 0.0, 0.5}), Inadmissible);
}
