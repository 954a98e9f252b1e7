#include <cmath>

#include <gtest/gtest.h>
#include <unsupported/Eigen/FFT>

#include "rossbytrap/errors.hpp"
#include "rossbytrap/modes.hpp"

using namespace rossbytrap;

namespace {

const CoriolisProfile& prof() {
  static const CoriolisProfile p = CoriolisProfile::shifted_sine();
  return p;
}

double l2(const std::vector<cdouble>& v, const Grid2D& g) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s * g.dx1() * g.dx2());
}

double field_diff(const StateField& a, const StateField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
  return std::sqrt(s * a.grid.dx1() * a.grid.dx2());
}

StateField packet(double eps, double xi1, Polarization pol = Polarization::Rossby) {
  GaussianWkb gw;
  gw.xi1 = xi1;
  gw.sigma1 = 1.0;
  gw.sigma2 = 0.3;
  gw.polarization = pol;
  return wkb_initial(prof(), gaussian_wkb(prof(), gw), Grid2D::for_epsilon(eps)).field;
}

}  // namespace

TEST(Quantize, ElementarySymbols) {
  const Grid2D g = Grid2D::for_epsilon(1.0 / 8);
  const int n = g.N2;
  const auto one = quantize_symbol([](double, double, double) { return cdouble(1.0); }, 3, g, "1");
  EXPECT_LE((one.matrix - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(one.symbol_id, "1");

  // ξ₂ ↦ −iεD, the Nyquist mode having symbol mean 0
  const Eigen::MatrixXcd mD = cdouble(0.0, -g.epsilon) * spectral_derivative(n).cast<cdouble>();
  const auto xi2 = quantize_symbol([](double, double k, double) { return cdouble(k); }, 3, g);
  EXPECT_LE((xi2.matrix - mD).cwiseAbs().maxCoeff(), 1e-13);

  // multiplication symbols are diagonal
  const auto b2 = quantize_symbol(
      [](double x, double, double) { return cdouble(std::pow(2.0 + std::sin(x), 2)); }, 0, g);
  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) diag(j, j) = std::pow(2.0 + std::sin(g.x2(j)), 2);
  EXPECT_LE((b2.matrix - diag).cwiseAbs().maxCoeff(), 1e-12);

  // left quantization: x-dependence acts after the derivative
  const auto mixed = quantize_symbol(
      [](double x, double k, double) { return cdouble(std::cos(x) * k); }, 0, g);
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) c(j, j) = std::cos(g.x2(j));
  EXPECT_LE((mixed.matrix - c * mD).cwiseAbs().maxCoeff(), 1e-12);

  // ξ₁ enters through the x₁-mode
  const auto xi1 = quantize_symbol([](double, double, double k1) { return cdouble(k1); }, 5, g);
  EXPECT_NEAR(xi1.matrix(0, 0).real(), g.xi1_of(5), 1e-14);
}

TEST(Quantize, ApplyMatchesMatrix) {
  const Grid2D g = Grid2D::for_epsilon(1.0 / 8);
  const Symbol a = [](double x, double k, double k1) { return cdouble(std::sin(x) * k * k, k1 * std::cos(2 * x)); };
  const auto q = quantize_symbol(a, -4, g);
  Eigen::VectorXcd u(g.N2);
  for (int j = 0; j < g.N2; ++j) u(j) = std::polar(std::exp(std::cos(g.x2(j))), 3.0 * g.x2(j));
  EXPECT_LE((apply_symbol(a, g.xi1_of(-4), g, u) - q.matrix * u).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Quantize, RejectsUnresolvedSymbol) {
  const Grid2D g = Grid2D::for_epsilon(1.0 / 8);
  EXPECT_THROW(quantize_symbol([](double x, double, double) { return cdouble(std::cos(30 * x)); }, 1, g),
               ResolutionError);
}

TEST(Project, ZeroInZeroOut) {
  const Grid2D g = Grid2D::for_epsilon(1.0 / 8);
  const ModeFields m = project_modes(prof(), StateField(g));
  for (int j = 0; j < 3; ++j) EXPECT_EQ(m.norm(j), 0.0);
  EXPECT_EQ(reconstruct(prof(), m).norm(), 0.0);
}

TEST(Project, InadmissibleContentIsRejected) {
  // ξ₁ = 0 content sits in the inadmissible set
  GaussianWkb gw;
  gw.xi1 = 0.0;
  gw.polarization = Polarization::Raw;
  const StateField U = wkb_initial(prof(), gaussian_wkb(prof(), gw), Grid2D::for_epsilon(1.0 / 8)).field;
  EXPECT_GT(admissibility_defect(prof(), U), 1e-3);
  EXPECT_THROW(project_modes(prof(), U), AdmissibilityError);
}

TEST(Project, PoincarePlusDatumHasSmallOtherBranches) {
  // U = Op(q⁺)e^{i(κx₁ + n x₂)} at one lattice point of phase space
  std::vector<double> leak;
  for (double eps : {1.0 / 8, 1.0 / 16}) {
    const Grid2D g = Grid2D::for_epsilon(eps);
    const int k1 = static_cast<int>(std::lround(1.0 * g.L1 / (kTwoPi * eps)));  // ξ₁ = 1
    const int n = static_cast<int>(std::lround(0.5 / eps));                       // ξ₂ = 0.5
    std::vector<cdouble> plane(static_cast<std::size_t>(g.N1) * g.N2);
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j)
        plane[static_cast<std::size_t>(i) * g.N2 + j] = std::polar(1.0, kTwoPi * k1 / g.L1 * g.x1(i) + n * g.x2(j));
    const StateField U = reconstruct_mode(prof(), g, plane, Branch::Plus);
    const ModeFields m = project_modes(prof(), U);
    const double plus = m.norm(static_cast<int>(Branch::Plus));
    const double other = std::hypot(m.norm(0), m.norm(1));
    EXPECT_NEAR(plus, l2(plane, g), 0.1 * l2(plane, g));
    EXPECT_LE(other, eps * plus);
    leak.push_back(other / plus);
  }
  EXPECT_LT(leak[1], 0.7 * leak[0]);
}

TEST(Project, RossbyComponentMatchesPointwiseWeight) {
  // oracle: the WKB cloud weight (p⁰·amplitude)e^{iS/ε} evaluated pointwise
  std::vector<double> err;
  for (double eps : {1.0 / 8, 1.0 / 16}) {
    GaussianWkb gw;
    gw.xi1 = 1.4;
    gw.xi2 = 0.3;
    gw.polarization = Polarization::Raw;
    gw.raw = {cdouble(0.4, 0.1), cdouble(0.0, -0.7), cdouble(1.0, 0.0)};
    const Grid2D g = Grid2D::for_epsilon(eps);
    const WkbSpec spec = gaussian_wkb(prof(), gw);
    const StateField U = wkb_initial(prof(), spec, g).field;
    const ModeFields m = project_modes(prof(), U);
    std::vector<cdouble> pointwise(static_cast<std::size_t>(g.N1) * g.N2);
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j) {
        const auto amp = spec.amplitude(g.x1(i), g.x2(j));
        const auto row = rossby_projector_row(prof(), {g.x1(i), g.x2(j), gw.xi1, gw.xi2});
        cdouble w = 0.0;
        for (int c = 0; c < 3; ++c) w += row[c] * amp[c];
        pointwise[static_cast<std::size_t>(i) * g.N2 + j] = w * std::polar(1.0, spec.phase(g.x1(i), g.x2(j)) / eps);
      }
    std::vector<cdouble> d(pointwise.size());
    const auto& r = m.u2[static_cast<int>(Branch::Zero)];
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = r[p] - pointwise[p];
    err.push_back(l2(d, g) / U.norm());
    EXPECT_LE(err.back(), 2 * eps);
  }
  EXPECT_LT(err[1], 0.7 * err[0]);
}

TEST(Project, RoundTripRemainderIsFirstOrder) {
  std::vector<double> eps{1.0 / 8, 1.0 / 16}, rem;
  for (double e : eps) {
    const StateField U = packet(e, 1.75);
    const StateField back = reconstruct(prof(), project_modes(prof(), U));
    rem.push_back(field_diff(U, back) / U.norm());
  }
  const double slope = loglog_slope(eps, rem);
  EXPECT_NEAR(slope, 1.0, 0.25) << rem[0] << " " << rem[1];
}

TEST(ScalarRossby, ReproducesFullRossbyEigenpairs) {
  // u₂ ∝ e^{iT₀t/ε} against e^{−iλt}: the u₂ part w of a resolved Rossby
  // eigenvector of the full generator satisfies T₀w ≈ −ελw
  std::vector<double> err;
  for (double eps : {1.0 / 8, 1.0 / 16}) {
    const Grid2D g = Grid2D::for_epsilon(eps);
    const int n = g.N2;
    const int k1 = static_cast<int>(std::lround(g.L1 / (kTwoPi * eps)));  // ξ₁ = 1
    const Eigen::MatrixXcd H = cdouble(0.0, 1.0) * build_generator(prof(), g, k1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const Eigen::MatrixXcd T0 = scalar_rossby_operator(prof(), g, k1).cast<cdouble>();
    double worst = 0.0;
    int used = 0;
    for (int r = 0; r < 3 * n; ++r) {
      const double lam = es.eigenvalues()(r);
      if (std::fabs(lam) > 1.0 || std::fabs(lam) < 1e-3) continue;  // Poincaré or near-static
      const Eigen::VectorXcd w = es.eigenvectors().col(r).segment(2 * n, n);
      Eigen::FFT<double> fft;
      std::vector<cdouble> in(w.data(), w.data() + n), out;
      fft.fwd(out, in);
      double low = 0.0, all = 0.0;
      for (int j = 0; j < n; ++j) {
        all += std::norm(out[j]);
        if (std::abs(Grid2D::wavenumber(j, n)) < n / 4) low += std::norm(out[j]);
      }
      if (low < 0.999 * all) continue;  // grid-scale modes
      worst = std::max(worst, (T0 * w + eps * lam * w).norm() / (eps * std::fabs(lam) * w.norm()));
      ++used;
    }
    EXPECT_GE(used, 5);
    err.push_back(worst);
  }
  EXPECT_LE(err[0], 0.05);
  EXPECT_LT(err[1], 0.4 * err[0]);
}

TEST(ScalarRossby, EvolutionTracksFullRossbyComponent) {
  const double eps = 1.0 / 8;
  const StateField U0 = packet(eps, 1.75);
  const ModeFields m0 = project_modes(prof(), U0);
  const double t = 1.0 / eps;
  const auto scal = scalar_rossby_evolve(prof(), U0.grid, m0.u2[1], {0.0, t});
  const ModeFields mt = project_modes(prof(), evolve(prof(), U0, t));
  std::vector<cdouble> d(scal[1].size());
  for (std::size_t p = 0; p < d.size(); ++p) d[p] = scal[1][p] - mt.u2[1][p];
  EXPECT_LE(l2(d, U0.grid) / U0.norm(), 5e-3);
  // t = 0 is the identity
  for (std::size_t p = 0; p < d.size(); ++p) EXPECT_NEAR(std::abs(scal[0][p] - m0.u2[1][p]), 0.0, 1e-12);
}

TEST(BohrSommerfeld, HarmonicLadderAtTheWellBottom) {
  // b = 2 + sin has its b² minimum 1 at 3π/2 with (b²)″ = 2bb″ = 2, so the
  // oscillator levels are 1 + (2k+1)ε√(bb″) = 1 + (2k+1)ε
  const double eps = 1.0 / 64;
  const auto t = bohr_sommerfeld_levels(prof(), 1.0, eps, 0, 2);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& r : t.rows) {
    const double ladder = 1.0 + (2 * r.k + 1) * eps;
    EXPECT_NEAR(r.lambda_bs, ladder, 2 * (r.k + 1) * eps * eps) << "k=" << r.k;
    EXPECT_NEAR(r.lambda_direct, ladder, 2 * (r.k + 1) * eps * eps) << "k=" << r.k;
  }
}

TEST(BohrSommerfeld, ActionAndWindowGuards) {
  const auto wells = wells_of(prof());
  ASSERT_EQ(wells.size(), 1u);
  EXPECT_NEAR(wells[0].x_min, 1.5 * kPi, 1e-8);
  EXPECT_NEAR(wells[0].v_min, 1.0, 1e-12);
  EXPECT_NEAR(wells[0].barrier, 9.0, 1e-12);
  double prev = 0.0;
  for (double lam : {1.1, 2.0, 4.0, 8.5}) {
    const double a = well_action(prof(), wells[0], lam);
    EXPECT_GT(a, prev);
    prev = a;
  }
  // near the bottom b² ≈ 1 + y², so (1/π)∫√(λ − 1 − y²)dy = (λ − 1)/2
  EXPECT_NEAR(well_action(prof(), wells[0], 1.0 + 1e-4), 0.5e-4, 1e-7);
  EXPECT_THROW(well_action(prof(), wells[0], 9.5), WindowError);
  EXPECT_THROW(well_action(prof(), wells[0], 0.5), WindowError);
  EXPECT_THROW(bohr_sommerfeld_levels(prof(), 1.0, 1.0 / 8, 0, 400), WindowError);
  const CoriolisProfile s = CoriolisProfile::sine();
  EXPECT_EQ(wells_of(s).size(), 2u);
  EXPECT_THROW(bohr_sommerfeld_levels(s, 1.0, 1.0 / 8, 0, 2), WindowError);
}

TEST(BohrSommerfeld, ShiftFitLeavesSecondOrderResidual) {
  std::vector<SpectrumTable> tabs;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) tabs.push_back(bohr_sommerfeld_levels(prof(), 1.0, eps, 0, 4));
  const ShiftFit f = fit_bs_shift(tabs);
  ASSERT_EQ(f.k.size(), 5u);
  EXPECT_NEAR(f.slope_residual, 2.0, 0.3);
  for (std::size_t i = 0; i < f.epsilons.size(); ++i) EXPECT_LE(f.max_residual[i], f.max_raw[i] + 1e-15);
  EXPECT_THROW(fit_bs_shift({tabs[0]}), FitFailure);
}

TEST(Residual, QuasimodesOfTPlusAreFirstOrder) {
  std::vector<double> eps{1.0 / 8, 1.0 / 16}, r;
  for (double e : eps) {
    const ResidualReport rep = scalar_residual_check(prof(), 1.0, e, 5);
    ASSERT_EQ(rep.entries.size(), 5u);
    double worst = 0.0;
    for (const auto& en : rep.entries) {
      worst = std::max(worst, en.residual);
      EXPECT_GT(en.off_spectrum, 0.05);
    }
    EXPECT_LE(worst, 2 * e);
    r.push_back(rep.entries[0].residual);
  }
  EXPECT_GE(loglog_slope(eps, r), 1.0);
}

TEST(Misc, LogLogSlopeOfPowerLaw) {
  EXPECT_NEAR(loglog_slope({0.1, 0.2, 0.4}, {3e-3, 1.2e-2, 4.8e-2}), 2.0, 1e-12);
}
