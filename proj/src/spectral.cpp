#include "rossbytrap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <lapacke.h>

#include "fft.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(double x) {
  int n = 1;
  while (n < x) n <<= 1;
  return n;
}

// Eigen-decomposition of the Hermitian matrix H, which is replaced by its
// eigenvectors. MRRR (zheevr): the divide-and-conquer driver shipped with the
// system LAPACK returns non-orthogonal vectors at n = 768.
Eigen::VectorXd hermitian_eig(Eigen::MatrixXcd& H) {
  const int n = static_cast<int>(H.rows());
  Eigen::VectorXd w(n);
  Eigen::MatrixXcd Z(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(
      LAPACK_COL_MAJOR, 'V', 'A', 'L', n, reinterpret_cast<lapack_complex_double*>(H.data()), n, 0.0, 0.0, 0, 0,
      0.0, &found, w.data(), reinterpret_cast<lapack_complex_double*>(Z.data()), n, support.data());
  if (info != 0 || found != n) throw ComputeError("zheevr failed with info " + std::to_string(info));
  H = std::move(Z);
  return w;
}

// Mass of each FFT x₁-mode (sum of |·|² over components and x₂).
std::vector<double> mode_masses(const StateField& S) {
  const int N1 = S.grid.N1, N2 = S.grid.N2;
  std::vector<double> m(N1, 0.0);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < N1; ++k)
      for (int j = 0; j < N2; ++j) m[k] += std::norm(S.at(c, k, j));
  return m;
}

}  // namespace

// ---------------------------------------------------------------- grid

bool Grid2D::resolves() const {
  return N1 >= 8.0 * L1 / (kTwoPi * epsilon) - 1e-9 && N2 >= 8.0 / epsilon - 1e-9;
}

void Grid2D::validate(bool enforce_resolution) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (!(L1 > 0.0) || !std::isfinite(L1)) throw ConfigError("L1 must be positive");
  if (!is_pow2(N1) || !is_pow2(N2) || N1 < 4 || N2 < 4)
    throw ConfigError("N1 and N2 must be powers of two (>= 4)");
  if (enforce_resolution && !resolves()) {
    std::ostringstream os;
    os << "grid N1=" << N1 << " N2=" << N2 << " under-resolves epsilon=" << epsilon
       << " (need N1 >= " << 8.0 * L1 / (kTwoPi * epsilon) << ", N2 >= " << 8.0 / epsilon << ")";
    throw ResolutionError(os.str());
  }
}

Grid2D Grid2D::for_epsilon(double epsilon, int m) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (m < 1) throw ConfigError("box multiple m must be >= 1");
  Grid2D g;
  g.epsilon = epsilon;
  g.L1 = kTwoPi * m;
  g.N1 = next_pow2(8.0 * m / epsilon - 1e-9);
  g.N2 = next_pow2(8.0 / epsilon - 1e-9);
  return g;
}

StateField::StateField(const Grid2D& g) : grid(g), values(3 * static_cast<std::size_t>(g.N1) * g.N2) {}

double StateField::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * grid.dx1() * grid.dx2());
}

void fft_x1(StateField& U) {
  const int N1 = U.grid.N1, N2 = U.grid.N2;
  for (int c = 0; c < 3; ++c) detail::fft_many(&U.at(c, 0, 0), N1, N2, N2, 1, FFTW_FORWARD);
}

void ifft_x1(StateField& U) {
  const int N1 = U.grid.N1, N2 = U.grid.N2;
  for (int c = 0; c < 3; ++c) detail::fft_many(&U.at(c, 0, 0), N1, N2, N2, 1, FFTW_BACKWARD);
  const double s = 1.0 / N1;
  for (auto& v : U.values) v *= s;
}

// ---------------------------------------------------------------- generator

Eigen::MatrixXd spectral_derivative(int N) {
  if (N < 2 || N % 2) throw ConfigError("spectral_derivative needs an even N");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  const double h = kTwoPi / N;
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l) {
      if (j == l) continue;
      const int d = j - l;
      D(j, l) = 0.5 * ((d % 2) ? -1.0 : 1.0) / std::tan(0.5 * d * h);
    }
  return D;
}

Eigen::MatrixXcd build_generator(const CoriolisProfile& profile, const Grid2D& grid, int k1) {
  const int n = grid.N2;
  const double kappa = kTwoPi * k1 / grid.L1;
  const cdouble ik(0.0, kappa);
  const Eigen::MatrixXd D = spectral_derivative(n);
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(3 * n, 3 * n);
  // ∂ₜρ = −(∂₁u₁ + ∂₂u₂), ∂ₜu₁ = −(∂₁ρ − (b/ε)u₂), ∂ₜu₂ = −(∂₂ρ + (b/ε)u₁)
  A.block(0, 2 * n, n, n) = -D.cast<cdouble>();
  A.block(2 * n, 0, n, n) = -D.cast<cdouble>();
  for (int j = 0; j < n; ++j) {
    const double beta = profile.b(grid.x2(j)) / grid.epsilon;
    A(j, n + j) = -ik;
    A(n + j, j) = -ik;
    A(n + j, 2 * n + j) = beta;
    A(2 * n + j, n + j) = -beta;
  }
  return A;
}

// ---------------------------------------------------------------- evolution

double spectral_tail(const StateField& U) {
  const int N1 = U.grid.N1, N2 = U.grid.N2;
  StateField S = U;
  for (int c = 0; c < 3; ++c) detail::fft_2d(&S.at(c, 0, 0), N1, N2, FFTW_FORWARD);
  double total = 0.0, tail = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < N1; ++a) {
      const int k1 = std::abs(Grid2D::wavenumber(a, N1));
      for (int b = 0; b < N2; ++b) {
        const int k2 = std::abs(Grid2D::wavenumber(b, N2));
        const double w = std::norm(S.at(c, a, b));
        total += w;
        if (4 * k1 > 3 * (N1 / 2) || 4 * k2 > 3 * (N2 / 2)) tail += w;
      }
    }
  return total > 0.0 ? std::sqrt(tail / total) : 0.0;
}

Evolution evolve_impl(const CoriolisProfile& profile, const StateField& U0, const std::vector<double>& times,
                      const EvolveOptions& opts, bool parallel) {
  const Grid2D& g = U0.grid;
  g.validate(true);
  if (U0.values.size() != 3 * static_cast<std::size_t>(g.N1) * g.N2)
    throw ConfigError("state field size does not match its grid");
  for (double t : times)
    if (!std::isfinite(t)) throw ConfigError("output times must be finite");
  const double tail = spectral_tail(U0);
  if (tail > opts.tail_tol) {
    std::ostringstream os;
    os << "spectral tail " << tail << " exceeds " << opts.tail_tol << " of the norm";
    throw ResolutionError(os.str());
  }

  Evolution ev;
  ev.grid_ = g;
  ev.times_ = times;
  ev.input_norm_ = U0.norm();

  StateField S = U0;
  fft_x1(S);
  const std::vector<double> mass = mode_masses(S);
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (int k = 0; k < g.N1; ++k)
    if (total > 0.0 && mass[k] > opts.content_floor * total) ev.modes_.push_back(k);

  const int n = g.N2;
  const std::size_t nm = ev.modes_.size();
  ev.coeffs_.assign(nm, std::vector<Eigen::VectorXcd>(times.size()));
  std::vector<double> gaps(nm, std::numeric_limits<double>::infinity());

  auto propagate = [&](std::size_t m) {
    const int k = ev.modes_[m];
    Eigen::MatrixXcd H = cdouble(0.0, 1.0) * build_generator(profile, g, Grid2D::wavenumber(k, g.N1));
    const Eigen::VectorXd lam = hermitian_eig(H);  // e^{At} = V e^{−iΛt} V*
    Eigen::VectorXcd u(3 * n);
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < n; ++j) u(c * n + j) = S.at(c, k, j);
    Eigen::VectorXcd coef = H.adjoint() * u;
    if (std::fabs(coef.norm() - u.norm()) > 1e-11 * u.norm())
      throw ComputeError("eigenvector basis of mode " + std::to_string(k) + " is not unitary");

    std::vector<int> order(3 * n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::fabs(lam(a)) < std::fabs(lam(b)); });
    const double rossby_max = std::fabs(lam(order[n - 1]));
    const double poincare_min = std::fabs(lam(order[n]));
    gaps[m] = rossby_max > 0.0 ? poincare_min / rossby_max : std::numeric_limits<double>::infinity();
    if (opts.filter != BranchFilter::All) {
      const bool keep_rossby = opts.filter == BranchFilter::Rossby;
      for (int r = 0; r < 3 * n; ++r)
        if ((r < n) != keep_rossby) coef(order[r]) = 0.0;
    }
    for (std::size_t j = 0; j < times.size(); ++j) {
      Eigen::VectorXcd ph(3 * n);
      for (int r = 0; r < 3 * n; ++r) ph(r) = coef(r) * std::polar(1.0, -lam(r) * times[j]);
      ev.coeffs_[m][j] = H * ph;
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t m = 0; m < nm; ++m) propagate(m);
  } else {
    for (std::size_t m = 0; m < nm; ++m) propagate(m);
  }
  ev.branch_gap_ = gaps.empty() ? std::numeric_limits<double>::infinity()
                                : *std::min_element(gaps.begin(), gaps.end());
  return ev;
}

Evolution evolve(const CoriolisProfile& profile, const StateField& U0, const std::vector<double>& times,
                 const EvolveOptions& opts) {
  return evolve_impl(profile, U0, times, opts, true);
}

Evolution evolve_serial(const CoriolisProfile& profile, const StateField& U0, const std::vector<double>& times,
                        const EvolveOptions& opts) {
  return evolve_impl(profile, U0, times, opts, false);
}

StateField evolve(const CoriolisProfile& profile, const StateField& U0, double t) {
  StateField out = evolve(profile, U0, std::vector<double>{t}).field(0);
  out.time = U0.time + t;
  return out;
}

StateField Evolution::field(std::size_t j) const {
  StateField S(grid_);
  S.time = times_.at(j);
  const int n = grid_.N2;
  for (std::size_t m = 0; m < modes_.size(); ++m)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < n; ++i) S.at(c, modes_[m], i) = coeffs_[m][j](c * n + i);
  ifft_x1(S);
  return S;
}

std::vector<cdouble> Evolution::u2(std::size_t j) const {
  const int N1 = grid_.N1, n = grid_.N2;
  std::vector<cdouble> out(static_cast<std::size_t>(N1) * n);
  for (std::size_t m = 0; m < modes_.size(); ++m)
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(modes_[m]) * n + i] = coeffs_[m][j](2 * n + i);
  detail::fft_many(out.data(), N1, n, n, 1, FFTW_BACKWARD);
  for (auto& v : out) v /= static_cast<double>(N1);
  return out;
}

double Evolution::norm(std::size_t j) const {
  double s = 0.0;
  for (std::size_t m = 0; m < modes_.size(); ++m) s += coeffs_[m].at(j).squaredNorm();
  return std::sqrt(s * grid_.dx1() * grid_.dx2() / grid_.N1);
}

// ---------------------------------------------------------------- WKB data

WkbResult wkb_initial(const CoriolisProfile& profile, const WkbSpec& spec, const Grid2D& grid, int cloud_stride) {
  grid.validate(true);
  if (!spec.phase || !spec.amplitude) throw ConfigError("WKB spec needs a phase and an amplitude");
  if (cloud_stride < 1) throw ConfigError("cloud_stride must be >= 1");
  const int N1 = grid.N1, N2 = grid.N2;
  const double eps = grid.epsilon;
  auto grad = [&](double x1, double x2) -> std::array<double, 2> {
    if (spec.grad_phase) return spec.grad_phase(x1, x2);
    const double h = 1e-6;
    return {(spec.phase(x1 + h, x2) - spec.phase(x1 - h, x2)) / (2 * h),
            (spec.phase(x1, x2 + h) - spec.phase(x1, x2 - h)) / (2 * h)};
  };

  std::vector<std::array<cdouble, 3>> amp(static_cast<std::size_t>(N1) * N2);
  double amax = 0.0;
  for (int i = 0; i < N1; ++i)
    for (int j = 0; j < N2; ++j) {
      auto& a = amp[static_cast<std::size_t>(i) * N2 + j];
      a = spec.amplitude(grid.x1(i), grid.x2(j));
      amax = std::max(amax, std::sqrt(std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2])));
    }

  WkbResult out{StateField(grid), {}};
  if (amax == 0.0) return out;
  // the box is a periodic surrogate for ℝ: the amplitude must vanish at the seam
  for (int j = 0; j < N2; ++j) {
    const auto& a = amp[j];  // i1 = 0 is x₁ = −L1/2
    if (std::sqrt(std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2])) > spec.support_tol * amax)
      throw ConfigError("WKB amplitude does not vanish at the periodic x1 seam; enlarge L1 or narrow the envelope");
  }
  const double nyq1 = kPi * N1 / grid.L1, nyq2 = 0.5 * N2;
  for (int i = 0; i < N1; ++i)
    for (int j = 0; j < N2; ++j) {
      const auto& a = amp[static_cast<std::size_t>(i) * N2 + j];
      const double mag = std::sqrt(std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]));
      if (mag <= spec.support_tol * amax) continue;
      const double x1 = grid.x1(i), x2 = grid.x2(j);
      const auto dS = grad(x1, x2);
      if (std::fabs(dS[0]) / eps > 0.75 * nyq1 || std::fabs(dS[1]) / eps > 0.75 * nyq2) {
        std::ostringstream os;
        os << "|grad S|/eps at (" << x1 << ", " << x2 << ") exceeds 3/4 of the grid Nyquist frequency";
        throw ResolutionError(os.str());
      }
      const cdouble e = std::polar(1.0, spec.phase(x1, x2) / eps);
      for (int c = 0; c < 3; ++c) out.field.at(c, i, j) = a[c] * e;
      if (i % cloud_stride == 0 && j % cloud_stride == 0) {
        LagrangianSample s;
        s.point = {x1, x2, dS[0], dS[1]};
        s.amplitude = mag;
        if (admissible(profile, s.point)) {
          const auto row = rossby_projector_row(profile, s.point);
          s.rossby_weight = row[0] * a[0] + row[1] * a[1] + row[2] * a[2];
        } else {
          s.rossby_weight = cdouble(std::numeric_limits<double>::quiet_NaN(), 0.0);
        }
        out.cloud.push_back(s);
      }
    }
  return out;
}

WkbSpec gaussian_wkb(const CoriolisProfile& profile, const GaussianWkb& g) {
  if (!(g.sigma1 > 0.0) || !(g.sigma2 > 0.0)) throw ConfigError("Gaussian widths must be positive");
  WkbSpec s;
  s.phase = [g](double x1, double x2) { return g.xi1 * x1 + g.xi2 * x2; };
  s.grad_phase = [g](double, double) { return std::array<double, 2>{g.xi1, g.xi2}; };
  if (g.polarization != Polarization::Raw) require_admissible(profile, {g.x1c, g.x2c, g.xi1, g.xi2});
  s.amplitude = [g, profile](double x1, double x2) {
    double d2 = std::remainder(x2 - g.x2c, kTwoPi);
    const double arg = 0.5 * (std::pow((x1 - g.x1c) / g.sigma1, 2) + std::pow(d2 / g.sigma2, 2));
    std::array<cdouble, 3> a{0.0, 0.0, 0.0};
    if (arg > 69.0) return a;  // e^{-69} ≈ 1e-30
    const double env = std::exp(-arg);
    if (g.polarization == Polarization::Raw) {
      for (int c = 0; c < 3; ++c) a[c] = env * g.raw[c];
      return a;
    }
    const int col = g.polarization == Polarization::PoincareMinus ? 0 : g.polarization == Polarization::Rossby ? 1 : 2;
    const ModeMatrix mm = mode_matrix(profile, {x1, x2, g.xi1, g.xi2});
    for (int c = 0; c < 3; ++c) a[c] = env * mm.q(c, col);
    return a;
  };
  return s;
}

// ---------------------------------------------------------------- local mass

void RegionOmega::validate(const Grid2D& grid) const {
  if (everything) return;
  if (!(x1_lo < x1_hi)) throw ConfigError("Omega needs x1_lo < x1_hi");
  if (collar_cells < 0) throw ConfigError("Omega collar must be nonnegative");
  const double w = collar_cells * grid.dx1();
  const double margin = grid.L1 / 8.0;
  if (x1_lo - w < -0.5 * grid.L1 + margin || x1_hi + w > 0.5 * grid.L1 - margin) {
    std::ostringstream os;
    os << "Omega [" << x1_lo << ", " << x1_hi << "] with collar " << w << " is closer than L1/8 = " << margin
       << " to the periodic seam";
    throw ConfigError(os.str());
  }
  if (!full_x2 && !(x2_lo < x2_hi)) throw ConfigError("Omega needs x2_lo < x2_hi");
}

namespace {
double collar(double d, double w) {
  if (d <= 0.0) return 1.0;
  if (d >= w) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * d / w));
}
}  // namespace

double RegionOmega::weight(const Grid2D& grid, double x1, double x2) const {
  if (everything) return 1.0;
  const double w1 = collar_cells * grid.dx1();
  double out = collar(std::max(x1_lo - x1, x1 - x1_hi), w1);
  if (!full_x2 && out > 0.0) {
    const double w2 = collar_cells * grid.dx2();
    // distance on the circle from x2 to the arc [x2_lo, x2_hi]
    const double mid = 0.5 * (x2_lo + x2_hi), half = 0.5 * (x2_hi - x2_lo);
    const double d = std::fabs(std::remainder(x2 - mid, kTwoPi)) - half;
    out *= collar(d, w2);
  }
  return out;
}

double local_mass(const StateField& U, const RegionOmega& omega) {
  omega.validate(U.grid);
  const Grid2D& g = U.grid;
  double s = 0.0;
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const double w = omega.weight(g, g.x1(i), g.x2(j));
      if (w == 0.0) continue;
      s += w * (std::norm(U.at(0, i, j)) + std::norm(U.at(1, i, j)) + std::norm(U.at(2, i, j)));
    }
  return std::sqrt(s * g.dx1() * g.dx2());
}

double local_mass_u2(const Grid2D& g, const std::vector<cdouble>& u2, const RegionOmega& omega) {
  omega.validate(g);
  if (u2.size() != static_cast<std::size_t>(g.N1) * g.N2) throw ConfigError("u2 array does not match its grid");
  double s = 0.0;
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const double w = omega.weight(g, g.x1(i), g.x2(j));
      if (w != 0.0) s += w * std::norm(u2[static_cast<std::size_t>(i) * g.N2 + j]);
    }
  return std::sqrt(s * g.dx1() * g.dx2());
}

// ---------------------------------------------------------------- Husimi

double HusimiDensity::total() const {
  return std::accumulate(density.begin(), density.end(), 0.0) * cell_volume;
}

namespace {

std::vector<int> lattice_centres(int N, int stride, const std::optional<std::pair<int, int>>& band) {
  if (stride < 1) throw ConfigError("Husimi strides must be >= 1");
  const int lo = band ? band->first : -N / 2;
  const int hi = band ? band->second : N / 2 - 1;
  if (lo > hi || lo < -N / 2 || hi > N / 2 - 1) throw ConfigError("Husimi wavenumber band outside the lattice");
  std::vector<int> out;
  for (int k = lo; k <= hi; k += stride) out.push_back(k);
  return out;
}

// Gaussian weights |G(Δk)| = exp(−ε(cΔk)²/2) on the wrapped lattice, scaled so
// that Σ_{Δk} G² = 1 over one full period.
std::vector<double> window_1d(int N, double c, double eps) {
  std::vector<double> g(N);
  double s = 0.0;
  for (int a = 0; a < N; ++a) {
    const double d = c * Grid2D::wavenumber(a, N);
    g[a] = std::exp(-0.5 * eps * d * d);
    s += g[a] * g[a];
  }
  for (auto& v : g) v /= std::sqrt(s);
  return g;
}

HusimiDensity husimi_impl(const StateField& U, const HusimiOptions& o, bool parallel) {
  const Grid2D& g = U.grid;
  g.validate(false);
  const int N1 = g.N1, N2 = g.N2;
  if (o.x1_stride < 1 || o.x2_stride < 1 || N1 % o.x1_stride || N2 % o.x2_stride)
    throw ConfigError("Husimi x-strides must divide the grid sizes");
  const int M1 = N1 / o.x1_stride, M2 = N2 / o.x2_stride;
  const auto kc1 = lattice_centres(N1, o.k1_stride, o.k1_band);
  const auto kc2 = lattice_centres(N2, o.k2_stride, o.k2_band);
  const double eps = g.epsilon;
  const double c1 = kTwoPi / g.L1;
  const auto G1 = window_1d(N1, c1, eps);
  const auto G2 = window_1d(N2, 1.0, eps);
  // only lattice offsets with weight above 1e-18 contribute
  auto support = [](const std::vector<double>& G) {
    std::vector<int> s;
    for (int a = 0; a < static_cast<int>(G.size()); ++a)
      if (G[a] > 1e-18 * G[0]) s.push_back(Grid2D::wavenumber(a, static_cast<int>(G.size())));
    return s;
  };
  const auto off1 = support(G1), off2 = support(G2);

  std::vector<std::vector<cdouble>> spec(3, std::vector<cdouble>(static_cast<std::size_t>(N1) * N2));
  for (int c = 0; c < 3; ++c) {
    std::copy(&U.at(c, 0, 0), &U.at(c, 0, 0) + static_cast<std::size_t>(N1) * N2, spec[c].begin());
    detail::fft_2d(spec[c].data(), N1, N2, FFTW_FORWARD);
  }

  HusimiDensity h;
  for (int i = 0; i < M1; ++i) h.x1.push_back(g.x1(i * o.x1_stride));
  for (int j = 0; j < M2; ++j) h.x2.push_back(g.x2(j * o.x2_stride));
  for (int k : kc1) h.xi1.push_back(g.xi1_of(k));
  for (int k : kc2) h.xi2.push_back(g.xi2_of(k));
  h.density.assign(static_cast<std::size_t>(M1) * M2 * kc1.size() * kc2.size(), 0.0);
  const double dxi1 = eps * c1, dxi2 = eps;
  h.cell_volume = g.dx1() * o.x1_stride * g.dx2() * o.x2_stride * dxi1 * o.k1_stride * dxi2 * o.k2_stride;
  const double scale = 1.0 / (static_cast<double>(N1) * N2);
  const double inv_dxi = 1.0 / (dxi1 * dxi2);
  const std::size_t ncentres = kc1.size() * kc2.size();

  auto one = [&](std::size_t idx) {
    const int a = kc1[idx / kc2.size()], b = kc2[idx % kc2.size()];
    std::vector<double> dens(static_cast<std::size_t>(M1) * M2, 0.0);
    std::vector<cdouble> fold(static_cast<std::size_t>(M1) * M2);
    for (int c = 0; c < 3; ++c) {
      std::fill(fold.begin(), fold.end(), cdouble(0.0));
      for (int d1 : off1) {
        const int k1 = ((a + d1) % N1 + N1) % N1;
        const double w1 = G1[(d1 % N1 + N1) % N1];
        const int f1 = k1 % M1;
        for (int d2 : off2) {
          const int k2 = ((b + d2) % N2 + N2) % N2;
          const double w = w1 * G2[(d2 % N2 + N2) % N2];
          fold[static_cast<std::size_t>(f1) * M2 + k2 % M2] += w * spec[c][static_cast<std::size_t>(k1) * N2 + k2];
        }
      }
      detail::fft_2d(fold.data(), M1, M2, FFTW_BACKWARD);
      for (std::size_t p = 0; p < fold.size(); ++p) dens[p] += std::norm(fold[p] * scale);
    }
    const std::size_t ia = idx / kc2.size(), ib = idx % kc2.size();
    for (int i = 0; i < M1; ++i)
      for (int j = 0; j < M2; ++j) h.at(i, j, ia, ib) = dens[static_cast<std::size_t>(i) * M2 + j] * inv_dxi;
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t idx = 0; idx < ncentres; ++idx) one(idx);
  } else {
    for (std::size_t idx = 0; idx < ncentres; ++idx) one(idx);
  }
  return h;
}

}  // namespace

HusimiDensity husimi(const StateField& U, const HusimiOptions& opts) { return husimi_impl(U, opts, true); }
HusimiDensity husimi_serial(const StateField& U, const HusimiOptions& opts) { return husimi_impl(U, opts, false); }

PhaseCentroid centroid(const StateField& U) {
  const Grid2D& g = U.grid;
  const int N1 = g.N1, N2 = g.N2;
  PhaseCentroid pc;
  double m = 0.0, sx1 = 0.0, sc = 0.0, ss = 0.0;
  for (int i = 0; i < N1; ++i)
    for (int j = 0; j < N2; ++j) {
      const double w = std::norm(U.at(0, i, j)) + std::norm(U.at(1, i, j)) + std::norm(U.at(2, i, j));
      m += w;
      sx1 += w * g.x1(i);
      sc += w * std::cos(g.x2(j));
      ss += w * std::sin(g.x2(j));
    }
  if (m == 0.0) return pc;
  pc.mass = m * g.dx1() * g.dx2();
  pc.x1 = sx1 / m;
  pc.x2 = wrap_angle(std::atan2(ss, sc));
  double sk1 = 0.0, sk2 = 0.0, ms = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<cdouble> s(&U.at(c, 0, 0), &U.at(c, 0, 0) + static_cast<std::size_t>(N1) * N2);
    detail::fft_2d(s.data(), N1, N2, FFTW_FORWARD);
    for (int a = 0; a < N1; ++a)
      for (int b = 0; b < N2; ++b) {
        const double w = std::norm(s[static_cast<std::size_t>(a) * N2 + b]);
        ms += w;
        sk1 += w * g.xi1_of(Grid2D::wavenumber(a, N1));
        sk2 += w * g.xi2_of(Grid2D::wavenumber(b, N2));
      }
  }
  pc.xi1 = sk1 / ms;
  pc.xi2 = sk2 / ms;
  return pc;
}

}  // namespace rossbytrap
