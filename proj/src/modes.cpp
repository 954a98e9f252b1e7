#include "rossbytrap/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "fft.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap {

namespace {

// ξ₂-lattice value of FFT index n on N points; Nyquist handled by callers.
int lattice(int idx, int N) { return Grid2D::wavenumber(idx, N); }

Eigen::VectorXcd fft_vec(Eigen::VectorXcd v, int sign) {
  detail::fft_many(v.data(), static_cast<int>(v.size()), 1, 1, 1, sign);
  return v;
}

// Left quantization kernel shared by apply_symbol and the multi-row
// projectors: out_r(x_j) = N⁻¹ Σₙ Σ_c a_rc(x_j, εn) û_c(n) e^{inx_j}.
// `eval(x2, xi2, a)` fills a(r, c); invalid points return false (no contribution).
template <int R, int C, class Eval>
std::array<Eigen::VectorXcd, R> left_apply(const Grid2D& g, const std::array<Eigen::VectorXcd, C>& uhat, Eval eval) {
  const int N = g.N2;
  std::array<Eigen::VectorXcd, R> out;
  for (auto& o : out) o = Eigen::VectorXcd::Zero(N);
  Eigen::Matrix<cdouble, R, C> a, a2;
  for (int j = 0; j < N; ++j) {
    const double x = g.x2(j);
    for (int idx = 0; idx < N; ++idx) {
      const int n = lattice(idx, N);
      bool ok;
      if (n == -N / 2) {
        // Nyquist: average the symbol over ±εN/2
        const bool ok1 = eval(x, g.xi2_of(n), a);
        const bool ok2 = eval(x, -g.xi2_of(n), a2);
        ok = ok1 && ok2;
        if (ok) a = 0.5 * (a + a2);
      } else {
        ok = eval(x, g.xi2_of(n), a);
      }
      if (!ok) continue;
      const cdouble e = std::polar(1.0, n * x);
      for (int r = 0; r < R; ++r) {
        cdouble s = 0.0;
        for (int c = 0; c < C; ++c) s += a(r, c) * uhat[c](idx);
        out[r](j) += s * e;
      }
    }
  }
  for (auto& o : out) o /= static_cast<double>(N);
  return out;
}

std::vector<int> content_modes(const std::vector<double>& mass, double floor) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  std::vector<int> out;
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (total > 0.0 && mass[k] > floor * total) out.push_back(static_cast<int>(k));
  return out;
}

// x₁-FFT of a scalar [i1][i2] field.
std::vector<cdouble> fft_rows(std::vector<cdouble> f, const Grid2D& g, int sign) {
  detail::fft_many(f.data(), g.N1, g.N2, g.N2, 1, sign);
  if (sign == FFTW_BACKWARD)
    for (auto& v : f) v /= static_cast<double>(g.N1);
  return f;
}

}  // namespace

// ---------------------------------------------------------------- quantization

QuantizedSymbol quantize_symbol(const Symbol& symbol, int k1, const Grid2D& grid, std::string id) {
  grid.validate(false);
  const int N = grid.N2;
  const double xi1 = grid.xi1_of(k1);
  Eigen::MatrixXcd A(N, N);  // A(j, idx) = a(x_j, εn)
  for (int j = 0; j < N; ++j)
    for (int idx = 0; idx < N; ++idx) {
      const int n = lattice(idx, N);
      const double x = grid.x2(j);
      A(j, idx) = n == -N / 2 ? 0.5 * (symbol(x, grid.xi2_of(n), xi1) + symbol(x, -grid.xi2_of(n), xi1))
                              : symbol(x, grid.xi2_of(n), xi1);
    }
  // the x₂-dependence of every column must be resolved
  for (int idx = 0; idx < N; ++idx) {
    const Eigen::VectorXcd col = fft_vec(A.col(idx), FFTW_FORWARD);
    double tail = 0.0, tot = 0.0;
    for (int m = 0; m < N; ++m) {
      tot += std::norm(col(m));
      if (4 * std::abs(lattice(m, N)) > 3 * (N / 2)) tail += std::norm(col(m));
    }
    if (tot > 0.0 && tail > 1e-16 * tot) {
      std::ostringstream os;
      os << "symbol '" << id << "' varies below the grid scale (x2-spectral tail " << std::sqrt(tail / tot) << ")";
      throw ResolutionError(os.str());
    }
  }
  Eigen::MatrixXcd E(N, N);
  for (int j = 0; j < N; ++j)
    for (int idx = 0; idx < N; ++idx) E(j, idx) = std::polar(1.0, lattice(idx, N) * grid.x2(j));
  QuantizedSymbol q;
  q.k1 = k1;
  q.symbol_id = std::move(id);
  q.epsilon = grid.epsilon;
  q.matrix = (A.cwiseProduct(E) * E.adjoint()) / static_cast<double>(N);
  return q;
}

Eigen::VectorXcd apply_symbol(const Symbol& symbol, double xi1, const Grid2D& grid, const Eigen::VectorXcd& u) {
  if (u.size() != grid.N2) throw ConfigError("apply_symbol: vector length differs from N2");
  const std::array<Eigen::VectorXcd, 1> uhat{fft_vec(u, FFTW_FORWARD)};
  return left_apply<1, 1>(grid, uhat, [&](double x, double xi2, Eigen::Matrix<cdouble, 1, 1>& a) {
    a(0, 0) = symbol(x, xi2, xi1);
    return true;
  })[0];
}

// ---------------------------------------------------------------- projection

double ModeFields::norm(int j) const {
  double s = 0.0;
  for (const auto& v : u2.at(j)) s += std::norm(v);
  return std::sqrt(s * grid.dx1() * grid.dx2());
}

double admissibility_defect(const CoriolisProfile& profile, const StateField& U, const ModeOptions& opts) {
  const Grid2D& g = U.grid;
  StateField S = U;
  fft_x1(S);
  const int N1 = g.N1, N2 = g.N2;
  double total = 0.0, bad = 0.0;
  const bool b_vanishes = !profile.zeros_of_b().empty();
  // x₂ Husimi window (width √ε), normalized so that Σ_kc G² = 1
  std::vector<double> G(N2);
  double gs = 0.0;
  for (int a = 0; a < N2; ++a) {
    const double d = g.xi2_of(lattice(a, N2));
    G[a] = std::exp(-0.5 * d * d / g.epsilon);
    gs += G[a] * G[a];
  }
  for (auto& v : G) v /= std::sqrt(gs);
  std::vector<int> bad_kc;
  for (int a = 0; a < N2; ++a)
    if (std::fabs(g.xi2_of(lattice(a, N2))) < opts.margins.b) bad_kc.push_back(a);
  std::vector<int> bad_x;
  for (int j = 0; j < N2; ++j)
    if (std::fabs(profile.b(g.x2(j))) < opts.margins.b) bad_x.push_back(j);

  for (int k = 0; k < N1; ++k) {
    double mk = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < N2; ++j) mk += std::norm(S.at(c, k, j));
    total += mk;
    if (mk == 0.0) continue;
    if (std::fabs(g.xi1_of(lattice(k, N1))) < opts.margins.xi1) {
      bad += mk;
      continue;
    }
    if (!b_vanishes || bad_x.empty() || bad_kc.empty()) continue;
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXcd v(N2);
      for (int j = 0; j < N2; ++j) v(j) = S.at(c, k, j);
      const Eigen::VectorXcd vh = fft_vec(v, FFTW_FORWARD);
      for (int kc : bad_kc) {
        Eigen::VectorXcd w(N2);
        for (int a = 0; a < N2; ++a) w(a) = vh(a) * G[((a - kc) % N2 + N2) % N2];
        const Eigen::VectorXcd cx = fft_vec(w, FFTW_BACKWARD) / static_cast<double>(N2);
        for (int j : bad_x) bad += std::norm(cx(j));
      }
    }
  }
  return total > 0.0 ? bad / total : 0.0;
}

namespace {

void require_admissible_field(const CoriolisProfile& profile, const StateField& U, const ModeOptions& opts) {
  const double d = admissibility_defect(profile, U, opts);
  if (d > opts.max_defect) {
    std::ostringstream os;
    os << "fraction " << d << " of the squared norm lies in the inadmissible set (limit " << opts.max_defect << ")";
    throw AdmissibilityError(os.str());
  }
}

}  // namespace

ModeFields project_modes(const CoriolisProfile& profile, const StateField& U, const ModeOptions& opts) {
  require_admissible_field(profile, U, opts);
  const Grid2D& g = U.grid;
  const int N1 = g.N1, N2 = g.N2;
  StateField S = U;
  fft_x1(S);
  std::vector<double> mass(N1, 0.0);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < N1; ++k)
      for (int j = 0; j < N2; ++j) mass[k] += std::norm(S.at(c, k, j));
  const std::vector<int> modes = content_modes(mass, opts.content_floor);

  ModeFields out;
  out.grid = g;
  for (auto& f : out.u2) f.assign(static_cast<std::size_t>(N1) * N2, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int k = modes[m];
    const double xi1 = g.xi1_of(lattice(k, N1));
    if (std::fabs(xi1) < opts.margins.xi1) continue;
    std::array<Eigen::VectorXcd, 3> uhat;
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXcd v(N2);
      for (int j = 0; j < N2; ++j) v(j) = S.at(c, k, j);
      uhat[c] = fft_vec(v, FFTW_FORWARD);
    }
    const auto res = left_apply<3, 3>(g, uhat, [&](double x, double xi2, Eigen::Matrix<cdouble, 3, 3>& a) {
      const PhasePoint pt{0.0, x, xi1, xi2};
      if (!admissible(profile, pt, opts.margins)) return false;
      a = mode_matrix(profile, pt, opts.margins).p;
      return true;
    });
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < N2; ++j) out.u2[r][static_cast<std::size_t>(k) * N2 + j] = res[r](j);
  }
  for (auto& f : out.u2) f = fft_rows(std::move(f), g, FFTW_BACKWARD);
  return out;
}

StateField reconstruct_mode(const CoriolisProfile& profile, const Grid2D& g, const std::vector<cdouble>& u2j,
                            Branch branch, const ModeOptions& opts) {
  const int N1 = g.N1, N2 = g.N2;
  if (u2j.size() != static_cast<std::size_t>(N1) * N2) throw ConfigError("reconstruct_mode: field size mismatch");
  StateField probe(g);
  std::copy(u2j.begin(), u2j.end(), probe.values.begin() + 2 * static_cast<std::size_t>(N1) * N2);
  require_admissible_field(profile, probe, opts);

  const std::vector<cdouble> spec = fft_rows(u2j, g, FFTW_FORWARD);
  std::vector<double> mass(N1, 0.0);
  for (int k = 0; k < N1; ++k)
    for (int j = 0; j < N2; ++j) mass[k] += std::norm(spec[static_cast<std::size_t>(k) * N2 + j]);
  const std::vector<int> modes = content_modes(mass, opts.content_floor);

  StateField out(g);
  const double eps = g.epsilon;
  const cdouble I(0.0, 1.0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int k = modes[m];
    const double xi1 = g.xi1_of(lattice(k, N1));
    if (std::fabs(xi1) < opts.margins.xi1) continue;
    Eigen::VectorXcd v(N2);
    for (int j = 0; j < N2; ++j) v(j) = spec[static_cast<std::size_t>(k) * N2 + j];
    const std::array<Eigen::VectorXcd, 1> uhat{fft_vec(v, FFTW_FORWARD)};
    const auto res = left_apply<2, 1>(g, uhat, [&](double x, double xi2, Eigen::Matrix<cdouble, 2, 1>& a) {
      const PhasePoint pt{0.0, x, xi1, xi2};
      if (!admissible(profile, pt, opts.margins)) return false;
      if (branch == Branch::Zero) {
        const ProfileValue bv = profile.eval(x);
        const double K = xi1 * xi1 + xi2 * xi2 + bv.b * bv.b;
        const double tau = eps * bv.db * xi1 / K;
        const double den = tau * tau - xi1 * xi1;
        a(0, 0) = (-xi2 * tau + I * xi1 * bv.b) / den;
        a(1, 0) = (xi1 * xi2 - I * bv.b * tau) / den;
      } else {
        const ModeMatrix mm = mode_matrix(profile, pt, opts.margins);
        const int col = static_cast<int>(branch);
        a(0, 0) = mm.q(0, col);
        a(1, 0) = mm.q(1, col);
      }
      return true;
    });
    for (int j = 0; j < N2; ++j) {
      out.at(0, k, j) = res[0](j);
      out.at(1, k, j) = res[1](j);
      out.at(2, k, j) = v(j);
    }
  }
  ifft_x1(out);
  return out;
}

StateField reconstruct(const CoriolisProfile& profile, const ModeFields& modes, const ModeOptions& opts) {
  StateField sum(modes.grid);
  for (int j = 0; j < 3; ++j) {
    const StateField part = reconstruct_mode(profile, modes.grid, modes.u2[j], static_cast<Branch>(j), opts);
    for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += part.values[i];
  }
  return sum;
}

// ---------------------------------------------------------------- scalar Rossby

Eigen::MatrixXd scalar_rossby_operator(const CoriolisProfile& profile, const Grid2D& g, int k1) {
  const int N = g.N2;
  const double xi1 = g.xi1_of(k1), eps = g.epsilon;
  const Eigen::MatrixXd D = spectral_derivative(N);
  Eigen::MatrixXd Ht = -eps * eps * D * D;
  Eigen::VectorXd bp(N);
  for (int j = 0; j < N; ++j) {
    const ProfileValue v = profile.eval(g.x2(j));
    Ht(j, j) += xi1 * xi1 + v.b * v.b;
    bp(j) = v.db;
  }
  return eps * xi1 * Ht.llt().solve(Eigen::MatrixXd(bp.asDiagonal()));
}

std::vector<std::vector<cdouble>> scalar_rossby_evolve(const CoriolisProfile& profile, const Grid2D& g,
                                                       const std::vector<cdouble>& u2,
                                                       const std::vector<double>& times, double content_floor) {
  const int N1 = g.N1, N = g.N2;
  if (u2.size() != static_cast<std::size_t>(N1) * N) throw ConfigError("scalar_rossby_evolve: field size mismatch");
  const std::vector<cdouble> spec = fft_rows(u2, g, FFTW_FORWARD);
  std::vector<double> mass(N1, 0.0);
  for (int k = 0; k < N1; ++k)
    for (int j = 0; j < N; ++j) mass[k] += std::norm(spec[static_cast<std::size_t>(k) * N + j]);
  const std::vector<int> modes = content_modes(mass, content_floor);
  std::vector<std::vector<cdouble>> out(times.size(), std::vector<cdouble>(static_cast<std::size_t>(N1) * N, 0.0));
  const double eps = g.epsilon;
  const Eigen::MatrixXd D = spectral_derivative(N);
  const Eigen::MatrixXd D2 = D * D;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int k = modes[m];
    const double xi1 = g.xi1_of(lattice(k, N1));
    // T₀ = L⁻ᵀ S Lᵀ with H̃ = LLᵀ and S = εξ₁ L⁻¹ b′ L⁻ᵀ symmetric
    Eigen::MatrixXd Ht = -eps * eps * D2;
    Eigen::VectorXd bp(N);
    for (int j = 0; j < N; ++j) {
      const ProfileValue v = profile.eval(g.x2(j));
      Ht(j, j) += xi1 * xi1 + v.b * v.b;
      bp(j) = v.db;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(Ht);
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(N, N));
    const Eigen::MatrixXd Sm = eps * xi1 * Linv * bp.asDiagonal() * Linv.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sm + Sm.transpose()));
    Eigen::VectorXcd v(N);
    for (int j = 0; j < N; ++j) v(j) = spec[static_cast<std::size_t>(k) * N + j];
    const Eigen::VectorXcd c = es.eigenvectors().transpose().cast<cdouble>() * (L.transpose().cast<cdouble>() * v);
    for (std::size_t t = 0; t < times.size(); ++t) {
      Eigen::VectorXcd ph(N);
      for (int r = 0; r < N; ++r) ph(r) = c(r) * std::polar(1.0, es.eigenvalues()(r) * times[t] / eps);
      const Eigen::VectorXcd w = Linv.transpose().cast<cdouble>() * (es.eigenvectors().cast<cdouble>() * ph);
      for (int j = 0; j < N; ++j) out[t][static_cast<std::size_t>(k) * N + j] = w(j);
    }
  }
  for (auto& f : out) f = fft_rows(std::move(f), g, FFTW_BACKWARD);
  return out;
}

// ---------------------------------------------------------------- Bohr–Sommerfeld

Eigen::MatrixXd quantized_H2(const CoriolisProfile& profile, int N2, double epsilon) {
  Grid2D g;
  g.L1 = kTwoPi;
  g.N1 = 4;
  g.N2 = N2;
  g.epsilon = epsilon;
  const auto q = quantize_symbol(
      [&profile](double x2, double xi2, double) {
        const double b = profile.b(x2);
        return cdouble(xi2 * xi2 + b * b, 0.0);
      },
      1, g, "H2");
  const Eigen::MatrixXd H = q.matrix.real();
  return 0.5 * (H + H.transpose());
}

std::vector<Well> wells_of(const CoriolisProfile& profile) {
  const int n = 4096;
  auto V = [&](double x) {
    const double b = profile.b(x);
    return b * b;
  };
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = V(kTwoPi * i / n);
  std::vector<double> mins, maxs;
  for (int i = 0; i < n; ++i) {
    const double l = v[(i + n - 1) % n], c = v[i], r = v[(i + 1) % n];
    const double x = kTwoPi * i / n, h = kTwoPi / n;
    if (c < l && c <= r) {
      auto res = boost::math::tools::brent_find_minima(V, x - h, x + h, 50);
      mins.push_back(wrap_angle(res.first));
    } else if (c > l && c >= r) {
      auto res = boost::math::tools::brent_find_minima([&](double y) { return -V(y); }, x - h, x + h, 50);
      maxs.push_back(wrap_angle(res.first));
    }
  }
  std::vector<Well> out;
  if (maxs.empty()) return out;  // constant |b|: no well
  std::sort(maxs.begin(), maxs.end());
  for (double xm : mins) {
    // neighbouring maxima on either side on the circle
    auto it = std::upper_bound(maxs.begin(), maxs.end(), xm);
    const double right = it == maxs.end() ? maxs.front() : *it;
    const double left = it == maxs.begin() ? maxs.back() : *(it - 1);
    out.push_back({xm, V(xm), std::min(V(left), V(right))});
  }
  return out;
}

namespace {

// Turning point of b² = λ between x_from (inside, b² < λ) and the first point
// in direction dir where b² ≥ λ.
double turning_point(const CoriolisProfile& profile, double x_from, int dir, double lambda) {
  auto f = [&](double x) {
    const double b = profile.b(x);
    return b * b - lambda;
  };
  double a = x_from, step = kTwoPi / 512;
  double b = a + dir * step;
  int guard = 0;
  while (f(b) < 0.0) {
    a = b;
    b += dir * step;
    if (++guard > 1024) throw WindowError("no turning point: level is above every barrier");
  }
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(f, std::min(a, b), std::max(a, b), boost::math::tools::eps_tolerance<double>(50), it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

double well_action(const CoriolisProfile& profile, const Well& w, double lambda) {
  if (!(lambda > w.v_min) || !(lambda < w.barrier)) {
    std::ostringstream os;
    os << "level " << lambda << " outside the well window (" << w.v_min << ", " << w.barrier << ")";
    throw WindowError(os.str());
  }
  const double xl = turning_point(profile, w.x_min, -1, lambda);
  const double xr = turning_point(profile, w.x_min, +1, lambda);
  boost::math::quadrature::tanh_sinh<double> rule;
  const double I = rule.integrate(
      [&](double x) {
        const double b = profile.b(x);
        return std::sqrt(std::max(0.0, lambda - b * b));
      },
      xl, xr);
  return I / kPi;
}

SpectrumTable bohr_sommerfeld_levels(const CoriolisProfile& profile, double xi1, double epsilon, int k_lo, int k_hi,
                                     const std::string& branch, int N2) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (k_lo < 0 || k_hi < k_lo) throw ConfigError("k window must satisfy 0 <= k_lo <= k_hi");
  if (branch != "plus" && branch != "minus") throw ConfigError("branch must be plus or minus");
  if (N2 <= 0) N2 = Grid2D::for_epsilon(epsilon).N2;
  const auto wells = wells_of(profile);
  if (wells.empty()) throw WindowError("b^2 has no well");
  const auto deepest = *std::min_element(wells.begin(), wells.end(),
                                         [](const Well& a, const Well& b) { return a.v_min < b.v_min; });

  SpectrumTable t;
  t.branch = branch;
  t.xi1 = xi1;
  t.epsilon = epsilon;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double target = (k + 0.5) * epsilon;
    const double top = deepest.barrier * (1.0 - 1e-12);
    if (well_action(profile, deepest, top) <= target) {
      std::ostringstream os;
      os << "level k=" << k << " lies above the barrier " << deepest.barrier;
      throw WindowError(os.str());
    }
    auto f = [&](double lam) { return well_action(profile, deepest, lam) - target; };
    boost::uintmax_t it = 200;
    const double lo = deepest.v_min + 1e-15 * std::max(1.0, deepest.v_min);
    auto r = boost::math::tools::toms748_solve(f, lo, top, -target, f(top),
                                               boost::math::tools::eps_tolerance<double>(50), it);
    t.rows.push_back({k, 0.0, 0.5 * (r.first + r.second)});
  }
  const double window_top = t.rows.back().lambda_bs;
  int n_wells = 0;
  for (const auto& w : wells)
    if (w.v_min < window_top) ++n_wells;
  if (n_wells > 1) throw WindowError("the energy window spans more than one well of b^2");

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quantized_H2(profile, N2, epsilon),
                                                           Eigen::EigenvaluesOnly);
  for (auto& row : t.rows) {
    if (row.k >= N2) throw WindowError("k exceeds the number of grid eigenvalues");
    row.lambda_direct = es.eigenvalues()(row.k);
  }
  return t;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw FitFailure("need at least two points for a slope");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw FitFailure("log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

ShiftFit fit_bs_shift(const std::vector<SpectrumTable>& tables) {
  if (tables.size() < 3) throw FitFailure("the shift fit needs at least three epsilons");
  ShiftFit f;
  const std::size_t nk = tables.front().rows.size();
  for (const auto& t : tables) {
    if (t.rows.size() != nk) throw FitFailure("tables have different k windows");
    f.epsilons.push_back(t.epsilon);
  }
  f.max_raw.assign(tables.size(), 0.0);
  f.max_residual.assign(tables.size(), 0.0);
  for (std::size_t r = 0; r < nk; ++r) {
    // least squares for diff = με + cε²
    Eigen::MatrixXd A(tables.size(), 2);
    Eigen::VectorXd y(tables.size());
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const double e = tables[i].epsilon;
      A(i, 0) = e;
      A(i, 1) = e * e;
      y(i) = tables[i].rows[r].diff();
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    f.k.push_back(tables.front().rows[r].k);
    f.mu.push_back(c(0));
    for (std::size_t i = 0; i < tables.size(); ++i) {
      f.max_raw[i] = std::max(f.max_raw[i], std::fabs(y(i)));
      f.max_residual[i] = std::max(f.max_residual[i], std::fabs(y(i) - c(0) * tables[i].epsilon));
    }
  }
  f.slope_raw = loglog_slope(f.epsilons, f.max_raw);
  f.slope_residual = loglog_slope(f.epsilons, f.max_residual);
  return f;
}

ResidualReport scalar_residual_check(const CoriolisProfile& profile, double xi1, double epsilon, int n_pairs, int N2) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (N2 <= 0) N2 = Grid2D::for_epsilon(epsilon).N2;
  if (n_pairs < 1 || n_pairs > N2) throw ConfigError("n_pairs out of range");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quantized_H2(profile, N2, epsilon));
  Grid2D g;
  g.L1 = kTwoPi;
  g.N1 = 4;
  g.N2 = N2;
  g.epsilon = epsilon;
  ResidualReport rep;
  rep.xi1 = xi1;
  rep.epsilon = epsilon;
  auto residual = [&](double lam, const Eigen::VectorXcd& psi) {
    const Symbol h = [&](double x2, double xi2, double x1i) {
      const ProfileValue v = profile.eval(x2);
      return cdouble(lam * lam - x1i * x1i - xi2 * xi2 - v.b * v.b + epsilon * v.db * x1i / lam, 0.0);
    };
    return apply_symbol(h, xi1, g, psi).norm() / psi.norm();
  };
  for (int i = 0; i < n_pairs; ++i) {
    const double lam = std::sqrt(es.eigenvalues()(i) + xi1 * xi1);
    const Eigen::VectorXcd psi = es.eigenvectors().col(i).cast<cdouble>();
    rep.entries.push_back({i, lam, residual(lam, psi), residual(lam + 0.1, psi)});
  }
  return rep;
}

}  // namespace rossbytrap
