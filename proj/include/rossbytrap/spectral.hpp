#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rossbytrap/profile.hpp"
#include "rossbytrap/symbols.hpp"

namespace rossbytrap {

/// Periodic collocation grid: x₁ ∈ [−L1/2, L1/2) with N1 points (the periodic
/// surrogate for ℝ), x₂ ∈ [0, 2π) with N2 points.
struct Grid2D {
  double L1 = kTwoPi * 4;
  int N1 = 0;
  int N2 = 0;
  double epsilon = 0.0;

  double dx1() const { return L1 / N1; }
  double dx2() const { return kTwoPi / N2; }
  double x1(int i) const { return -0.5 * L1 + i * dx1(); }
  double x2(int j) const { return j * dx2(); }
  /// Signed wavenumber of FFT index idx on an N-point grid; N/2 maps to −N/2.
  static int wavenumber(int idx, int N) { return idx < N / 2 ? idx : idx - N; }
  /// ξ₁ = ε·2πk₁/L1 of x₁-wavenumber k1.
  double xi1_of(int k1) const { return epsilon * kTwoPi * k1 / L1; }
  /// ξ₂ = ε·n of x₂-wavenumber n.
  double xi2_of(int n) const { return epsilon * n; }

  bool resolves() const;
  /// Throws ConfigError on malformed sizes and ResolutionError when fewer
  /// than 8 points per ε-wavelength are available (if `enforce_resolution`).
  void validate(bool enforce_resolution = true) const;
  /// Smallest power-of-two grid meeting the resolution condition with L1 = 2π·m.
  static Grid2D for_epsilon(double epsilon, int m = 4);
};

/// U = (ρ, u₁, u₂) sampled on a Grid2D; values[(c·N1 + i1)·N2 + i2].
struct StateField {
  Grid2D grid;
  std::vector<cdouble> values;
  double time = 0.0;

  StateField() = default;
  explicit StateField(const Grid2D& g);

  std::size_t index(int c, int i1, int i2) const {
    return (static_cast<std::size_t>(c) * grid.N1 + i1) * grid.N2 + i2;
  }
  cdouble& at(int c, int i1, int i2) { return values[index(c, i1, i2)]; }
  const cdouble& at(int c, int i1, int i2) const { return values[index(c, i1, i2)]; }
  /// L² norm over the box with the trapezoidal (spectrally exact) rule.
  double norm() const;
};

/// x₂ spectral differentiation matrix on N points of [0, 2π) (Nyquist mode
/// differentiated to zero). Real and antisymmetric.
Eigen::MatrixXd spectral_derivative(int N);

/// Generator A of ∂ₜU = A U for x₁-wavenumber k1, ordered (ρ, u₁, u₂) blocks
/// of size N2. A* = −A.
Eigen::MatrixXcd build_generator(const CoriolisProfile& profile, const Grid2D& grid, int k1);

/// Which eigen-branch of the per-mode generator to keep in the initial data.
/// The Rossby branch is the N2 eigenvalues of smallest modulus.
enum class BranchFilter { All, Rossby, Poincare };

struct EvolveOptions {
  BranchFilter filter = BranchFilter::All;
  /// x₁ modes carrying less than this fraction of the squared norm are dropped.
  double content_floor = 1e-26;
  /// ResolutionError if the outer quarter of either spectrum holds more than
  /// this fraction of the norm.
  double tail_tol = 1e-8;
};

/// Per-mode coefficients of U at every requested time. Eigendecompositions are
/// discarded after use, so memory is O(modes × times × 3N2).
class Evolution {
public:
  const Grid2D& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<int>& active_modes() const { return modes_; }

  /// Field at times()[j].
  StateField field(std::size_t j) const;
  /// Only the u₂ component at times()[j], row-major [i1][i2].
  std::vector<cdouble> u2(std::size_t j) const;
  /// ‖U(t_j)‖ from the mode coefficients (Parseval).
  double norm(std::size_t j) const;
  /// ‖U0‖ before branch filtering and mode truncation.
  double input_norm() const { return input_norm_; }
  /// min over modes of (smallest |λ| outside the Rossby set)/(largest |λ| inside).
  double branch_gap() const { return branch_gap_; }

private:
  friend Evolution evolve_impl(const CoriolisProfile&, const StateField&, const std::vector<double>&,
                               const EvolveOptions&, bool);
  Grid2D grid_;
  std::vector<double> times_;
  std::vector<int> modes_;  // FFT indices
  // coeffs_[m][j] = 3N2 vector of mode m at time j, scaled as the raw x₁ DFT
  std::vector<std::vector<Eigen::VectorXcd>> coeffs_;
  double input_norm_ = 0.0;
  double branch_gap_ = 0.0;
};

/// Exact propagation e^{At} per active x₁ mode, OpenMP-parallel over modes.
Evolution evolve(const CoriolisProfile& profile, const StateField& U0,
                 const std::vector<double>& times, const EvolveOptions& opts = {});
/// Single-threaded reference for evolve.
Evolution evolve_serial(const CoriolisProfile& profile, const StateField& U0,
                        const std::vector<double>& times, const EvolveOptions& opts = {});
/// Convenience: the state at one time.
StateField evolve(const CoriolisProfile& profile, const StateField& U0, double t);

/// Spectral tail fraction of U (outer quarter of the x₁ or x₂ spectrum).
double spectral_tail(const StateField& U);

struct WkbSpec {
  std::function<double(double, double)> phase;
  /// ∇S; when empty it is taken from centered differences of `phase`.
  std::function<std::array<double, 2>(double, double)> grad_phase;
  std::function<std::array<cdouble, 3>(double, double)> amplitude;
  /// Grid points with |amplitude| below support_tol·max are outside the support.
  double support_tol = 1e-12;
};

struct LagrangianSample {
  PhasePoint point;                    // (x, ∇S(x))
  double amplitude = 0.0;              // |(R⁰, U₁⁰, U₂⁰)|
  cdouble rossby_weight = 0.0;         // p⁰ᵨR⁰ + p⁰₁U₁⁰ + p⁰₂U₂⁰
};

struct WkbResult {
  StateField field;
  std::vector<LagrangianSample> cloud;
};

/// Samples (R⁰, U₁⁰, U₂⁰)e^{iS/ε}. The cloud keeps every `cloud_stride`-th
/// support point in each direction. Throws ResolutionError if |∇S|/ε exceeds
/// 3/4 of the grid Nyquist frequency on the support.
WkbResult wkb_initial(const CoriolisProfile& profile, const WkbSpec& spec, const Grid2D& grid,
                      int cloud_stride = 8);

/// Amplitude polarizations for gaussian_wkb.
enum class Polarization { Rossby, PoincarePlus, PoincareMinus, Raw };

struct GaussianWkb {
  double x1c = 0.0, x2c = kPi;
  double sigma1 = 1.0, sigma2 = 0.3;
  double xi1 = 1.0, xi2 = 0.0;  // linear phase S = ξ₁x₁ + ξ₂x₂
  Polarization polarization = Polarization::Rossby;
  std::array<cdouble, 3> raw{0.0, 0.0, 1.0};  // used with Polarization::Raw
};

/// Linear phase and a Gaussian envelope (periodized in x₂, zero where it drops
/// below 1e-30) times the chosen column of the mode matrix evaluated at (x, ∇S).
WkbSpec gaussian_wkb(const CoriolisProfile& profile, const GaussianWkb& g);

/// Smoothed indicator of [x1_lo, x1_hi] × [x2_lo, x2_hi] (or the full circle),
/// with a raised-cosine collar `collar_cells` grid cells wide outside the box.
struct RegionOmega {
  double x1_lo = -4.0, x1_hi = 4.0;
  bool full_x2 = true;
  double x2_lo = 0.0, x2_hi = kTwoPi;
  int collar_cells = 4;
  bool everything = false;  // weight 1 on the whole grid

  static RegionOmega whole() {
    RegionOmega o;
    o.everything = true;
    return o;
  }
  /// ConfigError unless the collared box keeps ≥ L1/8 from the x₁ seam.
  void validate(const Grid2D& grid) const;
  double weight(const Grid2D& grid, double x1, double x2) const;
};

/// ‖U‖_{L²(Ω)} with the smoothed indicator as weight.
double local_mass(const StateField& U, const RegionOmega& omega);
/// Same from a bare u₂ array laid out as Evolution::u2.
double local_mass_u2(const Grid2D& grid, const std::vector<cdouble>& u2, const RegionOmega& omega);

struct HusimiOptions {
  int x1_stride = 1, x2_stride = 1;  // centres: every stride-th grid point
  int k1_stride = 1, k2_stride = 1;  // frequencies: every stride-th lattice wavenumber
  // wavenumber band (inclusive); defaults cover the whole lattice
  std::optional<std::pair<int, int>> k1_band, k2_band;
};

/// Husimi density h(x, ξ) = (2πε)^{-2}|⟨φ_{x,ξ}, U⟩|² summed over components,
/// with φ the normalized Gaussian window of width √ε. On the full lattice
/// Σ h·Δx·Δξ = ‖U‖² exactly.
struct HusimiDensity {
  std::vector<double> x1, x2, xi1, xi2;
  std::vector<double> density;  // [i1][i2][k1][k2]
  double cell_volume = 0.0;     // Δx₁Δx₂Δξ₁Δξ₂ of the sampled (strided) lattice
  double total() const;
  double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return density[((a * x2.size() + b) * xi1.size() + c) * xi2.size() + d];
  }
  double at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return density[((a * x2.size() + b) * xi1.size() + c) * xi2.size() + d];
  }
};

HusimiDensity husimi(const StateField& U, const HusimiOptions& opts = {});
HusimiDensity husimi_serial(const StateField& U, const HusimiOptions& opts = {});

/// Phase-space centroid from first moments: ⟨x⟩ and ⟨−iε∇⟩. x₂ is the
/// circular mean in [0, 2π).
struct PhaseCentroid {
  double x1 = 0.0, x2 = 0.0, xi1 = 0.0, xi2 = 0.0;
  double mass = 0.0;  // ‖U‖²
};
PhaseCentroid centroid(const StateField& U);

/// Forward DFT along x₁ in place (unnormalized); index i1 becomes the FFT index.
void fft_x1(StateField& U);
/// Inverse of fft_x1 including the 1/N1 factor.
void ifft_x1(StateField& U);

}  // namespace rossbytrap
