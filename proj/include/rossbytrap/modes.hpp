#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rossbytrap/spectral.hpp"

namespace rossbytrap {

/// Symbol a(x₂, ξ₂, ξ₁).
using Symbol = std::function<cdouble(double x2, double xi2, double xi1)>;

/// Dense N2×N2 left quantization of a symbol on x₁-mode k1.
struct QuantizedSymbol {
  int k1 = 0;
  Eigen::MatrixXcd matrix;
  std::string symbol_id;
  double epsilon = 0.0;
};

/// (Op a)u(x_j) = N⁻¹ Σₙ a(x_j, εn, ξ₁) ûₙ e^{inx_j}, n ∈ [−N/2, N/2); the
/// Nyquist row uses the mean of a(x, ±εN/2). Throws ResolutionError if the
/// x₂-dependence of the symbol is not resolved by the grid.
QuantizedSymbol quantize_symbol(const Symbol& symbol, int k1, const Grid2D& grid, std::string id = {});

/// Same operator applied to one vector without forming the matrix, O(N2²).
Eigen::VectorXcd apply_symbol(const Symbol& symbol, double xi1, const Grid2D& grid, const Eigen::VectorXcd& u);

/// Scalar fields u₂ʲ on the grid, row-major [i1][i2], j = (−, 0, +).
struct ModeFields {
  Grid2D grid;
  std::array<std::vector<cdouble>, 3> u2;
  double norm(int j) const;
};

struct ModeOptions {
  AdmissibilityMargins margins{};
  /// Largest tolerated fraction of ‖U‖² in the inadmissible set.
  double max_defect = 1e-3;
  /// x₁-modes holding less than this fraction of ‖U‖² are skipped.
  double content_floor = 1e-28;
};

/// Fraction of ‖U‖² in the inadmissible set: x₁-modes with |ξ₁| below the
/// margin plus, when b has zeros, the x₂-Husimi mass of {|b| < δ, |ξ₂| < δ}.
double admissibility_defect(const CoriolisProfile& profile, const StateField& U, const ModeOptions& opts = {});

/// u₂ʲ = Pᵨʲρ + P₁ʲu₁ + P₂ʲu₂ with the quantized rows of p = q⁻¹.
/// AdmissibilityError when admissibility_defect exceeds max_defect.
ModeFields project_modes(const CoriolisProfile& profile, const StateField& U, const ModeOptions& opts = {});

/// 𝐐ʲu₂ⱼ. For j = 0 the column is evaluated at τ₀ = εb′ξ₁/(ξ₁²+ξ₂²+b²)
/// instead of 0; the Poincaré columns use τ = ±√(ξ₁²+ξ₂²+b²).
StateField reconstruct_mode(const CoriolisProfile& profile, const Grid2D& grid, const std::vector<cdouble>& u2j,
                            Branch j, const ModeOptions& opts = {});

/// Σⱼ 𝐐ʲu₂ⱼ.
StateField reconstruct(const CoriolisProfile& profile, const ModeFields& modes, const ModeOptions& opts = {});

/// Scalar Rossby operator on x₁-mode k1: T₀ = εξ₁ H̃⁻¹ b′ with
/// H̃ = ξ₁² − ε²D² + b², D the x₂ spectral derivative. Eliminating ρ and u₁
/// from the per-mode system gives τ(τ² − H̃)u₂ = εξ₁b′u₂ exactly, so T₀ is the
/// Rossby branch up to O(τ²) = O(ε²).
Eigen::MatrixXd scalar_rossby_operator(const CoriolisProfile& profile, const Grid2D& grid, int k1);

/// u₂(t) = e^{iT₀t/ε}u₂(0) per x₁-mode, at PDE times `times`; layout as ModeFields.
std::vector<std::vector<cdouble>> scalar_rossby_evolve(const CoriolisProfile& profile, const Grid2D& grid,
                                                       const std::vector<cdouble>& u2, const std::vector<double>& times,
                                                       double content_floor = 1e-28);

/// Quantized H₂ = (−iε∂₂)² + b² on N2 points (ξ₁-independent).
Eigen::MatrixXd quantized_H2(const CoriolisProfile& profile, int N2, double epsilon);

/// A single potential well of b² on the circle.
struct Well {
  double x_min = 0.0;    // location of the minimum of b²
  double v_min = 0.0;    // b²(x_min)
  double barrier = 0.0;  // lower of the two neighbouring maxima of b²
};

/// Wells of b²; each is a local minimum with its lower enclosing barrier.
std::vector<Well> wells_of(const CoriolisProfile& profile);

/// (1/π)∫√(λ − b²) dx₂ between the turning points of the well. WindowError
/// unless v_min < λ < barrier.
double well_action(const CoriolisProfile& profile, const Well& well, double lambda);

struct SpectrumRow {
  int k = 0;
  double lambda_direct = 0.0;
  double lambda_bs = 0.0;
  double diff() const { return lambda_direct - lambda_bs; }
};

struct SpectrumTable {
  std::string branch = "plus";
  double xi1 = 0.0;
  double epsilon = 0.0;
  std::vector<SpectrumRow> rows;
};

/// λ_BS solves well_action(λ) = (k+½)ε; λ_direct are the ascending
/// eigenvalues of quantized_H2 matched by index. WindowError if a level
/// leaves the well or b² has more than one well below the window top.
SpectrumTable bohr_sommerfeld_levels(const CoriolisProfile& profile, double xi1, double epsilon, int k_lo, int k_hi,
                                     const std::string& branch = "plus", int N2 = 0);

/// Per-k ε-shift fit across an ε-sequence of tables with the same k-window:
/// diff_k(ε) ≈ εμ_k + c_kε². `max_residual[i]` is max_k |diff_k(εᵢ) − εᵢμ_k|.
struct ShiftFit {
  std::vector<int> k;
  std::vector<double> mu;
  std::vector<double> epsilons;
  std::vector<double> max_raw;       // max_k |diff_k|
  std::vector<double> max_residual;  // after removing εμ_k
  double slope_raw = 0.0;
  double slope_residual = 0.0;       // log-log slope of max_residual vs ε
};
ShiftFit fit_bs_shift(const std::vector<SpectrumTable>& tables);

struct ResidualEntry {
  int index = 0;
  double lambda = 0.0;    // eigenvalue of T₊
  double residual = 0.0;  // ‖H(λ)ψ‖/‖ψ‖
  double off_spectrum = 0.0;  // same with λ + 0.1
};

struct ResidualReport {
  double xi1 = 0.0;
  double epsilon = 0.0;
  std::vector<ResidualEntry> entries;
};

/// Eigenpairs of T₊ = √(H₂ + ξ₁²) (discrete functional calculus) and the
/// dense application of Op(λ² − ξ₁² − ξ₂² − b² + εb′ξ₁/λ) to them.
ResidualReport scalar_residual_check(const CoriolisProfile& profile, double xi1, double epsilon, int n_pairs = 5,
                                     int N2 = 0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rossbytrap
