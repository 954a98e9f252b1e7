#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

#include "rossbytrap/profile.hpp"

namespace rossbytrap {

using cdouble = std::complex<double>;
using Matrix3c = Eigen::Matrix<cdouble, 3, 3>;

/// A point (x₁, x₂, ξ₁, ξ₂) of T*(ℝ×𝕋). x₂ is kept unwrapped; every profile
/// lookup reduces it modulo 2π.
struct PhasePoint {
  double x1 = 0.0;
  double x2 = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
};

/// Distances below which a phase point counts as touching {ξ₁ = 0} or
/// {ξ₂² + b² = 0}. The mode matrix is singular on both sets.
struct AdmissibilityMargins {
  double xi1 = 1e-3;
  double b = 1e-3;
};

bool admissible(const CoriolisProfile& profile, const PhasePoint& pt,
                const AdmissibilityMargins& margins = {});

/// Throws Inadmissible with a description of the violated condition.
void require_admissible(const CoriolisProfile& profile, const PhasePoint& pt,
                        const AdmissibilityMargins& margins = {});

/// The three real roots of τ³ − (ξ₁²+ξ₂²+b²)τ + ε b′ξ₁ = 0, which is the
/// dispersion relation τ² − ξ₁² − ξ₂² − b² + ε b′ξ₁/τ = 0 cleared of τ.
struct DispersionRoots {
  double tau_plus = 0.0;
  double tau_minus = 0.0;
  double tau_zero = 0.0;
  double epsilon = 0.0;
  std::array<double, 3> residuals{};  // (τ₋, τ₀, τ₊) order
};

/// Cubic residual τ³ − Kτ + c, with K = ξ₁²+ξ₂²+b², c = ε b′ξ₁.
double dispersion_residual(const CoriolisProfile& profile, const PhasePoint& pt, double epsilon,
                           double tau);

DispersionRoots dispersion_roots(const CoriolisProfile& profile, const PhasePoint& pt,
                                 double epsilon, const AdmissibilityMargins& margins = {});

/// Leading-order mode matrix. Columns of q are the symbols of the
/// reconstruction operators for the (−, 0, +) branches; p = q⁻¹ holds the
/// projector symbols as rows, in the same order.
struct ModeMatrix {
  Matrix3c q;
  Matrix3c p;
  double jacobian = 0.0;
};

enum class Branch { Minus = 0, Zero = 1, Plus = 2 };

ModeMatrix mode_matrix(const CoriolisProfile& profile, const PhasePoint& pt,
                       const AdmissibilityMargins& margins = {});

/// Closed form 2(ξ₁²+ξ₂²+b²)^{3/2} / ((ξ₂²+b²)|ξ₁|).
double jacobian_closed_form(const CoriolisProfile& profile, const PhasePoint& pt);

/// Rossby projector row (p_ρ, p₁, p₂) from its closed form.
std::array<cdouble, 3> rossby_projector_row(const CoriolisProfile& profile, const PhasePoint& pt);

/// E(ξ₁, x₂, ξ₂) = b′(x₂) ξ₁ / (ξ₂² + ξ₁² + b²(x₂)), the Rossby Hamiltonian
/// (the ε→0 limit of τ₀/ε).
double rossby_symbol_E(const CoriolisProfile& profile, const PhasePoint& pt,
                       const AdmissibilityMargins& margins = {});

/// Same as rossby_symbol_E without the admissibility check; used in inner
/// loops once the caller has validated the point.
double rossby_energy(const CoriolisProfile& profile, double xi1, double x2, double xi2);

}  // namespace rossbytrap
