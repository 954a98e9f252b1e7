#pragma once

#include <optional>
#include <vector>

#include "rossbytrap/profile.hpp"
#include "rossbytrap/symbols.hpp"

namespace rossbytrap {

/// Hamiltonian vector field of E: (∂E/∂ξ₁, ∂E/∂ξ₂, −∂E/∂x₁, −∂E/∂x₂).
struct RayRhs {
  double dx1 = 0.0;
  double dx2 = 0.0;
  double dxi1 = 0.0;
  double dxi2 = 0.0;
};

RayRhs ray_rhs(const CoriolisProfile& profile, const PhasePoint& pt,
               const AdmissibilityMargins& margins = {});
RayRhs ray_rhs_unchecked(const CoriolisProfile& profile, const PhasePoint& pt);

/// ẋ₁ = b′(ξ₂² − ξ₁² + b²)/(ξ₂² + ξ₁² + b²)², written out directly.
double x1_velocity_closed_form(const CoriolisProfile& profile, const PhasePoint& pt);

struct RayState {
  PhasePoint point;
  double time = 0.0;
  double energy_E = 0.0;
};

struct Trajectory {
  std::vector<RayState> samples;
  double dt = 0.0;              // step actually used (after halving)
  double max_energy_drift = 0.0;
  double max_xi1_drift = 0.0;   // always 0: ξ₁ is not integrated
};

struct RayOptions {
  double tol_E = 1e-9;
  int max_halvings = 10;
  /// Keep every n-th step in Trajectory::samples (the final state is always kept).
  int sample_stride = 1;
};

/// One classical RK4 step of the (x₁, x₂, ξ₂) flow at fixed ξ₁.
PhasePoint rk4_step(const CoriolisProfile& profile, const PhasePoint& pt, double h);

/// Fixed-step RK4 from pt0 to time t_end (negative t_end integrates
/// backwards). dt is halved until the energy drift is within tol_E; throws
/// ToleranceExceeded when max_halvings is exhausted.
Trajectory integrate_ray(const CoriolisProfile& profile, const PhasePoint& pt0, double t_end,
                         double dt, const RayOptions& opts = {});

enum class OrbitClass { Periodic, NearDegenerate };

struct PeriodOptions {
  double dt = 0.0;  // 0 picks a step from the local frequency scale
  double t_max = 1e4;
  double period_max = 1e3;
  double time_tol = 1e-10;
  double fixed_point_tol = 1e-13;
};

struct PeriodData {
  double period = 0.0;
  PhasePoint section_point;
  OrbitClass classification = OrbitClass::Periodic;
  bool circulating = false;
  double dt = 0.0;  // integration step used
};

/// Linearized frequency of the (x₂, ξ₂) flow at a point, from the Hessian of
/// E; returns 0 when the linearization is hyperbolic.
double linearized_frequency(const CoriolisProfile& profile, double xi1, double x2, double xi2);

/// A step size resolving the local (x₂, ξ₂) dynamics near pt.
double default_ray_step(const CoriolisProfile& profile, const PhasePoint& pt);

PeriodData find_period(const CoriolisProfile& profile, const PhasePoint& pt0,
                       const PeriodOptions& opts = {});

/// F = ∫₀^T ẋ₁ dt along one period of the (x₂, ξ₂) orbit through pt0.
/// Throws DegenerateOrbit when the orbit is classified near-degenerate.
double drift_F_time(const CoriolisProfile& profile, const PhasePoint& pt0,
                    const PeriodOptions& opts = {});
/// Same, reusing a previously computed PeriodData for pt0.
double drift_F_time(const CoriolisProfile& profile, const PhasePoint& pt0, const PeriodData& period);

struct TurningPoints {
  double x_minus = 0.0;  // unwrapped, x_minus <= x2 <= x_plus
  double x_plus = 0.0;
};

/// g(x) = b′(x)ξ₁/E − ξ₁² − b²(x); the level set {E = const} is ξ₂² = g(x₂).
double libration_function(const CoriolisProfile& profile, double xi1, double E, double x);

/// Largest interval around x2 on which g > 0. Throws NoTurningPoints when
/// g > 0 on the whole circle (circulating orbit).
TurningPoints turning_points(const CoriolisProfile& profile, double xi1, double E, double x2);

/// |F| from the turning-point integral.
double drift_F_space(const CoriolisProfile& profile, double xi1, double x2, double xi2);
/// Signed variant (sign(E) times the turning-point integral); agrees with
/// drift_F_time including sign.
double drift_F_space_signed(const CoriolisProfile& profile, double xi1, double x2, double xi2);

/// Location of the extremum of E(ξ₁, ·, 0) inside [lo, hi] with the given sign
/// (+1 maximum, −1 minimum).
double well_center(const CoriolisProfile& profile, double xi1, double lo, double hi, int sign);

/// Oriented action (1/2π)∮ξ₂ dx₂ taken along the direction of motion, for the
/// closed orbit {E(ξ₁,·,·) = E} through the well containing x2_hint. With
/// this orientation ∂A/∂E = period/2π > 0. Without a hint, the global
/// extremum of E(ξ₁,·,0) with the sign of E is used.
double action_A(const CoriolisProfile& profile, double xi1, double E,
                std::optional<double> x2_hint = std::nullopt);

/// Energy H(A, ξ₁) by inverting action_A on the well whose center lies in
/// [center_lo, center_hi]. Throws TableOutOfRange if A is not attained there.
double energy_from_action(const CoriolisProfile& profile, double xi1, double A, double center_lo,
                          double center_hi);

/// 3×3 stencil of H(A, ξ₁) around (A₀, ξ₁₀), values H[i][j] at
/// (ξ₁₀ + (i−1)h, A₀ + (j−1)δA).
struct ActionTable {
  double xi1 = 0.0, A = 0.0, h = 0.0, dA = 0.0;
  double H[3][3] = {};
  double dH_dxi1() const { return (H[2][1] - H[0][1]) / (2.0 * h); }
  double dH_dA() const { return (H[1][2] - H[1][0]) / (2.0 * dA); }
  static ActionTable build(const CoriolisProfile& profile, double xi1, double A, double center_lo,
                           double center_hi, double h, double dA);
};

/// F from action–angle variables: with A normalized by 1/2π the period is
/// 2π/∂_A H, so F = 2π ∂_{ξ₁}H / ∂_A H.
double drift_F_action(const CoriolisProfile& profile, const PhasePoint& pt);

}  // namespace rossbytrap
