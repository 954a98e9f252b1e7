#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rossbytrap/profile.hpp"
#include "rossbytrap/rays.hpp"

namespace rossbytrap {

/// A point of Λ = {F = 0}: the ξ₁ at which the drift of the (x₂, ξ₂) orbit
/// through (x2, xi2) vanishes.
struct LambdaPoint {
  double x2 = 0.0;
  double xi2 = 0.0;
  double xi1_root = 0.0;
  double F_residual = 0.0;  // |F| re-evaluated by the turning-point integral
  double F_time_residual = std::numeric_limits<double>::quiet_NaN();  // |F| by time integration
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct LambdaOptions {
  int nodes_per_decade = 64;
  double root_tol = 1e-10;        // relative width of the final ξ₁ bracket
  bool cross_check_time = true;   // fill LambdaPoint::F_time_residual
  /// Limits used whenever F has to come from time integration.
  PeriodOptions period{0.0, 1e6, 1e6, 1e-10, 1e-13};
};

/// F at (ξ₁, x₂, ξ₂): the turning-point integral for librating orbits, time
/// integration for circulating ones.
double drift_F(const CoriolisProfile& profile, double xi1, double x2, double xi2,
               const PeriodOptions& period = LambdaOptions{}.period);

/// Signs of b′(x₂)F observed at the two ends of a ξ₁ range.
struct EndpointSigns {
  int small_xi1 = 0;
  int large_xi1 = 0;
};

EndpointSigns endpoint_signs(const CoriolisProfile& profile, double x2, double xi2, double xi1_lo,
                             double xi1_hi, const PeriodOptions& period = LambdaOptions{}.period);

/// All sign changes of ξ₁ ↦ F on a log-spaced refinement of [xi1_lo, xi1_hi],
/// each refined to a root. A range containing 0 is split into its two
/// half-lines with the admissibility margin removed. Throws NoSignChange if
/// neither a sign change nor opposite endpoint signs of b′F are found.
std::vector<LambdaPoint> find_lambda_roots(const CoriolisProfile& profile, double x2, double xi2,
                                           double xi1_lo, double xi1_hi,
                                           const LambdaOptions& opts = {});

struct LambdaGrid {
  double x2_lo = 0.0, x2_hi = kTwoPi;  // half-open in x₂
  int n_x2 = 32;
  double xi2_lo = -1.0, xi2_hi = 1.0;  // closed in ξ₂
  int n_xi2 = 32;
  double xi1_lo = 0.05, xi1_hi = 50.0;
  double bprime_margin = 1e-3;  // nodes with |b′(x₂)| below this are skipped

  double x2(int i) const { return x2_lo + (x2_hi - x2_lo) * i / n_x2; }
  double xi2(int j) const {
    return n_xi2 == 1 ? xi2_lo : xi2_lo + (xi2_hi - xi2_lo) * j / (n_xi2 - 1);
  }
};

enum class NodeStatus { Root, NoRoot, Skipped, Failed };

struct LambdaNode {
  int i = 0, j = 0;
  NodeStatus status = NodeStatus::NoRoot;
  std::vector<LambdaPoint> roots;
  std::string message;  // error text for Failed nodes
};

struct LambdaSummary {
  int nodes = 0;
  int nodes_with_root = 0;
  int skipped = 0;
  int failed = 0;
  int points = 0;
  double coverage = 0.0;  // nodes_with_root / (nodes − skipped)
  /// Largest change of the smallest root between edge-adjacent nodes that both have roots.
  double max_neighbor_jump = 0.0;
  /// Every root is a simple sign change, so the cloud is locally a graph ξ₁ = ξ₁(x₂, ξ₂).
  bool locally_graph = true;
};

struct LambdaCloud {
  LambdaGrid grid;
  std::vector<LambdaNode> nodes;  // row-major, index i·n_xi2 + j
  LambdaSummary summary;

  std::vector<LambdaPoint> points() const;
};

/// Parallel map over the grid; nodes are written by index so the result does
/// not depend on scheduling.
LambdaCloud sample_lambda(const CoriolisProfile& profile, const LambdaGrid& grid,
                          const LambdaOptions& opts = {});
/// Single-threaded reference for sample_lambda.
LambdaCloud sample_lambda_serial(const CoriolisProfile& profile, const LambdaGrid& grid,
                                 const LambdaOptions& opts = {});

struct ScalingFit {
  std::vector<double> xi1;
  std::vector<double> F;
  double slope = 0.0;
  double intercept = 0.0;
  double min_abs_F_xi1 = 0.0;  // min over the sequence of |F|·ξ₁
  /// No sign change of F on a log grid between the admissibility margin and min(ξ₁).
  bool no_root_below = false;
};

/// Least-squares slope of log|F| against log ξ₁. Throws FitFailure if F is
/// not sign-definite on the sequence.
ScalingFit smallxi_scaling(const CoriolisProfile& profile, double x2, double xi2,
                           const std::vector<double>& xi1_sequence, double xi1_margin = 1e-3);

struct AreaReport {
  double E = 0.0;
  double stencil_h = 0.0;
  double a_prime_root = 0.0;  // d/dξ₁ of the oriented area at fixed E, at the root
  double a_prime_lo = 0.0;    // same at the bracket ends
  double a_prime_hi = 0.0;
  double a_second_root = 0.0;
  double F_lo = 0.0;  // turning-point F at the bracket ends
  double F_hi = 0.0;
  bool sign_change = false;
  double tolerance = 0.0;     // threshold applied to |a′(root)|
  bool critical = false;      // |a′(root)| ≤ tolerance
  std::string extremum;       // "max", "min" or "flat"
  /// max relative deviation of a′ from −F at the bracket ends
  double slope_relation_err = 0.0;
};

/// Oriented area a(ξ₁) = 2π·A(ξ₁, E) at E = E(root) on a ξ₁ stencil, with
/// its derivative at the root and at the ends of the root bracket.
AreaReport extremal_area_check(const CoriolisProfile& profile, const LambdaPoint& lp);

}  // namespace rossbytrap
