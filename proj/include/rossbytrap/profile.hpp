#pragma once

#include <string>
#include <vector>

namespace rossbytrap {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

/// Wraps an angle into [0, 2π).
double wrap_angle(double x);

struct ProfileValue {
  double b = 0.0;
  double db = 0.0;   // b'
  double d2b = 0.0;  // b''
};

/// Latitude-dependent Coriolis factor b(x₂) on the circle, stored as a
/// truncated Fourier series
///
///     b(x) = c + Σₙ aₙ cos(n x) + Σₙ sₙ sin(n x),   n = 1, 2, ...
///
/// so that b', b'' are exact. Zeros of b and b' are located once at
/// construction by sampling plus bracketed refinement.
class CoriolisProfile {
public:
  CoriolisProfile(std::string name, double constant, std::vector<double> cos_coeffs,
                  std::vector<double> sin_coeffs);

  /// b(x₂) = sin x₂
  static CoriolisProfile sine();
  /// b(x₂) = 2 + sin x₂
  static CoriolisProfile shifted_sine();
  /// b(x₂) = 1 + 0.5 cos x₂
  static CoriolisProfile shifted_cosine();
  /// Looks up one of the built-ins by name ("sin", "2+sin", "1+0.5cos").
  static CoriolisProfile builtin(const std::string& name);

  ProfileValue eval(double x2) const;
  double b(double x2) const { return eval(x2).b; }
  double db(double x2) const { return eval(x2).db; }
  /// Third derivative; used by the ray Jacobian and the linearized period.
  double d3b(double x2) const;

  const std::string& name() const { return name_; }
  double constant() const { return constant_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }

  /// Zeros of b on [0, 2π), ascending.
  const std::vector<double>& zeros_of_b() const { return zeros_b_; }
  /// Zeros of b' on [0, 2π), ascending.
  const std::vector<double>& zeros_of_bprime() const { return zeros_db_; }

private:
  std::string name_;
  double constant_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<double> zeros_b_;
  std::vector<double> zeros_db_;
};

}  // namespace rossbytrap
