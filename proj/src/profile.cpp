#include "rossbytrap/profile.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "rossbytrap/errors.hpp"

namespace rossbytrap {

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

namespace {

// Exhaustive zero search of a smooth periodic function: dense sampling, then
// TOMS 748 on every sign change. Tangential (even-order) zeros are not
// detected; none of the supported profiles have them.
std::vector<double> periodic_zeros(const std::function<double(double)>& f) {
  constexpr int kSamples = 8192;
  constexpr double kTol = 1e-10;
  std::vector<double> zeros;
  const double h = kTwoPi / kSamples;
  double x0 = 0.0;
  double f0 = f(x0);
  for (int i = 1; i <= kSamples; ++i) {
    const double x1 = i * h;
    const double f1 = f(x1);
    if (f0 == 0.0) {
      zeros.push_back(wrap_angle(x0));
    } else if (f0 * f1 < 0.0) {
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(50);
      auto [lo, hi] = boost::math::tools::toms748_solve(f, x0, x1, f0, f1, tol, iters);
      zeros.push_back(wrap_angle(0.5 * (lo + hi)));
    }
    x0 = x1;
    f0 = f1;
  }
  // Collapse duplicates produced by a zero sitting exactly on a sample node
  // (including the 0 / 2π seam).
  std::vector<double> unique;
  for (double z : zeros) {
    bool seen = false;
    for (double u : unique) {
      double d = std::fabs(z - u);
      d = std::min(d, kTwoPi - d);
      if (d < kTol) seen = true;
    }
    if (!seen) unique.push_back(z);
  }
  std::sort(unique.begin(), unique.end());
  return unique;
}

}  // namespace

CoriolisProfile::CoriolisProfile(std::string name, double constant, std::vector<double> cos_coeffs,
                                 std::vector<double> sin_coeffs)
    : name_(std::move(name)),
      constant_(constant),
      cos_(std::move(cos_coeffs)),
      sin_(std::move(sin_coeffs)) {
  for (double c : cos_)
    if (!std::isfinite(c)) throw ConfigError("profile coefficient is not finite");
  for (double s : sin_)
    if (!std::isfinite(s)) throw ConfigError("profile coefficient is not finite");
  if (!std::isfinite(constant_)) throw ConfigError("profile constant is not finite");
  zeros_b_ = periodic_zeros([this](double x) { return eval(x).b; });
  zeros_db_ = periodic_zeros([this](double x) { return eval(x).db; });
}

CoriolisProfile CoriolisProfile::sine() { return {"sin", 0.0, {}, {1.0}}; }
CoriolisProfile CoriolisProfile::shifted_sine() { return {"2+sin", 2.0, {}, {1.0}}; }
CoriolisProfile CoriolisProfile::shifted_cosine() { return {"1+0.5cos", 1.0, {0.5}, {}}; }

CoriolisProfile CoriolisProfile::builtin(const std::string& name) {
  if (name == "sin") return sine();
  if (name == "2+sin") return shifted_sine();
  if (name == "1+0.5cos") return shifted_cosine();
  throw ConfigError("unknown built-in profile '" + name + "'");
}

ProfileValue CoriolisProfile::eval(double x2) const {
  ProfileValue v{constant_, 0.0, 0.0};
  for (std::size_t k = 0; k < cos_.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    const double c = std::cos(n * x2), s = std::sin(n * x2);
    v.b += cos_[k] * c;
    v.db -= cos_[k] * n * s;
    v.d2b -= cos_[k] * n * n * c;
  }
  for (std::size_t k = 0; k < sin_.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    const double c = std::cos(n * x2), s = std::sin(n * x2);
    v.b += sin_[k] * s;
    v.db += sin_[k] * n * c;
    v.d2b -= sin_[k] * n * n * s;
  }
  return v;
}

double CoriolisProfile::d3b(double x2) const {
  double r = 0.0;
  for (std::size_t k = 0; k < cos_.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    r += cos_[k] * n * n * n * std::sin(n * x2);
  }
  for (std::size_t k = 0; k < sin_.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    r -= sin_[k] * n * n * n * std::cos(n * x2);
  }
  return r;
}

}  // namespace rossbytrap
