#pragma once

// Thin FFTW wrappers. Planning is serialized (FFTW's planner is not
// thread-safe); execution on distinct arrays may run concurrently.

#include <complex>
#include <mutex>

#include <fftw3.h>

namespace rossbytrap::detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// In-place strided batch of 1-D transforms: `howmany` sequences of length n,
/// element stride `stride`, sequence distance `dist`.
inline void fft_many(std::complex<double>* data, int n, int howmany, int stride, int dist, int sign) {
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_many_dft(1, &n, howmany, as_fftw(data), nullptr, stride, dist, as_fftw(data), nullptr,
                              stride, dist, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

/// In-place 2-D transform of a row-major n0×n1 array.
inline void fft_2d(std::complex<double>* data, int n0, int n1, int sign) {
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(n0, n1, as_fftw(data), as_fftw(data), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace rossbytrap::detail
