#pragma once

// Thin per-thread wrapper over Eigen's FFT module. Eigen::FFT caches plans
// internally and is not safe to share, so each thread owns one instance.

#include <unsupported/Eigen/FFT>

#include <complex>

namespace asqe::detail {

using cplx = std::complex<double>;

inline Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

/// dst[k] = sum_j src[j] e^{-2 pi i j k / n}
inline void fft_forward(cplx* dst, const cplx* src, int n) { thread_fft().fwd(dst, src, n); }
/// dst[j] = sum_k src[k] e^{+2 pi i j k / n}  (unscaled)
inline void fft_inverse(cplx* dst, const cplx* src, int n) { thread_fft().inv(dst, src, n); }

}  // namespace asqe::detail
