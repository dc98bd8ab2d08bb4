#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <vector>

namespace recon::detail {

/// In-place complex FFT of fixed size (1-D or 2-D, row-major), planned once
/// with FFTW_ESTIMATE so results are reproducible run to run.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : buffer_(n) {
    auto* p = reinterpret_cast<fftw_complex*>(buffer_.data());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  FftPlan(std::size_t rows, std::size_t cols) : buffer_(rows * cols) {
    auto* p = reinterpret_cast<fftw_complex*>(buffer_.data());
    fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, FFTW_FORWARD,
                            FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  std::vector<std::complex<double>>& buffer() { return buffer_; }

  void forward() { fftw_execute(fwd_); }

  /// Unnormalised inverse; divide by size() for the true inverse.
  void backward() { fftw_execute(inv_); }

  std::size_t size() const { return buffer_.size(); }

 private:
  std::vector<std::complex<double>> buffer_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace recon::detail
