#pragma once

#include <filesystem>
#include <vector>

#include "recon/ndarray.hpp"

namespace recon::metrics {

/// 10 log10(peak^2 / MSE); +infinity when the images coincide. peak <= 0
/// selects max(ref).
double psnr(const NdArrayF& x, const NdArrayF& ref, double peak = 0.0);

/// ||x - ref|| / ||ref||. Throws DomainError for a zero reference.
double nrmse(const NdArrayF& x, const NdArrayF& ref);

/// Mean SSIM over all valid 11x11 window positions (Gaussian weights,
/// sigma 1.5, K1 = 0.01, K2 = 0.03) for 2-D images with dynamic range L.
double ssim(const NdArrayF& x, const NdArrayF& ref, double range = 1.0);

/// Grayscale HaarPSI (C = 30, alpha = 4.2). Inputs are mapped to the 0..255
/// convention by 255 / range, then 2x2-averaged and subsampled.
double hpsi(const NdArrayF& x, const NdArrayF& ref, double range = 1.0);

struct SliceMetrics {
  double psnr = 0.0;
  double nrmse = 0.0;
  double ssim = 0.0;
  double hpsi = 0.0;
};

struct MetricOptions {
  double peak = 0.0;   // <= 0: max of the reference slice
  double range = 0.0;  // SSIM / HaarPSI dynamic range; <= 0: same as the PSNR peak
};

struct MetricReport {
  std::vector<SliceMetrics> slices;
  SliceMetrics mean;

  /// Header "slice,psnr,nrmse,ssim,hpsi", one row per slice, then a "mean" row.
  void write_csv(const std::filesystem::path& path) const;
};

/// 2-D images give one slice; (Nx, Ny, Nt) volumes are evaluated per xy
/// slice (last axis) and averaged.
MetricReport evaluate(const NdArrayF& x, const NdArrayF& ref, const MetricOptions& opts = {});

/// Complex sequences are compared through their magnitudes.
MetricReport evaluate(const NdArrayC& x, const NdArrayC& ref, const MetricOptions& opts = {});

/// Slice t of an (Nx, Ny, Nt) volume.
NdArrayF xy_slice(const NdArrayF& volume, Index t);

}  // namespace recon::metrics
