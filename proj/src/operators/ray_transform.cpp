#include "recon/ray_transform.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "common/fft.hpp"

namespace recon::ct {

void ParallelBeamGeometry::validate() const {
  if (image_size < 1) throw DomainError("geometry: image size must be >= 1");
  if (n_angles < 1) throw DomainError("geometry: need at least one angle");
  if (n_bins < image_size) {
    throw DomainError("geometry: n_bins (" + std::to_string(n_bins) + ") must be >= N (" +
                      std::to_string(image_size) + ")");
  }
}

double ParallelBeamGeometry::angle(Index k) const {
  return std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
}

Index ParallelBeamGeometry::default_bins(Index image_size) {
  auto bins = static_cast<Index>(std::ceil(std::sqrt(2.0) * static_cast<double>(image_size)));
  if (bins % 2 == 0) ++bins;
  return bins;
}

ParallelBeamGeometry ParallelBeamGeometry::make(Index image_size, Index n_angles, Index n_bins) {
  ParallelBeamGeometry g{n_angles, n_bins ? n_bins : default_bins(image_size), image_size};
  g.validate();
  return g;
}

RayTransform::RayTransform(ParallelBeamGeometry geometry) : geom_(geometry) {
  geom_.validate();
  cos_.resize(geom_.n_angles);
  sin_.resize(geom_.n_angles);
  for (Index k = 0; k < geom_.n_angles; ++k) {
    cos_[k] = std::cos(geom_.angle(k));
    sin_[k] = std::sin(geom_.angle(k));
  }

  padded_ = 1;
  while (padded_ < 2 * geom_.n_bins) padded_ *= 2;

  // Spatial Ram-Lak kernel for unit detector spacing: h(0) = 1/4,
  // h(n odd) = -1 / (pi n)^2, zero otherwise. Its transform is the ramp with
  // the correct DC value.
  std::vector<double> kernel(padded_, 0.0);
  kernel[0] = 0.25;
  const auto half = static_cast<std::ptrdiff_t>(padded_ / 2);
  for (std::ptrdiff_t n = 1; n < half; n += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(n * n));
    kernel[static_cast<Index>(n)] = v;
    kernel[padded_ - static_cast<Index>(n)] = v;
  }
  detail::FftPlan fft(padded_);
  auto& buf = fft.buffer();
  for (Index k = 0; k < padded_; ++k) buf[k] = kernel[k];
  fft.forward();
  filter_.resize(padded_);
  for (Index k = 0; k < padded_; ++k) filter_[k] = buf[k].real() / static_cast<double>(padded_);
}

template <typename Visit>
void RayTransform::trace(Index angle, Index bin, Visit&& visit) const {
  const Index n = geom_.image_size;
  const double c = 0.5 * static_cast<double>(n - 1);
  const double t = static_cast<double>(bin) - 0.5 * static_cast<double>(geom_.n_bins - 1);
  const double cs = cos_[angle], sn = sin_[angle];
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;

  if (std::abs(sn) >= std::abs(cs)) {
    // Step across columns, interpolate between rows.
    const double w = 1.0 / std::abs(sn);
    for (Index j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) - c;
      const double fi = (t - x * cs) / sn + c;
      const double fl = std::floor(fi);
      const auto i0 = static_cast<std::ptrdiff_t>(fl);
      if (i0 < -1 || i0 > last) continue;
      const double f = fi - fl;
      if (i0 >= 0) visit(static_cast<Index>(i0) * n + j, w * (1.0 - f));
      if (i0 + 1 <= last) visit(static_cast<Index>(i0 + 1) * n + j, w * f);
    }
  } else {
    // Step across rows, interpolate between columns.
    const double w = 1.0 / std::abs(cs);
    for (Index i = 0; i < n; ++i) {
      const double y = static_cast<double>(i) - c;
      const double fj = (t - y * sn) / cs + c;
      const double fl = std::floor(fj);
      const auto j0 = static_cast<std::ptrdiff_t>(fl);
      if (j0 < -1 || j0 > last) continue;
      const double f = fj - fl;
      if (j0 >= 0) visit(i * n + static_cast<Index>(j0), w * (1.0 - f));
      if (j0 + 1 <= last) visit(i * n + static_cast<Index>(j0 + 1), w * f);
    }
  }
}

NdArrayF RayTransform::forward(const NdArrayF& image) const {
  if (image.shape() != domain_shape()) {
    throw ShapeError("ray_transform: image " + shape_string(image.shape()) + ", geometry expects " +
                     shape_string(domain_shape()));
  }
  NdArrayF sino(range_shape(), 0.0);
  for (Index a = 0; a < geom_.n_angles; ++a) {
    for (Index b = 0; b < geom_.n_bins; ++b) {
      double sum = 0.0;
      trace(a, b, [&](Index pixel, double w) { sum += w * image[pixel]; });
      sino(a, b) = sum;
    }
  }
  return sino;
}

NdArrayF RayTransform::adjoint(const NdArrayF& sinogram) const {
  if (sinogram.shape() != range_shape()) {
    throw ShapeError("ray_transform_adjoint: sinogram " + shape_string(sinogram.shape()) +
                     ", geometry expects " + shape_string(range_shape()));
  }
  NdArrayF image(domain_shape(), 0.0);
  for (Index a = 0; a < geom_.n_angles; ++a) {
    for (Index b = 0; b < geom_.n_bins; ++b) {
      const double v = sinogram(a, b);
      if (v == 0.0) continue;
      trace(a, b, [&](Index pixel, double w) { image[pixel] += w * v; });
    }
  }
  return image;
}

NdArrayF RayTransform::ramp_filter(const NdArrayF& sinogram) const {
  if (sinogram.shape() != range_shape()) {
    throw ShapeError("fbp: sinogram " + shape_string(sinogram.shape()) + ", geometry expects " +
                     shape_string(range_shape()));
  }
  detail::FftPlan fft(padded_);
  auto& buf = fft.buffer();
  NdArrayF out(range_shape());
  for (Index a = 0; a < geom_.n_angles; ++a) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (Index b = 0; b < geom_.n_bins; ++b) buf[b] = sinogram(a, b);
    fft.forward();
    for (Index k = 0; k < padded_; ++k) buf[k] *= filter_[k];
    fft.backward();
    for (Index b = 0; b < geom_.n_bins; ++b) out(a, b) = buf[b].real();
  }
  return out;
}

NdArrayF RayTransform::fbp(const NdArrayF& sinogram) const {
  NdArrayF image = adjoint(ramp_filter(sinogram));
  image *= std::numbers::pi / static_cast<double>(geom_.n_angles);
  return image;
}

NdArrayF ray_transform(const NdArrayF& image, const ParallelBeamGeometry& geom) {
  return RayTransform(geom).forward(image);
}

NdArrayF ray_transform_adjoint(const NdArrayF& sinogram, const ParallelBeamGeometry& geom) {
  return RayTransform(geom).adjoint(sinogram);
}

NdArrayF fbp(const NdArrayF& sinogram, const ParallelBeamGeometry& geom) {
  return RayTransform(geom).fbp(sinogram);
}

}  // namespace recon::ct
