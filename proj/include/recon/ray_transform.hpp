#pragma once

#include <vector>

#include "recon/operator.hpp"

namespace recon::ct {

/// 2-D parallel-beam geometry on an N x N pixel grid of unit spacing.
///
/// Angles are uniform on [0, pi); detector bins have unit spacing and are
/// centred on the rotation axis. Pixel (i, j) sits at (x, y) = (j - c, i - c)
/// with c = (N - 1) / 2.
struct ParallelBeamGeometry {
  Index n_angles = 180;
  Index n_bins = 0;
  Index image_size = 0;

  void validate() const;
  double angle(Index k) const;
  Shape image_shape() const { return {image_size, image_size}; }
  Shape sinogram_shape() const { return {n_angles, n_bins}; }

  /// Smallest odd bin count covering the image diagonal.
  static Index default_bins(Index image_size);
  static ParallelBeamGeometry make(Index image_size, Index n_angles, Index n_bins = 0);
};

/// Joseph's interpolating line-integral projector and its exact transpose.
class RayTransform final : public RealOperator {
 public:
  explicit RayTransform(ParallelBeamGeometry geometry);

  Shape domain_shape() const override { return geom_.image_shape(); }
  Shape range_shape() const override { return geom_.sinogram_shape(); }
  NdArrayF forward(const NdArrayF& image) const override;
  NdArrayF adjoint(const NdArrayF& sinogram) const override;

  /// Ram-Lak filtering of every projection (detector-frequency domain).
  NdArrayF ramp_filter(const NdArrayF& sinogram) const;

  /// Filtered backprojection: ramp filter, matched backprojection, angular
  /// quadrature weight.
  NdArrayF fbp(const NdArrayF& sinogram) const;

  const ParallelBeamGeometry& geometry() const { return geom_; }

 private:
  template <typename Visit>
  void trace(Index angle, Index bin, Visit&& visit) const;

  ParallelBeamGeometry geom_;
  std::vector<double> cos_, sin_;
  Index padded_ = 0;
  std::vector<double> filter_;  // real frequency response, length padded_
};

NdArrayF ray_transform(const NdArrayF& image, const ParallelBeamGeometry& geom);
NdArrayF ray_transform_adjoint(const NdArrayF& sinogram, const ParallelBeamGeometry& geom);
NdArrayF fbp(const NdArrayF& sinogram, const ParallelBeamGeometry& geom);

}  // namespace recon::ct
