#pragma once

#include <vector>

#include "recon/operator.hpp"

namespace recon::mri {

/// Golden-angle spoke increment pi * (sqrt(5) - 1) / 2 radians (~111.246 deg).
double golden_angle_increment();

/// Nonuniform k-space locations in cycles per pixel.
struct KPoints {
  std::vector<double> kx;
  std::vector<double> ky;
  Index size() const { return kx.size(); }
};

/// Radial spokes through the k-space centre.
///
/// Sample s of a spoke sits at radius -k_max + s * (2 k_max / n_samples), so
/// the centre is sampled whenever n_samples is even. Spoke k has angle
/// (k * golden) mod pi.
struct RadialTrajectory {
  Index n_samples = 0;
  double k_max = 0.5;
  std::vector<double> spoke_angles;
  std::vector<double> radii;

  Index n_spokes() const { return spoke_angles.size(); }
  Index size() const { return n_spokes() * n_samples; }
  KPoints points() const;
};

/// Spokes first_spoke .. first_spoke + n_spokes - 1 of the golden-angle sequence.
RadialTrajectory golden_angle_trajectory(Index n_spokes, Index n_samples, Index first_spoke = 0);

/// Frame t receives spokes t * n .. (t + 1) * n - 1 of one continuing sequence.
std::vector<RadialTrajectory> golden_angle_frames(Index n_frames, Index spokes_per_frame,
                                                  Index n_samples);

/// Complex receive sensitivities, shape (n_c, Nx, Ny).
struct CoilProfile {
  NdArrayC maps;

  Index n_coils() const { return maps.dim(0); }
  Index nx() const { return maps.dim(1); }
  Index ny() const { return maps.dim(2); }

  /// Throws DomainError if sum_i |C_i|^2 vanishes at some pixel.
  void validate() const;
};

/// Multi-coil, frame-wise nonuniform DFT E = S F C.
///
/// Forward: y[c, t, s] = sum_r C_c(r) x_t(r) exp(-2 pi i k_s . r), with
/// r = (ix - Nx/2, iy - Ny/2) and no normalisation. The adjoint uses the
/// conjugate kernels and coil maps. normal() evaluates E^H E exactly through a
/// Toeplitz embedding on a (2Nx, 2Ny) grid.
class RadialEncoder final : public ComplexOperator {
 public:
  RadialEncoder(Shape image_shape, CoilProfile coils, std::vector<KPoints> frames);
  RadialEncoder(Shape image_shape, CoilProfile coils, const std::vector<RadialTrajectory>& frames);

  Shape domain_shape() const override { return image_shape_; }
  Shape range_shape() const override;
  NdArrayC forward(const NdArrayC& x) const override;
  NdArrayC adjoint(const NdArrayC& y) const override;
  NdArrayC normal(const NdArrayC& x) const override;

  const CoilProfile& coils() const { return coils_; }
  const std::vector<KPoints>& frames() const { return frames_; }
  Index samples_per_frame() const { return samples_; }

 private:
  void build_toeplitz_kernels() const;

  Shape image_shape_;
  CoilProfile coils_;
  std::vector<KPoints> frames_;
  Index samples_ = 0;
  mutable std::vector<std::vector<Complex>> kernel_spectra_;  // lazily built, one per frame
};

/// Ramp density compensation for one radial frame: |r|, with floor
/// 1 / (2 n_samples) at r = 0, scaled to sum to the number of Cartesian
/// samples inside the sampled disk, pi k_max^2 Nx Ny.
std::vector<double> density_weights(const RadialTrajectory& traj, Index nx, Index ny);

NdArrayC radial_encode(const NdArrayC& x, const CoilProfile& coils,
                       const std::vector<RadialTrajectory>& frames);
NdArrayC radial_encode_adjoint(const NdArrayC& y, const CoilProfile& coils,
                               const std::vector<RadialTrajectory>& frames);

/// Density-compensated adjoint divided by Nx Ny, so that fully sampled data
/// returns approximately the encoded image.
NdArrayC nufft_recon(const NdArrayC& y, const CoilProfile& coils,
                     const std::vector<RadialTrajectory>& frames);

}  // namespace recon::mri
