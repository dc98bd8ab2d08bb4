#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "recon/radial.hpp"
#include "recon/rng.hpp"

namespace recon::phantom {

/// Ellipse in normalised coordinates: the image spans [-1, 1]^2, x grows
/// with the column index and y with decreasing row index.
struct EllipseSpec {
  double cx = 0.0, cy = 0.0;
  double a = 0.1, b = 0.1;   // semi-axes
  double theta = 0.0;        // radians, counter-clockwise
  double value = 1.0;        // added inside the ellipse
};

/// Sum of ellipse indicators averaged over s x s subpixels per pixel.
NdArrayF render_ellipses(const std::vector<EllipseSpec>& ellipses, Index n, Index supersample = 4);

/// Classic Shepp-Logan table with intensities halved, so the image lies in [0, 1].
std::vector<EllipseSpec> shepp_logan_ellipses();
NdArrayF shepp_logan(Index n);

/// Jittered Shepp-Logan-like table plus a few small random features, for
/// training data that is distinct from the evaluation phantom.
std::vector<EllipseSpec> random_head_ellipses(Rng& rng);
NdArrayF random_head_phantom(Index n, std::uint64_t seed);

struct DynamicPhantomSpec {
  std::vector<EllipseSpec> base;
  std::vector<Index> pulsing;  // indices into base whose semi-axes pulse
  double amplitude = 0.12;     // relative axis change, in [0, 1)
  double cycle_offset = 0.0;   // radians added to the pulse phase
  // Phase map c0 + c1 x + c2 y + c3 x y + c4 x^2 + c5 y^2 (radians).
  std::array<double, 6> phase{0.3, 0.6, -0.4, 0.5, -0.3, 0.2};

  void validate() const;

  /// Torso-like cine phantom with a pulsing blood pool and myocardium.
  static DynamicPhantomSpec cardiac();
  /// Randomised variant of cardiac() for training.
  static DynamicPhantomSpec random_cardiac(Rng& rng);
};

/// (N, N, n_frames) complex sequence; frame t uses pulse phase
/// 2 pi t / n_frames, so the sequence is cyclic.
NdArrayC dynamic_phantom(const DynamicPhantomSpec& spec, Index n, Index n_frames);

/// Gaussian sensitivity bumps centred on a ring outside the field of view,
/// each with a smooth phase ramp, normalised so sum_i |C_i|^2 = 1.
mri::CoilProfile synth_coils(Index n, Index n_coils);

}  // namespace recon::phantom
