#include "recon/radial.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "common/fft.hpp"

namespace recon::mri {
namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Table of exp(sign * 2 pi i * k_s * coord(u)), M x n.
template <typename Coord>
MatrixXcd phase_table(const std::vector<double>& k, Index n, double sign, Coord&& coord) {
  MatrixXcd table(static_cast<Eigen::Index>(k.size()), static_cast<Eigen::Index>(n));
  for (Index u = 0; u < n; ++u) {
    const double c = coord(u);
    for (Index s = 0; s < k.size(); ++s) {
      const double phase = sign * kTwoPi * k[s] * c;
      table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)) =
          Complex(std::cos(phase), std::sin(phase));
    }
  }
  return table;
}

MatrixXcd pixel_table(const std::vector<double>& k, Index n, double sign) {
  const double centre = static_cast<double>(n / 2);
  return phase_table(k, n, sign, [&](Index u) { return static_cast<double>(u) - centre; });
}

}  // namespace

double golden_angle_increment() { return std::numbers::pi * (std::sqrt(5.0) - 1.0) / 2.0; }

KPoints RadialTrajectory::points() const {
  KPoints pts;
  pts.kx.reserve(size());
  pts.ky.reserve(size());
  for (double angle : spoke_angles) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (double r : radii) {
      pts.kx.push_back(r * c);
      pts.ky.push_back(r * s);
    }
  }
  return pts;
}

RadialTrajectory golden_angle_trajectory(Index n_spokes, Index n_samples, Index first_spoke) {
  if (n_spokes < 1 || n_samples < 1) {
    throw DomainError("golden_angle_trajectory: spoke and sample counts must be >= 1");
  }
  RadialTrajectory traj;
  traj.n_samples = n_samples;
  const double inc = golden_angle_increment();
  for (Index k = first_spoke; k < first_spoke + n_spokes; ++k) {
    traj.spoke_angles.push_back(std::fmod(static_cast<double>(k) * inc, std::numbers::pi));
  }
  const double dk = 2.0 * traj.k_max / static_cast<double>(n_samples);
  for (Index s = 0; s < n_samples; ++s) {
    traj.radii.push_back(-traj.k_max + static_cast<double>(s) * dk);
  }
  return traj;
}

std::vector<RadialTrajectory> golden_angle_frames(Index n_frames, Index spokes_per_frame,
                                                  Index n_samples) {
  std::vector<RadialTrajectory> frames;
  frames.reserve(n_frames);
  for (Index t = 0; t < n_frames; ++t) {
    frames.push_back(golden_angle_trajectory(spokes_per_frame, n_samples, t * spokes_per_frame));
  }
  return frames;
}

void CoilProfile::validate() const {
  if (maps.rank() != 3) {
    throw ShapeError("coil profile must have shape (n_c, Nx, Ny), got " +
                     shape_string(maps.shape()));
  }
  const Index npix = nx() * ny();
  for (Index p = 0; p < npix; ++p) {
    double sos = 0.0;
    for (Index c = 0; c < n_coils(); ++c) sos += std::norm(maps[c * npix + p]);
    if (!(sos > 0.0)) throw DomainError("coil profile: zero sensitivity at pixel " + std::to_string(p));
  }
}

RadialEncoder::RadialEncoder(Shape image_shape, CoilProfile coils, std::vector<KPoints> frames)
    : image_shape_(std::move(image_shape)), coils_(std::move(coils)), frames_(std::move(frames)) {
  if (image_shape_.size() != 3) {
    throw ShapeError("RadialEncoder: image shape must be (Nx, Ny, Nt), got " +
                     shape_string(image_shape_));
  }
  coils_.validate();
  if (coils_.nx() != image_shape_[0] || coils_.ny() != image_shape_[1]) {
    throw ShapeError("RadialEncoder: coil maps " + shape_string(coils_.maps.shape()) +
                     " do not match image " + shape_string(image_shape_));
  }
  if (frames_.size() != image_shape_[2]) {
    throw ShapeError("RadialEncoder: " + std::to_string(frames_.size()) +
                     " trajectories for " + std::to_string(image_shape_[2]) + " frames");
  }
  samples_ = frames_.front().size();
  for (const auto& f : frames_) {
    if (f.size() != samples_ || f.ky.size() != samples_ || samples_ == 0) {
      throw ShapeError("RadialEncoder: every frame needs the same nonzero sample count");
    }
  }
}

RadialEncoder::RadialEncoder(Shape image_shape, CoilProfile coils,
                             const std::vector<RadialTrajectory>& frames)
    : RadialEncoder(std::move(image_shape), std::move(coils), [&] {
        std::vector<KPoints> pts;
        pts.reserve(frames.size());
        for (const auto& f : frames) pts.push_back(f.points());
        return pts;
      }()) {}

Shape RadialEncoder::range_shape() const { return {coils_.n_coils(), image_shape_[2], samples_}; }

NdArrayC RadialEncoder::forward(const NdArrayC& x) const {
  if (x.shape() != image_shape_) {
    throw ShapeError("radial_encode: image " + shape_string(x.shape()) + ", expected " +
                     shape_string(image_shape_));
  }
  const Index nx = image_shape_[0], ny = image_shape_[1], nt = image_shape_[2];
  const Index nc = coils_.n_coils();
  NdArrayC y(range_shape());
  MatrixXcd z(nx, ny);
  for (Index t = 0; t < nt; ++t) {
    const MatrixXcd ex = pixel_table(frames_[t].kx, nx, -1.0);
    const MatrixXcd ey = pixel_table(frames_[t].ky, ny, -1.0);
    for (Index c = 0; c < nc; ++c) {
      for (Index ix = 0; ix < nx; ++ix)
        for (Index iy = 0; iy < ny; ++iy)
          z(ix, iy) = coils_.maps(c, ix, iy) * x(ix, iy, t);
      const MatrixXcd partial = ex * z;  // M x Ny
      const VectorXcd samples = partial.cwiseProduct(ey).rowwise().sum();
      Complex* out = &y(c, t, 0);
      for (Index s = 0; s < samples_; ++s) out[s] = samples(static_cast<Eigen::Index>(s));
    }
  }
  return y;
}

NdArrayC RadialEncoder::adjoint(const NdArrayC& y) const {
  if (y.shape() != range_shape()) {
    throw ShapeError("radial_encode_adjoint: data " + shape_string(y.shape()) + ", expected " +
                     shape_string(range_shape()));
  }
  const Index nx = image_shape_[0], ny = image_shape_[1], nt = image_shape_[2];
  const Index nc = coils_.n_coils();
  NdArrayC x(image_shape_, Complex{});
  for (Index t = 0; t < nt; ++t) {
    const MatrixXcd ex = pixel_table(frames_[t].kx, nx, -1.0);
    const MatrixXcd ey_conj = pixel_table(frames_[t].ky, ny, 1.0);
    for (Index c = 0; c < nc; ++c) {
      const Eigen::Map<const VectorXcd> data(&y(c, t, 0), static_cast<Eigen::Index>(samples_));
      const MatrixXcd weighted = data.asDiagonal() * ey_conj;  // M x Ny
      const MatrixXcd img = ex.adjoint() * weighted;            // Nx x Ny
      for (Index ix = 0; ix < nx; ++ix)
        for (Index iy = 0; iy < ny; ++iy)
          x(ix, iy, t) += std::conj(coils_.maps(c, ix, iy)) * img(ix, iy);
    }
  }
  return x;
}

void RadialEncoder::build_toeplitz_kernels() const {
  if (!kernel_spectra_.empty()) return;
  const Index nx = image_shape_[0], ny = image_shape_[1], nt = image_shape_[2];
  const Index gx = 2 * nx, gy = 2 * ny;
  // Grid index u holds the lag u (u < n) or u - 2n (u > n); lag n never occurs.
  auto lag = [](Index n) {
    return [n](Index u) -> double {
      if (u < n) return static_cast<double>(u);
      if (u == n) return 0.0;
      return static_cast<double>(u) - 2.0 * static_cast<double>(n);
    };
  };
  detail::FftPlan fft(gx, gy);
  auto& buf = fft.buffer();
  kernel_spectra_.resize(nt);
  for (Index t = 0; t < nt; ++t) {
    MatrixXcd ax = phase_table(frames_[t].kx, gx, 1.0, lag(nx));
    MatrixXcd ay = phase_table(frames_[t].ky, gy, 1.0, lag(ny));
    ax.col(static_cast<Eigen::Index>(nx)).setZero();
    ay.col(static_cast<Eigen::Index>(ny)).setZero();
    const MatrixXcd kernel = ax.transpose() * ay;  // gx x gy
    for (Index u = 0; u < gx; ++u)
      for (Index v = 0; v < gy; ++v) buf[u * gy + v] = kernel(u, v);
    fft.forward();
    const double scale = 1.0 / static_cast<double>(gx * gy);
    kernel_spectra_[t].resize(buf.size());
    for (Index k = 0; k < buf.size(); ++k) kernel_spectra_[t][k] = buf[k] * scale;
  }
}

NdArrayC RadialEncoder::normal(const NdArrayC& x) const {
  if (x.shape() != image_shape_) {
    throw ShapeError("RadialEncoder::normal: image " + shape_string(x.shape()) + ", expected " +
                     shape_string(image_shape_));
  }
  build_toeplitz_kernels();
  const Index nx = image_shape_[0], ny = image_shape_[1], nt = image_shape_[2];
  const Index nc = coils_.n_coils();
  const Index gy = 2 * ny;
  detail::FftPlan fft(2 * nx, gy);
  auto& buf = fft.buffer();
  NdArrayC out(image_shape_, Complex{});
  for (Index t = 0; t < nt; ++t) {
    const auto& spectrum = kernel_spectra_[t];
    for (Index c = 0; c < nc; ++c) {
      std::fill(buf.begin(), buf.end(), Complex{});
      for (Index ix = 0; ix < nx; ++ix)
        for (Index iy = 0; iy < ny; ++iy) buf[ix * gy + iy] = coils_.maps(c, ix, iy) * x(ix, iy, t);
      fft.forward();
      for (Index k = 0; k < buf.size(); ++k) buf[k] *= spectrum[k];
      fft.backward();
      for (Index ix = 0; ix < nx; ++ix)
        for (Index iy = 0; iy < ny; ++iy)
          out(ix, iy, t) += std::conj(coils_.maps(c, ix, iy)) * buf[ix * gy + iy];
    }
  }
  return out;
}

std::vector<double> density_weights(const RadialTrajectory& traj, Index nx, Index ny) {
  const double floor = 1.0 / (2.0 * static_cast<double>(traj.n_samples));
  std::vector<double> w;
  w.reserve(traj.size());
  double total = 0.0;
  for (Index k = 0; k < traj.n_spokes(); ++k) {
    for (double r : traj.radii) {
      const double v = r == 0.0 ? floor : std::abs(r);
      w.push_back(v);
      total += v;
    }
  }
  const double target = std::numbers::pi * traj.k_max * traj.k_max * static_cast<double>(nx * ny);
  for (double& v : w) v *= target / total;
  return w;
}

NdArrayC radial_encode(const NdArrayC& x, const CoilProfile& coils,
                       const std::vector<RadialTrajectory>& frames) {
  return RadialEncoder(x.shape(), coils, frames).forward(x);
}

NdArrayC radial_encode_adjoint(const NdArrayC& y, const CoilProfile& coils,
                               const std::vector<RadialTrajectory>& frames) {
  const Shape image{coils.nx(), coils.ny(), frames.size()};
  return RadialEncoder(image, coils, frames).adjoint(y);
}

NdArrayC nufft_recon(const NdArrayC& y, const CoilProfile& coils,
                     const std::vector<RadialTrajectory>& frames) {
  const Index nx = coils.nx(), ny = coils.ny();
  const RadialEncoder enc(Shape{nx, ny, frames.size()}, coils, frames);
  if (y.shape() != enc.range_shape()) {
    throw ShapeError("nufft_recon: data " + shape_string(y.shape()) + ", expected " +
                     shape_string(enc.range_shape()));
  }
  NdArrayC weighted = y;
  const Index m = enc.samples_per_frame();
  for (Index t = 0; t < frames.size(); ++t) {
    const std::vector<double> w = density_weights(frames[t], nx, ny);
    for (Index c = 0; c < coils.n_coils(); ++c) {
      Complex* row = &weighted(c, t, 0);
      for (Index s = 0; s < m; ++s) row[s] *= w[s];
    }
  }
  NdArrayC x = enc.adjoint(weighted);
  x *= Complex(1.0 / static_cast<double>(nx * ny));
  return x;
}

}  // namespace recon::mri
