#pragma once

#include <cstdint>

#include "recon/ray_transform.hpp"

namespace recon::ct {

/// Low-dose transmission model T(x) = p * exp(-mu * R x).
///
/// `photons` is the mean photon count per detector bin (p) and `mu` the
/// attenuation coefficient.
struct LowDoseModel {
  double photons = 10000.0;
  double mu = 0.02;
  ParallelBeamGeometry geometry;

  void validate() const;
};

/// Elementwise p * exp(-mu * R x).
NdArrayF lowdose_forward(const NdArrayF& x, const LowDoseModel& model);
NdArrayF lowdose_forward(const NdArrayF& x, const LowDoseModel& model, const RayTransform& ray);

/// Directional derivative of lowdose_forward at x along v: -mu * T(x) * (R v).
NdArrayF lowdose_jvp(const NdArrayF& x, const NdArrayF& v, const LowDoseModel& model);

/// Poisson counts with mean lowdose_forward(x); deterministic per seed.
NdArrayF lowdose_simulate(const NdArrayF& x, const LowDoseModel& model, std::uint64_t seed);

/// Generalised Kullback-Leibler divergence sum(u - y + y ln(y / u)), with
/// 0 ln 0 = 0. Throws DomainError when some u <= 0 or y < 0.
double kl_divergence(const NdArrayF& u, const NdArrayF& y);

/// Gradient of x -> KL(T x, y): -mu * R^T [T(x) - y].
NdArrayF kl_gradient(const NdArrayF& x, const NdArrayF& y, const LowDoseModel& model);

/// Line integrals recovered from counts, -ln(max(y, 1) / p) / mu.
NdArrayF log_transform(const NdArrayF& counts, const LowDoseModel& model);

/// Direct reconstruction from counts: FBP of the log-transformed data.
NdArrayF fbp_from_counts(const NdArrayF& counts, const LowDoseModel& model);

}  // namespace recon::ct
