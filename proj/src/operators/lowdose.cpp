#include "recon/lowdose.hpp"

#include <cmath>
#include <string>

#include "recon/rng.hpp"

namespace recon::ct {

void LowDoseModel::validate() const {
  if (!(photons > 0.0)) throw DomainError("low-dose model: photon count must be > 0");
  if (!(mu > 0.0)) throw DomainError("low-dose model: attenuation must be > 0");
  geometry.validate();
}

NdArrayF lowdose_forward(const NdArrayF& x, const LowDoseModel& model, const RayTransform& ray) {
  NdArrayF u = ray.forward(x);
  for (double& v : u.data()) v = model.photons * std::exp(-model.mu * v);
  return u;
}

NdArrayF lowdose_forward(const NdArrayF& x, const LowDoseModel& model) {
  model.validate();
  return lowdose_forward(x, model, RayTransform(model.geometry));
}

NdArrayF lowdose_jvp(const NdArrayF& x, const NdArrayF& v, const LowDoseModel& model) {
  model.validate();
  const RayTransform ray(model.geometry);
  NdArrayF u = lowdose_forward(x, model, ray);
  const NdArrayF rv = ray.forward(v);
  for (Index i = 0; i < u.size(); ++i) u[i] *= -model.mu * rv[i];
  return u;
}

NdArrayF lowdose_simulate(const NdArrayF& x, const LowDoseModel& model, std::uint64_t seed) {
  NdArrayF counts = lowdose_forward(x, model);
  Rng rng(seed);
  for (double& v : counts.data()) v = rng.poisson(v);
  return counts;
}

double kl_divergence(const NdArrayF& u, const NdArrayF& y) {
  require_same_shape(u, y, "kl_divergence");
  double sum = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) {
      throw DomainError("kl_divergence: u must be positive, u[" + std::to_string(i) +
                        "] = " + std::to_string(u[i]));
    }
    if (y[i] < 0.0) throw DomainError("kl_divergence: y must be nonnegative");
    sum += u[i] - y[i];
    if (y[i] > 0.0) sum += y[i] * std::log(y[i] / u[i]);
  }
  return sum;
}

NdArrayF kl_gradient(const NdArrayF& x, const NdArrayF& y, const LowDoseModel& model) {
  model.validate();
  const RayTransform ray(model.geometry);
  NdArrayF residual = lowdose_forward(x, model, ray);
  require_same_shape(residual, y, "kl_gradient");
  for (Index i = 0; i < residual.size(); ++i) {
    if (y[i] < 0.0) throw DomainError("kl_gradient: y must be nonnegative");
    residual[i] -= y[i];
  }
  NdArrayF g = ray.adjoint(residual);
  g *= -model.mu;
  return g;
}

NdArrayF log_transform(const NdArrayF& counts, const LowDoseModel& model) {
  NdArrayF out = counts;
  for (double& v : out.data()) v = -std::log(std::max(v, 1.0) / model.photons) / model.mu;
  return out;
}

NdArrayF fbp_from_counts(const NdArrayF& counts, const LowDoseModel& model) {
  model.validate();
  return RayTransform(model.geometry).fbp(log_transform(counts, model));
}

}  // namespace recon::ct
