#include "recon/priors.hpp"

#include <cmath>

namespace recon::prior {

NdArrayF gaussian_smooth(const NdArrayF& x, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_smooth: sigma must be > 0");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
    taps[t + radius] = std::exp(-0.5 * static_cast<double>(t * t) / (sigma * sigma));
  }

  NdArrayF cur = x;
  const Shape strides = row_major_strides(x.shape());
  for (Index axis = 0; axis < x.rank(); ++axis) {
    const auto n = static_cast<std::ptrdiff_t>(x.dim(axis));
    const Index stride = strides[axis];
    NdArrayF next(x.shape());
    // Every flat index with coordinate 0 along `axis` starts one line.
    for (Index base = 0; base < x.size(); ++base) {
      if ((base / stride) % x.dim(axis) != 0) continue;
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0, wsum = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - radius);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + radius);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          const double w = taps[j - i + radius];
          acc += w * cur[base + static_cast<Index>(j) * stride];
          wsum += w;
        }
        next[base + static_cast<Index>(i) * stride] = acc / wsum;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

NdArrayF denoise_patch(const PriorModel& model, const NdArrayF& patch) {
  return std::visit(
      [&](const auto& m) -> NdArrayF {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, IdentityPrior>) {
          return patch;
        } else if constexpr (std::is_same_v<M, GaussianSmooth>) {
          return gaussian_smooth(patch, m.sigma);
        } else if constexpr (std::is_same_v<M, ConvNet>) {
          return m.forward(patch);
        } else {
          return dictionary_denoise(m, patch);
        }
      },
      model);
}

patch::PatchDenoiser make_denoiser(const PriorModel& model) {
  return [&model](const NdArrayF& p) { return denoise_patch(model, p); };
}

}  // namespace recon::prior
