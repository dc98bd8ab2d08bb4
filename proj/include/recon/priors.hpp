#pragma once

#include <variant>

#include "recon/convnet.hpp"
#include "recon/dictionary.hpp"
#include "recon/patchwork.hpp"

namespace recon::prior {

struct IdentityPrior {};

/// Separable truncated Gaussian, radius ceil(3 sigma) on every axis. Near
/// the border the kernel is renormalised over the in-bounds taps, so a
/// constant patch maps to the same constant.
struct GaussianSmooth {
  double sigma = 1.0;
};

using PriorModel = std::variant<IdentityPrior, GaussianSmooth, ConvNet, DictionaryModel>;

NdArrayF gaussian_smooth(const NdArrayF& x, double sigma);

/// Applies the model to one patch. ConvNet models take 2-D patches of any
/// size; Dictionary models require their stored patch shape.
NdArrayF denoise_patch(const PriorModel& model, const NdArrayF& patch);

patch::PatchDenoiser make_denoiser(const PriorModel& model);

}  // namespace recon::prior
