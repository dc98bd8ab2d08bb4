#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recon/ndarray.hpp"

namespace recon::prior {

enum class Activation { ReLU, None };

struct ConvLayerSpec {
  Index kernel = 3;  // square, odd side
  Index in = 1;
  Index out = 1;
  bool bias = true;
  Activation act = Activation::ReLU;

  Index weight_count() const { return out * in * kernel * kernel + (bias ? out : 0); }
};

/// Plain stack of same-padded 2-D convolutions (cross-correlation).
struct ConvNetSpec {
  std::vector<ConvLayerSpec> layers;
  bool residual = false;

  /// Throws DomainError on broken channel chains or even kernels.
  void validate() const;
  Index weight_count() const;

  /// 3x3 kernels, channels 1 -> width -> ... -> width -> 1, ReLU between,
  /// residual add. depth counts conv layers (>= 2).
  static ConvNetSpec residual_net(Index width = 8, Index depth = 3, Index kernel = 3);
};

/// Spec plus flat weights. Per layer the weights are stored as
/// [out][in][k][k] followed by bias[out].
class ConvNet {
 public:
  ConvNet() = default;
  ConvNet(ConvNetSpec spec, std::vector<double> weights);

  /// Glorot-uniform kernels (+-sqrt(6 / (fan_in + fan_out))), zero biases.
  static ConvNet glorot(ConvNetSpec spec, std::uint64_t seed);

  const ConvNetSpec& spec() const { return spec_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }

  /// Forward pass on a 2-D patch of any size.
  NdArrayF forward(const NdArrayF& patch) const;

  /// Adds scale * d/dw sum (u(x) - target)^2 into grad and returns the
  /// unscaled squared error sum (u(x) - target)^2.
  double accumulate_gradient(const NdArrayF& input, const NdArrayF& target, double scale,
                             std::vector<double>& grad) const;

 private:
  ConvNetSpec spec_;
  std::vector<double> weights_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Index epochs = 20;
  Index batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainLog {
  double initial_loss = 0.0;           // full-dataset MSE before the first step
  double final_loss = 0.0;             // full-dataset MSE after the last step
  std::vector<double> epoch_loss;      // mean mini-batch MSE seen during each epoch
};

/// Mean squared error over all pixels of all pairs.
double dataset_loss(const ConvNet& net, const std::vector<NdArrayF>& inputs,
                    const std::vector<NdArrayF>& targets);

/// Adam on the mean squared error between net(inputs[i]) and targets[i].
/// Mini-batches come from a seeded shuffle per epoch. Throws NumericalError
/// when the loss turns non-finite.
ConvNet train_convnet(ConvNet net, const std::vector<NdArrayF>& inputs,
                      const std::vector<NdArrayF>& targets, const TrainConfig& cfg,
                      TrainLog* log = nullptr);

/// CNW1 text header followed by little-endian float64 weights.
void write_convnet(const ConvNet& net, const std::filesystem::path& path);
ConvNet read_convnet(const std::filesystem::path& path);

}  // namespace recon::prior
