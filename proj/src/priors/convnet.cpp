#include "recon/convnet.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "common/bytes.hpp"
#include "recon/rng.hpp"

namespace recon::prior {
namespace {

// Offsets of a zero-padded shift: output rows [lo, hi) read input rows i + d.
struct Range {
  std::ptrdiff_t lo, hi;
};

Range valid_range(std::ptrdiff_t n, std::ptrdiff_t d) {
  return {std::max<std::ptrdiff_t>(0, -d), std::min<std::ptrdiff_t>(n, n - d)};
}

// out[o] = bias[o] + sum_c w[o][c] (*) in[c], same padding.
void conv_forward(const ConvLayerSpec& L, const double* w, const std::vector<double>& in,
                  std::vector<double>& out, Index h, Index wd) {
  const Index plane = h * wd;
  const Index k = L.kernel;
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(wd);
  const double* bias = w + L.out * L.in * k * k;
  out.assign(L.out * plane, 0.0);
  for (Index o = 0; o < L.out; ++o) {
    double* dst = out.data() + o * plane;
    if (L.bias) std::fill(dst, dst + plane, bias[o]);
    for (Index c = 0; c < L.in; ++c) {
      const double* src = in.data() + c * plane;
      const double* kern = w + (o * L.in + c) * k * k;
      for (Index u = 0; u < k; ++u) {
        const auto di = static_cast<std::ptrdiff_t>(u) - r;
        const Range ri = valid_range(H, di);
        for (Index v = 0; v < k; ++v) {
          const auto dj = static_cast<std::ptrdiff_t>(v) - r;
          const Range rj = valid_range(W, dj);
          const double kw = kern[u * k + v];
          for (std::ptrdiff_t i = ri.lo; i < ri.hi; ++i) {
            double* drow = dst + i * W;
            const double* srow = src + (i + di) * W + dj;
            for (std::ptrdiff_t j = rj.lo; j < rj.hi; ++j) drow[j] += kw * srow[j];
          }
        }
      }
    }
  }
}

// Given dz for one layer, accumulate weight gradients and (optionally) din.
void conv_backward(const ConvLayerSpec& L, const double* w, const std::vector<double>& in,
                   const std::vector<double>& dz, double* gw, std::vector<double>* din, Index h,
                   Index wd) {
  const Index plane = h * wd;
  const Index k = L.kernel;
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(wd);
  if (din) din->assign(L.in * plane, 0.0);
  double* gbias = gw + L.out * L.in * k * k;
  for (Index o = 0; o < L.out; ++o) {
    const double* g = dz.data() + o * plane;
    if (L.bias) gbias[o] += std::accumulate(g, g + plane, 0.0);
    for (Index c = 0; c < L.in; ++c) {
      const double* src = in.data() + c * plane;
      double* dsrc = din ? din->data() + c * plane : nullptr;
      const double* kern = w + (o * L.in + c) * k * k;
      double* gkern = gw + (o * L.in + c) * k * k;
      for (Index u = 0; u < k; ++u) {
        const auto di = static_cast<std::ptrdiff_t>(u) - r;
        const Range ri = valid_range(H, di);
        for (Index v = 0; v < k; ++v) {
          const auto dj = static_cast<std::ptrdiff_t>(v) - r;
          const Range rj = valid_range(W, dj);
          const double kw = kern[u * k + v];
          double acc = 0.0;
          for (std::ptrdiff_t i = ri.lo; i < ri.hi; ++i) {
            const double* grow = g + i * W;
            const double* srow = src + (i + di) * W + dj;
            for (std::ptrdiff_t j = rj.lo; j < rj.hi; ++j) acc += grow[j] * srow[j];
            if (dsrc) {
              double* drow = dsrc + (i + di) * W + dj;
              for (std::ptrdiff_t j = rj.lo; j < rj.hi; ++j) drow[j] += kw * grow[j];
            }
          }
          gkern[u * k + v] += acc;
        }
      }
    }
  }
}

void check_patch(const NdArrayF& patch) {
  if (patch.rank() != 2) {
    throw ShapeError("ConvNet expects a 2-D patch, got " + shape_string(patch.shape()));
  }
}

const char* act_name(Activation a) { return a == Activation::ReLU ? "relu" : "none"; }

}  // namespace

void ConvNetSpec::validate() const {
  if (layers.empty()) throw DomainError("ConvNetSpec: no layers");
  if (layers.front().in != 1) throw DomainError("ConvNetSpec: first layer must take 1 channel");
  if (layers.back().out != 1) throw DomainError("ConvNetSpec: last layer must emit 1 channel");
  for (Index l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    if (L.kernel == 0 || L.kernel % 2 == 0) {
      throw DomainError("ConvNetSpec: layer " + std::to_string(l) + " kernel must be odd");
    }
    if (L.in == 0 || L.out == 0) throw DomainError("ConvNetSpec: zero channel count");
    if (l > 0 && layers[l - 1].out != L.in) {
      throw DomainError("ConvNetSpec: layer " + std::to_string(l) + " takes " +
                        std::to_string(L.in) + " channels but receives " +
                        std::to_string(layers[l - 1].out));
    }
  }
}

Index ConvNetSpec::weight_count() const {
  Index n = 0;
  for (const auto& L : layers) n += L.weight_count();
  return n;
}

ConvNetSpec ConvNetSpec::residual_net(Index width, Index depth, Index kernel) {
  if (depth < 2) throw DomainError("residual_net: depth must be >= 2");
  ConvNetSpec spec;
  for (Index l = 0; l < depth; ++l) {
    const bool last = l + 1 == depth;
    spec.layers.push_back({kernel, l == 0 ? 1 : width, last ? 1 : width, true,
                           last ? Activation::None : Activation::ReLU});
  }
  spec.residual = true;
  return spec;
}

ConvNet::ConvNet(ConvNetSpec spec, std::vector<double> weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  spec_.validate();
  if (weights_.size() != spec_.weight_count()) {
    throw DomainError("ConvNet: spec needs " + std::to_string(spec_.weight_count()) +
                      " weights, got " + std::to_string(weights_.size()));
  }
}

ConvNet ConvNet::glorot(ConvNetSpec spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<double> w;
  w.reserve(spec.weight_count());
  for (const auto& L : spec.layers) {
    const double kk = static_cast<double>(L.kernel * L.kernel);
    const double limit = std::sqrt(6.0 / (kk * static_cast<double>(L.in + L.out)));
    for (Index i = 0; i < L.out * L.in * L.kernel * L.kernel; ++i) w.push_back(rng.uniform(-limit, limit));
    if (L.bias) w.insert(w.end(), L.out, 0.0);
  }
  return ConvNet(std::move(spec), std::move(w));
}

NdArrayF ConvNet::forward(const NdArrayF& patch) const {
  check_patch(patch);
  const Index h = patch.dim(0), wd = patch.dim(1);
  std::vector<double> a(patch.data().begin(), patch.data().end()), z;
  const double* w = weights_.data();
  for (const auto& L : spec_.layers) {
    conv_forward(L, w, a, z, h, wd);
    if (L.act == Activation::ReLU) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    a.swap(z);
    w += L.weight_count();
  }
  NdArrayF out(patch.shape(), std::move(a));
  if (spec_.residual) out += patch;
  return out;
}

double ConvNet::accumulate_gradient(const NdArrayF& input, const NdArrayF& target, double scale,
                                    std::vector<double>& grad) const {
  check_patch(input);
  require_same_shape(input, target, "ConvNet::accumulate_gradient");
  if (grad.size() != weights_.size()) grad.assign(weights_.size(), 0.0);
  const Index h = input.dim(0), wd = input.dim(1);
  const Index n_layers = spec_.layers.size();

  std::vector<std::vector<double>> acts(n_layers + 1);
  std::vector<Index> offsets(n_layers);
  acts[0].assign(input.data().begin(), input.data().end());
  Index off = 0;
  for (Index l = 0; l < n_layers; ++l) {
    const auto& L = spec_.layers[l];
    offsets[l] = off;
    conv_forward(L, weights_.data() + off, acts[l], acts[l + 1], h, wd);
    if (L.act == Activation::ReLU) {
      for (double& v : acts[l + 1]) v = std::max(v, 0.0);
    }
    off += L.weight_count();
  }

  std::vector<double> delta(acts.back().size());
  double sse = 0.0;
  for (Index i = 0; i < delta.size(); ++i) {
    const double e = acts.back()[i] + (spec_.residual ? input[i] : 0.0) - target[i];
    sse += e * e;
    delta[i] = 2.0 * scale * e;
  }

  std::vector<double> din;
  for (Index l = n_layers; l-- > 0;) {
    const auto& L = spec_.layers[l];
    if (L.act == Activation::ReLU) {
      const auto& a = acts[l + 1];
      for (Index i = 0; i < delta.size(); ++i) {
        if (a[i] <= 0.0) delta[i] = 0.0;
      }
    }
    conv_backward(L, weights_.data() + offsets[l], acts[l], delta, grad.data() + offsets[l],
                  l > 0 ? &din : nullptr, h, wd);
    if (l > 0) delta.swap(din);
  }
  return sse;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("train: learning rate must be > 0");
  if (epochs < 1) throw DomainError("train: epochs must be >= 1");
  if (batch_size < 1) throw DomainError("train: batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw DomainError("train: Adam betas must lie in [0, 1)");
  }
}

double dataset_loss(const ConvNet& net, const std::vector<NdArrayF>& inputs,
                    const std::vector<NdArrayF>& targets) {
  if (inputs.size() != targets.size()) throw ShapeError("dataset: input/target count mismatch");
  double sse = 0.0;
  Index n = 0;
  for (Index i = 0; i < inputs.size(); ++i) {
    require_same_shape(inputs[i], targets[i], "dataset_loss");
    const NdArrayF out = net.forward(inputs[i]);
    for (Index k = 0; k < out.size(); ++k) sse += (out[k] - targets[i][k]) * (out[k] - targets[i][k]);
    n += out.size();
  }
  return n ? sse / static_cast<double>(n) : 0.0;
}

ConvNet train_convnet(ConvNet net, const std::vector<NdArrayF>& inputs,
                      const std::vector<NdArrayF>& targets, const TrainConfig& cfg,
                      TrainLog* log) {
  cfg.validate();
  if (inputs.empty()) throw DomainError("train_convnet: empty dataset");
  if (inputs.size() != targets.size()) {
    throw ShapeError("train_convnet: " + std::to_string(inputs.size()) + " inputs but " +
                     std::to_string(targets.size()) + " targets");
  }
  for (Index i = 0; i < inputs.size(); ++i) {
    require_same_shape(inputs[i], targets[i], "train_convnet");
    check_patch(inputs[i]);
  }

  TrainLog local;
  local.initial_loss = dataset_loss(net, inputs, targets);
  if (!std::isfinite(local.initial_loss)) {
    throw NumericalError("train_convnet: initial loss is not finite");
  }

  const Index n_w = net.weights().size();
  std::vector<double> m(n_w, 0.0), v(n_w, 0.0), grad(n_w);
  std::vector<Index> order(inputs.size());
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = Rng::substream(cfg.seed, "shuffle");
  double b1t = 1.0, b2t = 1.0;

  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_sse = 0.0;
    Index epoch_px = 0;
    for (Index start = 0; start < order.size(); start += cfg.batch_size) {
      const Index stop = std::min(order.size(), start + cfg.batch_size);
      Index px = 0;
      for (Index b = start; b < stop; ++b) px += inputs[order[b]].size();
      std::fill(grad.begin(), grad.end(), 0.0);
      double sse = 0.0;
      for (Index b = start; b < stop; ++b) {
        sse += net.accumulate_gradient(inputs[order[b]], targets[order[b]],
                                       1.0 / static_cast<double>(px), grad);
      }
      if (!std::isfinite(sse)) {
        throw NumericalError("train_convnet: loss became non-finite in epoch " +
                             std::to_string(epoch + 1));
      }
      epoch_sse += sse;
      epoch_px += px;

      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      auto& w = net.weights();
      for (Index i = 0; i < n_w; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / (1.0 - b1t);
        const double vhat = v[i] / (1.0 - b2t);
        w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    }
    local.epoch_loss.push_back(epoch_sse / static_cast<double>(epoch_px));
  }
  local.final_loss = dataset_loss(net, inputs, targets);
  if (!std::isfinite(local.final_loss)) throw NumericalError("train_convnet: final loss is not finite");
  if (log) *log = std::move(local);
  return net;
}

void write_convnet(const ConvNet& net, const std::filesystem::path& path) {
  std::ostringstream head;
  head << "CNW1\n";
  for (const auto& L : net.spec().layers) {
    head << "conv " << L.kernel << ' ' << L.in << ' ' << L.out << ' ' << (L.bias ? 1 : 0) << ' '
         << act_name(L.act) << '\n';
  }
  head << "residual " << (net.spec().residual ? 1 : 0) << "\ndata:\n";
  std::string bytes = head.str();
  for (double w : net.weights()) detail::put_f64(bytes, w);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

ConvNet read_convnet(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  const auto marker = raw.find("data:\n");
  if (raw.rfind("CNW1\n", 0) != 0 || marker == std::string::npos) {
    throw BadMagicError("not a CNW1 weight file" + where);
  }
  std::istringstream head(raw.substr(5, marker - 5));
  ConvNetSpec spec;
  bool have_residual = false;
  std::string line;
  while (std::getline(head, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "conv") {
      ConvLayerSpec L;
      int bias = 0;
      std::string act;
      if (!(ls >> L.kernel >> L.in >> L.out >> bias >> act) || (act != "relu" && act != "none")) {
        throw FormatError("malformed layer line '" + line + "'" + where);
      }
      L.bias = bias != 0;
      L.act = act == "relu" ? Activation::ReLU : Activation::None;
      spec.layers.push_back(L);
    } else if (word == "residual") {
      int r = 0;
      if (!(ls >> r)) throw FormatError("malformed residual line" + where);
      spec.residual = r != 0;
      have_residual = true;
    } else {
      throw FormatError("unknown header line '" + line + "'" + where);
    }
  }
  if (!have_residual) throw FormatError("missing residual line" + where);
  spec.validate();
  const Index n = spec.weight_count();
  const Index payload = raw.size() - (marker + 6);
  if (payload != 8 * n) {
    throw TruncatedError("expected " + std::to_string(8 * n) + " weight bytes, found " +
                         std::to_string(payload) + where);
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data()) + marker + 6;
  std::vector<double> w(n);
  for (Index i = 0; i < n; ++i) w[i] = detail::get_f64(bytes + 8 * i);
  return ConvNet(std::move(spec), std::move(w));
}

}  // namespace recon::prior
