#include "assoc/mlp.hpp"

#include <cmath>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(v);
    case Activation::kRelu:
      return v > 0.0 ? v : 0.0;
  }
  return v;
}

// Derivative expressed through the activation output y = act(pre).
double activate_grad(Activation a, double pre, double y) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void check_topology(const MlpParams& params) {
  if (params.layers.empty()) throw DimensionError("MLP has no layers");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.bias.size() != layer.weight.cols()) {
      throw DimensionError("layer " + std::to_string(l) + " bias length " +
                           std::to_string(layer.bias.size()) + " != fan_out " +
                           std::to_string(layer.weight.cols()));
    }
    if (l > 0 && params.layers[l - 1].weight.cols() != layer.weight.rows()) {
      throw DimensionError("layer " + std::to_string(l) + " fan_in does not chain");
    }
  }
}

Tensor2 affine(const Tensor2& x, const DenseLayer& layer) {
  Tensor2 out = matmul(x, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
  }
  return out;
}

struct Tape {
  std::vector<Tensor2> inputs;  // input to each layer
  std::vector<Tensor2> pre;     // pre-activations of hidden layers
  Tensor2 output;
};

Tape forward_tape(const Tensor2& x, const MlpParams& params) {
  check_topology(params);
  if (x.cols() != params.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                         std::to_string(params.input_dim()));
  }
  Tape tape;
  Tensor2 h = x;
  const std::size_t n = params.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    tape.inputs.push_back(h);
    Tensor2 z = affine(h, params.layers[l]);
    if (l + 1 < n) {
      tape.pre.push_back(z);
      for (double& v : z.values()) v = activate(params.activation, v);
    }
    h = std::move(z);
  }
  tape.output = std::move(h);
  return tape;
}

}  // namespace

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().weight.rows();
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().weight.cols();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<ParamBlock> MlpParams::blocks() {
  std::vector<ParamBlock> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    out.push_back({prefix + ".weight", layers[l].weight.values()});
    out.push_back({prefix + ".bias", layers[l].bias});
  }
  return out;
}

std::vector<ConstParamBlock> MlpParams::blocks() const {
  std::vector<ConstParamBlock> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    out.push_back({prefix + ".weight", layers[l].weight.values()});
    out.push_back({prefix + ".bias", layers[l].bias});
  }
  return out;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out;
  out.activation = activation;
  for (const auto& l : layers) {
    out.layers.push_back({Tensor2(l.weight.rows(), l.weight.cols()),
                          std::vector<double>(l.bias.size(), 0.0)});
  }
  return out;
}

MlpParams init_mlp(std::span<const std::size_t> widths, Activation activation,
                   std::mt19937_64& rng) {
  if (widths.size() < 2) throw DimensionError("an MLP needs at least input and output widths");
  MlpParams params;
  params.activation = activation;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    if (fan_in == 0 || fan_out == 0) throw DimensionError("MLP layer width must be positive");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    DenseLayer layer{Tensor2(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weight.values()) w = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Tensor2 encoder_forward(const Tensor2& x, const MlpParams& params) {
  return forward_tape(x, params).output;
}

MlpGradients encoder_backward(const Tensor2& x, const MlpParams& params,
                              const Tensor2& upstream) {
  Tape tape = forward_tape(x, params);
  if (upstream.rows() != tape.output.rows() || upstream.cols() != tape.output.cols()) {
    throw DimensionError("upstream gradient shape does not match network output");
  }
  MlpGradients grads{params.zeros_like(), Tensor2()};
  Tensor2 delta = upstream;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    if (l + 1 < params.layers.size()) {
      // delta currently holds d/d(activation output); map to pre-activation.
      const Tensor2& pre = tape.pre[l];
      const Tensor2& post = tape.inputs[l + 1];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        delta.values()[i] *=
            activate_grad(params.activation, pre.values()[i], post.values()[i]);
      }
    }
    auto& g = grads.params.layers[l];
    g.weight = matmul_tn(tape.inputs[l], delta);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto row = delta.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    delta = matmul_nt(delta, params.layers[l].weight);
  }
  grads.input = std::move(delta);
  return grads;
}

void accumulate(MlpParams& acc, const MlpParams& other, double scale) {
  auto dst = acc.blocks();
  const auto src = other.blocks();
  if (dst.size() != src.size()) throw DimensionError("accumulate: topology mismatch");
  for (std::size_t b = 0; b < dst.size(); ++b) {
    if (dst[b].values.size() != src[b].values.size()) {
      throw DimensionError("accumulate: block " + dst[b].name + " shape mismatch");
    }
    for (std::size_t i = 0; i < dst[b].values.size(); ++i)
      dst[b].values[i] += scale * src[b].values[i];
  }
}

}  // namespace assoc
