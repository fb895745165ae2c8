#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "assoc/params.hpp"
#include "assoc/tensor.hpp"

namespace assoc {

enum class Activation { kTanh, kRelu };

struct DenseLayer {
  Tensor2 weight;            // fan_in x fan_out
  std::vector<double> bias;  // fan_out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameters of a fully connected network. Every layer except the last is
/// followed by `activation`; the last layer is linear. Used both for the
/// encoder f(.|theta) and for the critic h(.|phi).
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kTanh;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  std::vector<ParamBlock> blocks();
  std::vector<ConstParamBlock> blocks() const;

  // Same topology, all parameters zero.
  MlpParams zeros_like() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Glorot-uniform weights, zero biases. `widths` = {in, hidden..., out}.
MlpParams init_mlp(std::span<const std::size_t> widths, Activation activation,
                   std::mt19937_64& rng);

Tensor2 encoder_forward(const Tensor2& x, const MlpParams& params);

struct MlpGradients {
  MlpParams params;  // same shapes as the network
  Tensor2 input;     // d loss / d x
};

// Backpropagates `upstream` = d loss / d output through the network at `x`.
MlpGradients encoder_backward(const Tensor2& x, const MlpParams& params, const Tensor2& upstream);

// Adds `scale * other` into `acc` block by block.
void accumulate(MlpParams& acc, const MlpParams& other, double scale = 1.0);

}  // namespace assoc
