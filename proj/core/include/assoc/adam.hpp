#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "assoc/classifier.hpp"
#include "assoc/mlp.hpp"
#include "assoc/params.hpp"

namespace assoc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one set of parameter blocks. Sized on the first
/// step; later steps must present the same block shapes.
struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(AdamConfig cfg) : config(cfg) {}
};

// One bias-corrected Adam descent step. Throws NumericError naming the block
// if any gradient entry is non-finite; parameters are untouched in that case.
void adam_step(std::span<const ParamBlock> params, std::span<const ConstParamBlock> grads,
               OptimizerState& state);

void adam_step(MlpParams& params, const MlpParams& grads, OptimizerState& state);
void adam_step(ClassifierWeights& w, const Tensor2& grad, OptimizerState& state);

}  // namespace assoc
