#include "assoc/adam.hpp"

#include <cmath>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

void adam_step(std::span<const ParamBlock> params, std::span<const ConstParamBlock> grads,
               OptimizerState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameter blocks but " +
                         std::to_string(grads.size()) + " gradient blocks");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.size() != grads[b].values.size()) {
      throw DimensionError("adam_step: gradient shape mismatch for " + params[b].name);
    }
    if (!all_finite(grads[b].values)) {
      throw NumericError("adam_step: non-finite gradient in " + params[b].name);
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.values.size(), 0.0);
      state.second_moment.emplace_back(p.values.size(), 0.0);
    }
  } else if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state was built for a different parameter set");
  }

  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    if (m.size() != params[b].values.size()) {
      throw DimensionError("adam_step: accumulator shape mismatch for " + params[b].name);
    }
    const auto g = grads[b].values;
    auto p = params[b].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void adam_step(MlpParams& params, const MlpParams& grads, OptimizerState& state) {
  const auto p = params.blocks();
  const auto g = grads.blocks();
  adam_step(p, g, state);
}

void adam_step(ClassifierWeights& w, const Tensor2& grad, OptimizerState& state) {
  const ParamBlock p{"classifier", w.matrix.values()};
  const ConstParamBlock g{"classifier", grad.values()};
  adam_step(std::span<const ParamBlock>(&p, 1), std::span<const ConstParamBlock>(&g, 1), state);
}

}  // namespace assoc
