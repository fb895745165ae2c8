#pragma once

#include <random>
#include <vector>

#include "assoc/classifier.hpp"
#include "assoc/mlp.hpp"
#include "assoc/tensor.hpp"

namespace assoc::testing {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                             double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Tensor2 t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  std::vector<int> out(n);
  for (int& y : out) y = pick(rng);
  return out;
}

// Every class appears at least once.
inline std::vector<int> covering_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
  std::vector<int> out = random_labels(n, classes, rng);
  for (std::size_t c = 0; c < classes && c < n; ++c) out[c] = static_cast<int>(c);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline ClassifierWeights random_classifier(std::size_t embed, std::size_t classes,
                                           std::mt19937_64& rng) {
  return normalize_columns({random_tensor(embed, classes, rng)});
}

}  // namespace assoc::testing
