#pragma once

#include <cstddef>
#include <random>

#include "assoc/tensor.hpp"

namespace assoc {

/// Linear classifier W (embed_dim x num_classes); column j is the class
/// prototype w_j. Cosine-based losses require unit-norm columns.
struct ClassifierWeights {
  Tensor2 matrix;

  std::size_t embed_dim() const noexcept { return matrix.rows(); }
  std::size_t num_classes() const noexcept { return matrix.cols(); }

  friend bool operator==(const ClassifierWeights&, const ClassifierWeights&) = default;
};

// Throws DegenerateError on a zero column.
ClassifierWeights normalize_columns(const ClassifierWeights& w);

bool columns_unit_norm(const ClassifierWeights& w, double tolerance);

// Glorot-uniform draw followed by column normalization.
ClassifierWeights init_classifier(std::size_t embed_dim, std::size_t num_classes,
                                  std::mt19937_64& rng);

// Scores W^T z for every row of `embeddings`; ties resolve to the lowest class.
std::vector<int> predict(const Tensor2& embeddings, const ClassifierWeights& w);

}  // namespace assoc
