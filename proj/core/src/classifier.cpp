#include "assoc/classifier.hpp"

#include <cmath>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

ClassifierWeights normalize_columns(const ClassifierWeights& w) {
  ClassifierWeights out = w;
  Tensor2& m = out.matrix;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sq += m(i, j) * m(i, j);
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DegenerateError("classifier column " + std::to_string(j) + " has zero or non-finite norm");
    }
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) /= norm;
  }
  return out;
}

bool columns_unit_norm(const ClassifierWeights& w, double tolerance) {
  const Tensor2& m = w.matrix;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sq += m(i, j) * m(i, j);
    if (std::abs(std::sqrt(sq) - 1.0) > tolerance) return false;
  }
  return true;
}

ClassifierWeights init_classifier(std::size_t embed_dim, std::size_t num_classes,
                                  std::mt19937_64& rng) {
  if (embed_dim == 0 || num_classes == 0) throw DimensionError("empty classifier shape");
  const double a = std::sqrt(6.0 / static_cast<double>(embed_dim + num_classes));
  std::uniform_real_distribution<double> dist(-a, a);
  ClassifierWeights w{Tensor2(embed_dim, num_classes)};
  for (double& v : w.matrix.values()) v = dist(rng);
  return normalize_columns(w);
}

std::vector<int> predict(const Tensor2& embeddings, const ClassifierWeights& w) {
  const Tensor2 scores = matmul(embeddings, w.matrix);
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace assoc
