#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "assoc/classifier.hpp"
#include "assoc/mlp.hpp"
#include "assoc/tensor.hpp"

namespace assoc {

/// Scaled-cosine softmax with an additive angular margin on the true class.
struct ArcmaxConfig {
  double scale = 20.0;   // hypersphere radius s
  double margin = 0.1;   // m, radians

  void validate() const;
};

/// Which normalization constant multiplies a summed alignment loss.
enum class PrefactorMode {
  kAsWritten,  // centroid: 1/(N^n N^rb); adversarial: 1/K^n
  kMean,       // 1/N^n for both
};

/// Scalar loss plus the gradients that apply to it. Only the members that
/// make sense for a given loss are populated.
struct LossOutput {
  double value = 0.0;
  std::optional<Tensor2> d_embeddings;
  std::optional<Tensor2> d_classifier;
  std::optional<Tensor2> d_logits;
  std::optional<MlpParams> d_critic;
};

enum class WeightCheck { kRequireUnitNorm, kSkip };

// Column norm tolerance used by WeightCheck::kRequireUnitNorm.
inline constexpr double kUnitNormTolerance = 1e-8;

// Mean arcmax loss. Gradients w.r.t. embeddings and W (taken on W as given,
// i.e. before any re-normalization). kSkip exists for finite-difference
// probes, which necessarily perturb column norms.
LossOutput arcmax_loss(const Tensor2& embeddings, std::span<const int> labels,
                       const ClassifierWeights& w, const ArcmaxConfig& cfg,
                       WeightCheck check = WeightCheck::kRequireUnitNorm);

// Margin-free scaled-cosine cross-entropy.
LossOutput cosmax_loss(const Tensor2& embeddings, std::span<const int> labels,
                       const ClassifierWeights& w, double scale,
                       WeightCheck check = WeightCheck::kRequireUnitNorm);

// Mean cross-entropy over raw logits; populates d_logits.
LossOutput softmax_loss(const Tensor2& logits, std::span<const int> labels);

// Per-class mean embedding; row i is the centroid of class i.
Tensor2 centroids(const Tensor2& embeddings, std::span<const int> labels, std::size_t num_classes);

// Softmax over negative squared distances to every class centroid, pulling
// each novel embedding to its own class centroid. Centroids are constants.
// `related_count` is N^rb, used only by PrefactorMode::kAsWritten.
LossOutput centroid_alignment_loss(const Tensor2& novel_embeddings,
                                   std::span<const int> novel_labels, const Tensor2& centroids,
                                   std::size_t related_count,
                                   PrefactorMode mode = PrefactorMode::kAsWritten);

// Rows [embedding ; one_hot(label)] fed to the critic.
Tensor2 critic_input(const Tensor2& embeddings, std::span<const int> labels,
                     std::size_t num_classes);

// Critic topology: (embed_dim + num_classes) -> hidden -> 1.
MlpParams init_critic(std::size_t embed_dim, std::size_t num_classes, std::size_t hidden,
                      Activation activation, std::mt19937_64& rng);

double critic_forward(std::span<const double> embedding, std::span<const double> label_onehot,
                      const MlpParams& critic);

std::vector<double> critic_scores(const Tensor2& embeddings, std::span<const int> labels,
                                  std::size_t num_classes, const MlpParams& critic);

// mean_h(related) - mean_h(novel); populates d_critic. Callers ascend it.
LossOutput critic_loss(const Tensor2& novel_embeddings, std::span<const int> novel_labels,
                       const Tensor2& related_embeddings, std::span<const int> related_labels,
                       std::size_t num_classes, const MlpParams& critic);

// prefactor * sum_h(novel); populates d_embeddings (critic held fixed).
LossOutput adversarial_encoder_loss(const Tensor2& novel_embeddings,
                                    std::span<const int> novel_labels, std::size_t num_classes,
                                    const MlpParams& critic,
                                    PrefactorMode mode = PrefactorMode::kAsWritten);

MlpParams clip_params(MlpParams params, double bound);

}  // namespace assoc
