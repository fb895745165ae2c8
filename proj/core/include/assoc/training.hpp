#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "assoc/classifier.hpp"
#include "assoc/dataset.hpp"
#include "assoc/early_stopping.hpp"
#include "assoc/episodes.hpp"
#include "assoc/losses.hpp"
#include "assoc/mlp.hpp"
#include "assoc/related_base.hpp"

namespace assoc {

struct ModelConfig {
  static constexpr std::size_t kWideCriticHidden = 1024;  // full-scale critic width

  std::vector<std::size_t> hidden{64};
  std::size_t embedding_dim = 32;
  Activation activation = Activation::kTanh;
  std::size_t critic_hidden = 64;
  Activation critic_activation = Activation::kTanh;

  void validate() const;
};

struct TrainConfig {
  double lr_clf = 1e-3;          // pre-training, fine-tuning, alignment classification steps
  double lr_centroid = 1e-3;     // theta step on the centroid alignment loss
  double lr_adversarial = 1e-5;  // theta step on the adversarial encoder loss
  double lr_critic = 1e-4;       // critic ascent
  std::size_t batch_size = 64;
  ArcmaxConfig pretrain_arcmax{20.0, 0.1};
  ArcmaxConfig finetune_arcmax{5.0, 0.1};
  std::size_t window = 50;
  std::size_t patience = 1;
  std::size_t max_epochs = 400;
  std::size_t validation_episodes = 50;
  std::size_t finetune_steps = 100;
  std::size_t related_per_class = 10;  // B
  bool allow_shared = false;
  std::size_t wrong_related = 0;  // related classes swapped for random ones
  std::size_t critic_iterations = 5;
  double clip = 0.01;
  std::size_t alignment_iterations = 100;
  PrefactorMode centroid_prefactor = PrefactorMode::kAsWritten;
  PrefactorMode adversarial_prefactor = PrefactorMode::kAsWritten;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

/// Encoder theta, classifier W and, during adversarial alignment, critic phi.
struct ModelState {
  MlpParams encoder;
  ClassifierWeights classifier;
  std::optional<MlpParams> critic;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

enum class Variant { kBaseline, kNoAlignment, kCentroid, kAdversarial };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);  // throws ConfigError

// Per-iteration loss curves, summed across episodes and reported as means.
class LossCurves {
 public:
  void add(const std::string& name, std::size_t step, double value);
  std::map<std::string, std::vector<double>> means() const;

 private:
  std::map<std::string, std::vector<std::pair<double, std::size_t>>> sums_;
};

struct PretrainResult {
  ModelState model;  // best in-window snapshot
  EarlyStopTrace trace;
  std::vector<double> epoch_losses;
};

// Minibatch arcmax training of theta and W on the base split with episodic
// nearest-centroid validation and sliding-window early stopping.
PretrainResult pretrain(const LabeledDataset& base, const LabeledDataset& validation,
                        const ModelConfig& model_cfg, const TrainConfig& cfg,
                        const EpisodeSpec& validation_spec);

// Fresh K^n-way classifier trained on the support set with theta frozen.
ModelState finetune_baseline(const ModelState& model, const Tensor2& support_x,
                             std::span<const int> support_y, std::size_t num_classes,
                             const TrainConfig& cfg, std::mt19937_64& rng,
                             LossCurves* curves = nullptr);

struct AlignmentTelemetry {
  std::vector<double> alignment_loss;     // L_ca or L_aa per iteration
  std::vector<double> critic_loss;        // last inner L_h per iteration
  std::vector<double> related_clf_loss;   // L_clf on the related batch
  std::vector<double> novel_clf_loss;     // L_clf on the novel batch
  std::vector<double> max_abs_critic;     // after each outer iteration
  double initial_centroid_distance = 0.0;
  double final_centroid_distance = 0.0;
};

// Mean Euclidean distance from novel embeddings to the centroid of their
// related classes, over the full support and related sets.
double mean_centroid_distance(const MlpParams& encoder, const Tensor2& support_x,
                              std::span<const int> support_y, const LabeledDataset& related,
                              std::size_t num_classes);

// Centroid alignment. `related` carries novel labels (see relabel_related).
// With `alignment_step` false the L_ca update is skipped (no-alignment control).
ModelState align_centroid(const ModelState& model, const Tensor2& support_x,
                          std::span<const int> support_y, const LabeledDataset& related,
                          std::size_t num_classes, const TrainConfig& cfg, std::mt19937_64& rng,
                          AlignmentTelemetry* telemetry = nullptr, bool alignment_step = true);

// Adversarial alignment with a freshly initialized, clipped critic.
ModelState align_adversarial(const ModelState& model, const Tensor2& support_x,
                             std::span<const int> support_y, const LabeledDataset& related,
                             std::size_t num_classes, const ModelConfig& model_cfg,
                             const TrainConfig& cfg, std::mt19937_64& rng,
                             AlignmentTelemetry* telemetry = nullptr);

struct EpisodeReport {
  double accuracy = 0.0;
  std::optional<RelatedBaseMap> related;
  ModelState adapted;
  AlignmentTelemetry telemetry;
};

// Fine-tunes per `variant` on one episode and scores its queries. RNG streams
// derive from (cfg.seed, index) so variants see identical initializations.
EpisodeReport run_episode(const ModelState& pretrained, const LabeledDataset& base,
                          const Episode& episode, std::uint64_t index, Variant variant,
                          const ModelConfig& model_cfg, const TrainConfig& cfg,
                          LossCurves* curves = nullptr);

struct VariantResult {
  Variant variant = Variant::kBaseline;
  AccuracySummary summary;
  std::map<std::string, std::vector<double>> loss_curves;
};

VariantResult evaluate_variant(const ModelState& pretrained, const DatasetSplits& data,
                               Variant variant, const ModelConfig& model_cfg,
                               const TrainConfig& cfg, const EpisodeSpec& spec,
                               std::size_t episodes);

struct ExperimentResult {
  PretrainResult pretrained;
  VariantResult result;
};

// pretrain -> per-episode adaptation -> mean accuracy and 95% CI.
ExperimentResult run_experiment(const DatasetSplits& data, Variant variant,
                                const ModelConfig& model_cfg, const TrainConfig& cfg,
                                const EpisodeSpec& spec, std::size_t episodes);

}  // namespace assoc
