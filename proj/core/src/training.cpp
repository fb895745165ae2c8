#include "assoc/training.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "assoc/adam.hpp"
#include "assoc/errors.hpp"

namespace assoc {

namespace {

// stream ids for stream_rng; stream 0 is reserved for episode sampling.
constexpr std::uint64_t kFinetuneStream = 1;
constexpr std::uint64_t kAlignStream = 2;
constexpr std::uint64_t kSubstituteStream = 3;
constexpr std::uint64_t kPretrainStream = 101;
constexpr std::uint64_t kValidationStream = 102;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

AdamConfig adam_with(double lr) {
  AdamConfig cfg;
  cfg.learning_rate = lr;
  return cfg;
}

std::vector<int> local_labels(const LabeledDataset& data, const std::vector<int>& roster) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto it = std::lower_bound(roster.begin(), roster.end(), data.labels[i]);
    out[i] = static_cast<int>(it - roster.begin());
  }
  return out;
}

double episodic_validation_accuracy(const MlpParams& encoder, const std::vector<Episode>& episodes) {
  double total = 0.0;
  for (const auto& ep : episodes) {
    const Tensor2 zs = encoder_forward(ep.support_x, encoder);
    const Tensor2 zq = encoder_forward(ep.query_x, encoder);
    total += accuracy(nearest_centroid_classify(zs, ep.support_y, ep.spec.way, zq), ep.query_y);
  }
  return total / static_cast<double>(episodes.size());
}

// Per-class pools of related rows, each consumed without replacement and
// reshuffled when exhausted.
class RelatedSampler {
 public:
  RelatedSampler(const LabeledDataset& related, std::size_t num_classes, std::mt19937_64& rng)
      : pools_(num_classes), cursors_(num_classes, 0) {
    for (std::size_t i = 0; i < related.size(); ++i) {
      const int y = related.labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
        throw MappingError("related example carries label " + std::to_string(y) +
                           " outside the novel range");
      }
      pools_[static_cast<std::size_t>(y)].push_back(i);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (pools_[c].empty()) {
        throw EmptySetError("novel class " + std::to_string(c) + " has no related examples");
      }
      std::shuffle(pools_[c].begin(), pools_[c].end(), rng);
    }
  }

  std::vector<std::size_t> draw(std::size_t per_class, std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    out.reserve(per_class * pools_.size());
    for (std::size_t c = 0; c < pools_.size(); ++c) {
      for (std::size_t t = 0; t < per_class; ++t) {
        if (cursors_[c] == pools_[c].size()) {
          std::shuffle(pools_[c].begin(), pools_[c].end(), rng);
          cursors_[c] = 0;
        }
        out.push_back(pools_[c][cursors_[c]++]);
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::size_t>> pools_;
  std::vector<std::size_t> cursors_;
};

struct Batch {
  Tensor2 novel_x;
  std::vector<int> novel_y;
  Tensor2 related_x;
  std::vector<int> related_y;
};

class BatchSource {
 public:
  BatchSource(const Tensor2& support_x, std::span<const int> support_y,
              const LabeledDataset& related, std::size_t num_classes, std::size_t batch_size,
              std::mt19937_64& rng)
      : support_x_(support_x),
        support_y_(support_y),
        related_(related),
        batch_size_(batch_size),
        per_class_(std::max<std::size_t>(1, batch_size / num_classes)),
        sampler_(related, num_classes, rng) {
    if (support_x.rows() == 0) throw EmptySetError("alignment needs a nonempty support set");
  }

  Batch next(std::mt19937_64& rng) {
    Batch b;
    std::uniform_int_distribution<std::size_t> pick(0, support_x_.rows() - 1);
    std::vector<std::size_t> rows(batch_size_);
    for (auto& r : rows) r = pick(rng);
    b.novel_x = gather_rows(support_x_, rows);
    for (std::size_t r : rows) b.novel_y.push_back(support_y_[r]);
    const auto rel = sampler_.draw(per_class_, rng);
    b.related_x = gather_rows(related_.features, rel);
    for (std::size_t r : rel) b.related_y.push_back(related_.labels[r]);
    return b;
  }

 private:
  const Tensor2& support_x_;
  std::span<const int> support_y_;
  const LabeledDataset& related_;
  std::size_t batch_size_;
  std::size_t per_class_;
  RelatedSampler sampler_;
};

struct ClassifierOptimizers {
  OptimizerState classifier;
  OptimizerState encoder;
};

// The three classification updates shared by both alignment algorithms:
// W on the related batch, then W and theta on the novel batch.
void classification_updates(ModelState& model, const Batch& b, const TrainConfig& cfg,
                            ClassifierOptimizers& opt, AlignmentTelemetry* telemetry) {
  const Tensor2 zr = encoder_forward(b.related_x, model.encoder);
  const LossOutput lr = arcmax_loss(zr, b.related_y, model.classifier, cfg.finetune_arcmax);
  adam_step(model.classifier, *lr.d_classifier, opt.classifier);
  model.classifier = normalize_columns(model.classifier);

  const Tensor2 zn = encoder_forward(b.novel_x, model.encoder);
  const LossOutput ln = arcmax_loss(zn, b.novel_y, model.classifier, cfg.finetune_arcmax);
  adam_step(model.classifier, *ln.d_classifier, opt.classifier);
  model.classifier = normalize_columns(model.classifier);
  const MlpGradients g = encoder_backward(b.novel_x, model.encoder, *ln.d_embeddings);
  adam_step(model.encoder, g.params, opt.encoder);

  if (telemetry != nullptr) {
    telemetry->related_clf_loss.push_back(lr.value);
    telemetry->novel_clf_loss.push_back(ln.value);
  }
}

double max_abs_param(const MlpParams& p) {
  double m = 0.0;
  for (const auto& b : p.blocks()) m = std::max(m, max_abs(b.values));
  return m;
}

}  // namespace

void ModelConfig::validate() const {
  require(embedding_dim > 0, "model.embedding must be positive");
  require(critic_hidden > 0, "model.critic_hidden must be positive");
  for (std::size_t h : hidden) require(h > 0, "model.hidden widths must be positive");
}

void TrainConfig::validate() const {
  for (double lr : {lr_clf, lr_centroid, lr_adversarial, lr_critic})
    require(lr > 0.0 && std::isfinite(lr), "learning rates must be positive");
  require(batch_size > 0, "train.batch_size must be positive");
  require(window >= 2, "train.window must be >= 2");
  require(patience >= 1, "train.patience must be >= 1");
  require(max_epochs >= 1, "train.max_epochs must be >= 1");
  require(validation_episodes >= 1, "train.validation_episodes must be >= 1");
  require(related_per_class >= 1, "train.related_per_class must be >= 1");
  require(wrong_related <= related_per_class, "train.wrong_related cannot exceed B");
  require(critic_iterations >= 1, "train.critic_iterations must be >= 1");
  require(clip > 0.0, "train.clip must be positive");
  try {
    pretrain_arcmax.validate();
    finetune_arcmax.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline:
      return "baseline";
    case Variant::kNoAlignment:
      return "no_alignment";
    case Variant::kCentroid:
      return "centroid";
    case Variant::kAdversarial:
      return "adversarial";
  }
  return "baseline";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::kBaseline, Variant::kNoAlignment, Variant::kCentroid,
                    Variant::kAdversarial}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown variant '" + std::string(text) +
                    "' (expected baseline, no_alignment, centroid or adversarial)");
}

void LossCurves::add(const std::string& name, std::size_t step, double value) {
  auto& slots = sums_[name];
  if (slots.size() <= step) slots.resize(step + 1, {0.0, 0});
  slots[step].first += value;
  slots[step].second += 1;
}

std::map<std::string, std::vector<double>> LossCurves::means() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, slots] : sums_) {
    auto& v = out[name];
    for (const auto& [sum, count] : slots) v.push_back(count == 0 ? 0.0 : sum / count);
  }
  return out;
}

PretrainResult pretrain(const LabeledDataset& base, const LabeledDataset& validation,
                        const ModelConfig& model_cfg, const TrainConfig& cfg,
                        const EpisodeSpec& validation_spec) {
  model_cfg.validate();
  cfg.validate();
  if (base.size() == 0) throw EmptySetError("pretrain: base split is empty");
  if (validation.size() == 0) throw EmptySetError("pretrain: validation split is empty");

  auto rng = stream_rng(cfg.seed, 0, kPretrainStream);
  const std::vector<int> roster = base.classes();
  const std::vector<int> labels = local_labels(base, roster);

  std::vector<std::size_t> widths{base.dim()};
  widths.insert(widths.end(), model_cfg.hidden.begin(), model_cfg.hidden.end());
  widths.push_back(model_cfg.embedding_dim);

  ModelState model;
  model.encoder = init_mlp(widths, model_cfg.activation, rng);
  model.classifier = init_classifier(model_cfg.embedding_dim, roster.size(), rng);
  OptimizerState opt_encoder(adam_with(cfg.lr_clf));
  OptimizerState opt_classifier(adam_with(cfg.lr_clf));

  auto val_rng = stream_rng(cfg.seed, 0, kValidationStream);
  std::vector<Episode> val_episodes;
  for (std::size_t e = 0; e < cfg.validation_episodes; ++e)
    val_episodes.push_back(sample_episode(validation, validation_spec, val_rng));

  PretrainResult result;
  EarlyStopper stopper(cfg.window, cfg.patience);
  std::deque<std::pair<std::size_t, ModelState>> snapshots;
  std::vector<std::size_t> order(base.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        const Tensor2 x = gather_rows(base.features, rows);
        std::vector<int> y;
        y.reserve(rows.size());
        for (std::size_t r : rows) y.push_back(labels[r]);

        const Tensor2 z = encoder_forward(x, model.encoder);
        const LossOutput loss = arcmax_loss(z, y, model.classifier, cfg.pretrain_arcmax);
        const MlpGradients g = encoder_backward(x, model.encoder, *loss.d_embeddings);
        adam_step(model.encoder, g.params, opt_encoder);
        adam_step(model.classifier, *loss.d_classifier, opt_classifier);
        model.classifier = normalize_columns(model.classifier);
        loss_sum += loss.value;
        ++batches;
      }
    } catch (const NumericError&) {
      throw DivergenceError("pretrain", epoch);
    } catch (const DegenerateError&) {
      throw DivergenceError("pretrain", epoch);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(batches));

    const double acc = episodic_validation_accuracy(model.encoder, val_episodes);
    snapshots.emplace_back(epoch, model);
    if (snapshots.size() > cfg.window) snapshots.pop_front();
    if (stopper.observe(acc)) break;
  }

  result.trace = stopper.finish();
  for (auto& [epoch, snapshot] : snapshots) {
    if (epoch == result.trace.best_epoch) {
      result.model = std::move(snapshot);
      break;
    }
  }
  return result;
}

ModelState finetune_baseline(const ModelState& model, const Tensor2& support_x,
                             std::span<const int> support_y, std::size_t num_classes,
                             const TrainConfig& cfg, std::mt19937_64& rng, LossCurves* curves) {
  if (support_x.rows() == 0) throw EmptySetError("finetune: support set is empty");
  ModelState out;
  out.encoder = model.encoder;
  out.classifier = init_classifier(model.encoder.output_dim(), num_classes, rng);
  const Tensor2 z = encoder_forward(support_x, out.encoder);
  OptimizerState opt(adam_with(cfg.lr_clf));
  for (std::size_t step = 0; step < cfg.finetune_steps; ++step) {
    try {
      const LossOutput loss = arcmax_loss(z, support_y, out.classifier, cfg.finetune_arcmax);
      adam_step(out.classifier, *loss.d_classifier, opt);
      out.classifier = normalize_columns(out.classifier);
      if (curves != nullptr) curves->add("finetune", step, loss.value);
    } catch (const NumericError&) {
      throw DivergenceError("finetune", step);
    } catch (const DegenerateError&) {
      throw DivergenceError("finetune", step);
    }
  }
  return out;
}

double mean_centroid_distance(const MlpParams& encoder, const Tensor2& support_x,
                              std::span<const int> support_y, const LabeledDataset& related,
                              std::size_t num_classes) {
  const Tensor2 zs = encoder_forward(support_x, encoder);
  const Tensor2 mu = centroids(encoder_forward(related.features, encoder), related.labels,
                               num_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < zs.rows(); ++i)
    total += std::sqrt(squared_distance(zs.row(i), mu.row(static_cast<std::size_t>(support_y[i]))));
  return total / static_cast<double>(zs.rows());
}

ModelState align_centroid(const ModelState& model, const Tensor2& support_x,
                          std::span<const int> support_y, const LabeledDataset& related,
                          std::size_t num_classes, const TrainConfig& cfg, std::mt19937_64& rng,
                          AlignmentTelemetry* telemetry, bool alignment_step) {
  ModelState out = model;
  if (cfg.alignment_iterations == 0) return out;
  BatchSource source(support_x, support_y, related, num_classes, cfg.batch_size, rng);
  OptimizerState opt_align(adam_with(cfg.lr_centroid));
  ClassifierOptimizers opt{OptimizerState(adam_with(cfg.lr_clf)),
                           OptimizerState(adam_with(cfg.lr_clf))};
  if (telemetry != nullptr) {
    telemetry->initial_centroid_distance =
        mean_centroid_distance(out.encoder, support_x, support_y, related, num_classes);
  }

  for (std::size_t t = 0; t < cfg.alignment_iterations; ++t) {
    const Batch b = source.next(rng);
    try {
      if (alignment_step) {
        const Tensor2 zn = encoder_forward(b.novel_x, out.encoder);
        const Tensor2 zr = encoder_forward(b.related_x, out.encoder);
        const Tensor2 mu = centroids(zr, b.related_y, num_classes);
        const LossOutput loss = centroid_alignment_loss(zn, b.novel_y, mu, b.related_x.rows(),
                                                        cfg.centroid_prefactor);
        const MlpGradients g = encoder_backward(b.novel_x, out.encoder, *loss.d_embeddings);
        adam_step(out.encoder, g.params, opt_align);
        if (telemetry != nullptr) telemetry->alignment_loss.push_back(loss.value);
      }
      classification_updates(out, b, cfg, opt, telemetry);
    } catch (const NumericError&) {
      throw DivergenceError("align_centroid", t);
    } catch (const DegenerateError&) {
      throw DivergenceError("align_centroid", t);
    }
  }
  if (telemetry != nullptr) {
    telemetry->final_centroid_distance =
        mean_centroid_distance(out.encoder, support_x, support_y, related, num_classes);
  }
  return out;
}

ModelState align_adversarial(const ModelState& model, const Tensor2& support_x,
                             std::span<const int> support_y, const LabeledDataset& related,
                             std::size_t num_classes, const ModelConfig& model_cfg,
                             const TrainConfig& cfg, std::mt19937_64& rng,
                             AlignmentTelemetry* telemetry) {
  ModelState out = model;
  if (cfg.alignment_iterations == 0) return out;
  BatchSource source(support_x, support_y, related, num_classes, cfg.batch_size, rng);
  MlpParams critic = init_critic(out.encoder.output_dim(), num_classes, model_cfg.critic_hidden,
                                 model_cfg.critic_activation, rng);
  OptimizerState opt_critic(adam_with(cfg.lr_critic));
  OptimizerState opt_align(adam_with(cfg.lr_adversarial));
  ClassifierOptimizers opt{OptimizerState(adam_with(cfg.lr_clf)),
                           OptimizerState(adam_with(cfg.lr_clf))};
  if (telemetry != nullptr) {
    telemetry->initial_centroid_distance =
        mean_centroid_distance(out.encoder, support_x, support_y, related, num_classes);
  }

  for (std::size_t t = 0; t < cfg.alignment_iterations; ++t) {
    const Batch b = source.next(rng);
    try {
      const Tensor2 zn = encoder_forward(b.novel_x, out.encoder);
      const Tensor2 zr = encoder_forward(b.related_x, out.encoder);
      double last_critic_loss = 0.0;
      for (std::size_t i = 0; i < cfg.critic_iterations; ++i) {
        const LossOutput lh = critic_loss(zn, b.novel_y, zr, b.related_y, num_classes, critic);
        // Ascent on L_h == descent on -L_h.
        MlpParams ascent = *lh.d_critic;
        for (auto& block : ascent.blocks())
          for (double& v : block.values) v = -v;
        adam_step(critic, ascent, opt_critic);
        critic = clip_params(std::move(critic), cfg.clip);
        last_critic_loss = lh.value;
      }
      const LossOutput la =
          adversarial_encoder_loss(zn, b.novel_y, num_classes, critic, cfg.adversarial_prefactor);
      const MlpGradients g = encoder_backward(b.novel_x, out.encoder, *la.d_embeddings);
      adam_step(out.encoder, g.params, opt_align);
      classification_updates(out, b, cfg, opt, telemetry);
      if (telemetry != nullptr) {
        telemetry->critic_loss.push_back(last_critic_loss);
        telemetry->alignment_loss.push_back(la.value);
        telemetry->max_abs_critic.push_back(max_abs_param(critic));
      }
    } catch (const NumericError&) {
      throw DivergenceError("align_adversarial", t);
    } catch (const DegenerateError&) {
      throw DivergenceError("align_adversarial", t);
    }
  }
  out.critic = std::move(critic);
  if (telemetry != nullptr) {
    telemetry->final_centroid_distance =
        mean_centroid_distance(out.encoder, support_x, support_y, related, num_classes);
  }
  return out;
}

EpisodeReport run_episode(const ModelState& pretrained, const LabeledDataset& base,
                          const Episode& episode, std::uint64_t index, Variant variant,
                          const ModelConfig& model_cfg, const TrainConfig& cfg,
                          LossCurves* curves) {
  const std::size_t way = episode.spec.way;
  EpisodeReport report;
  auto ft_rng = stream_rng(cfg.seed, index, kFinetuneStream);
  report.adapted = finetune_baseline(pretrained, episode.support_x, episode.support_y, way, cfg,
                                     ft_rng, curves);

  if (variant != Variant::kBaseline) {
    const SimilarityMatrix m = compute_similarity(base, report.adapted.encoder,
                                                  report.adapted.classifier);
    RelatedBaseMap map = select_related(m, cfg.related_per_class, cfg.allow_shared);
    if (cfg.wrong_related > 0) {
      auto sub_rng = stream_rng(cfg.seed, index, kSubstituteStream);
      map = substitute_random(map, cfg.wrong_related, m.base_ids, sub_rng);
    }
    const LabeledDataset related = gather_related(base, map);
    report.related = map;

    auto align_rng = stream_rng(cfg.seed, index, kAlignStream);
    if (variant == Variant::kAdversarial) {
      report.adapted = align_adversarial(report.adapted, episode.support_x, episode.support_y,
                                         related, way, model_cfg, cfg, align_rng,
                                         &report.telemetry);
    } else {
      report.adapted = align_centroid(report.adapted, episode.support_x, episode.support_y,
                                      related, way, cfg, align_rng, &report.telemetry,
                                      variant == Variant::kCentroid);
    }
    if (curves != nullptr) {
      const auto& tel = report.telemetry;
      for (std::size_t t = 0; t < tel.alignment_loss.size(); ++t)
        curves->add(variant == Variant::kAdversarial ? "adversarial_encoder" : "centroid_alignment",
                    t, tel.alignment_loss[t]);
      for (std::size_t t = 0; t < tel.critic_loss.size(); ++t)
        curves->add("critic", t, tel.critic_loss[t]);
      for (std::size_t t = 0; t < tel.related_clf_loss.size(); ++t)
        curves->add("related_classification", t, tel.related_clf_loss[t]);
      for (std::size_t t = 0; t < tel.novel_clf_loss.size(); ++t)
        curves->add("novel_classification", t, tel.novel_clf_loss[t]);
    }
  }

  const Tensor2 zq = encoder_forward(episode.query_x, report.adapted.encoder);
  report.accuracy = accuracy(predict(zq, report.adapted.classifier), episode.query_y);
  return report;
}

VariantResult evaluate_variant(const ModelState& pretrained, const DatasetSplits& data,
                               Variant variant, const ModelConfig& model_cfg,
                               const TrainConfig& cfg, const EpisodeSpec& spec,
                               std::size_t episodes) {
  LossCurves curves;
  const EpisodeRunner runner = [&](const Episode& ep,
                                   std::uint64_t index) -> std::optional<double> {
    try {
      return run_episode(pretrained, data.base, ep, index, variant, model_cfg, cfg, &curves)
          .accuracy;
    } catch (const DivergenceError&) {
      return std::nullopt;
    }
  };
  VariantResult out;
  out.variant = variant;
  out.summary = evaluate(data.novel, spec, episodes, cfg.seed, runner);
  out.loss_curves = curves.means();
  return out;
}

ExperimentResult run_experiment(const DatasetSplits& data, Variant variant,
                                const ModelConfig& model_cfg, const TrainConfig& cfg,
                                const EpisodeSpec& spec, std::size_t episodes) {
  ExperimentResult out;
  out.pretrained = pretrain(data.base, data.validation, model_cfg, cfg, spec);
  out.result = evaluate_variant(out.pretrained.model, data, variant, model_cfg, cfg, spec, episodes);
  return out;
}

}  // namespace assoc
