#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "assoc/early_stopping.hpp"
#include "assoc/errors.hpp"
#include "assoc/preset.hpp"
#include "assoc/synthetic.hpp"
#include "assoc/training.hpp"
#include "support.hpp"

namespace assoc {
namespace {

TEST(EarlyStopping, ScriptedTrace) {
  const std::vector<double> acc{0.5, 0.6, 0.7, 0.65, 0.6, 0.55};
  const EarlyStopTrace t = replay_early_stopping(acc, 3);
  ASSERT_EQ(t.window_means.size(), 4u);
  const std::vector<double> means{0.6, 0.65, 0.65, 0.6};
  for (std::size_t i = 0; i < means.size(); ++i) EXPECT_NEAR(t.window_means[i], means[i], 1e-12);
  EXPECT_TRUE(t.stopped);
  EXPECT_EQ(t.stop_epoch, 6u);
  EXPECT_EQ(t.best_epoch, 4u);
}

TEST(EarlyStopping, StopsAtFirstStrictDecrease) {
  EarlyStopper s(3);
  const std::vector<double> acc{0.5, 0.6, 0.7, 0.65, 0.6, 0.55, 0.9};
  std::size_t stop = 0;
  for (std::size_t e = 0; e < acc.size(); ++e) {
    if (s.observe(acc[e])) {
      stop = e + 1;
      break;
    }
  }
  EXPECT_EQ(stop, 6u);
}

TEST(EarlyStopping, MonotoneRunsToCap) {
  std::vector<double> acc;
  for (int e = 0; e < 30; ++e) acc.push_back(0.1 + 0.02 * e);
  const EarlyStopTrace t = replay_early_stopping(acc, 5);
  EXPECT_FALSE(t.stopped);
  EXPECT_EQ(t.stop_epoch, 30u);
  EXPECT_EQ(t.best_epoch, 30u);
  EXPECT_GE(t.stop_epoch, t.window);
}

TEST(EarlyStopping, PatienceNeedsConsecutiveDecreases) {
  const std::vector<double> acc{0.5, 0.6, 0.7, 0.65, 0.6, 0.66, 0.5, 0.4};
  EXPECT_EQ(replay_early_stopping(acc, 3, 1).stop_epoch, 6u);
  // means from epoch 3: .6 .65 .65 .637 .587 .52; strict decreases at 6 and 7
  const EarlyStopTrace two = replay_early_stopping(acc, 3, 2);
  EXPECT_TRUE(two.stopped);
  EXPECT_EQ(two.stop_epoch, 7u);
  EXPECT_EQ(two.best_epoch, 6u);
}

TEST(EarlyStopping, BestIsEarliestMaxInFinalWindow) {
  const std::vector<double> acc{0.2, 0.9, 0.4, 0.8, 0.8, 0.3};
  const EarlyStopTrace t = replay_early_stopping(acc, 3);
  EXPECT_EQ(t.best_epoch, 4u);
  EXPECT_THROW(EarlyStopper(1), ContractError);
  EXPECT_THROW(EarlyStopper(3, 0), ContractError);
}

TEST(Config, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.window = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr_critic = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.critic_iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.wrong_related = cfg.related_per_class + 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_variant("no_alignment"), Variant::kNoAlignment);
  EXPECT_EQ(to_string(Variant::kAdversarial), "adversarial");
  EXPECT_THROW(parse_variant("centroids"), ConfigError);
}

TEST(LossCurves, AveragesPerStep) {
  LossCurves c;
  c.add("a", 0, 1.0);
  c.add("a", 0, 3.0);
  c.add("a", 2, 5.0);
  const auto m = c.means();
  EXPECT_EQ(m.at("a"), (std::vector<double>{2.0, 0.0, 5.0}));
}

// Small problem shared by the stage tests below.
class SmallProblem : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticSpec spec;
    spec.base_examples = 30;
    spec.validation_examples = 25;
    spec.novel_examples = 25;
    data_ = new SyntheticData(generate_synthetic(spec));
    cfg_ = new TrainConfig();
    cfg_->window = 3;
    cfg_->max_epochs = 8;
    cfg_->validation_episodes = 5;
    cfg_->related_per_class = 3;
    cfg_->alignment_iterations = 10;
    cfg_->finetune_steps = 30;
    model_cfg_ = new ModelConfig();
    model_cfg_->hidden = {16};
    model_cfg_->embedding_dim = 8;
    model_cfg_->critic_hidden = 8;
    pre_ = new PretrainResult(pretrain(data_->splits.base, data_->splits.validation, *model_cfg_,
                                       *cfg_, EpisodeSpec{}));
  }
  static void TearDownTestSuite() {
    delete pre_;
    delete model_cfg_;
    delete cfg_;
    delete data_;
  }

  Episode episode(std::uint64_t index) const {
    auto rng = stream_rng(cfg_->seed, index, 0);
    return sample_episode(data_->splits.novel, EpisodeSpec{}, rng);
  }

  LabeledDataset related_for(const Episode& ep, const ModelState& ft) const {
    const auto m = compute_similarity(data_->splits.base, ft.encoder, ft.classifier);
    return gather_related(data_->splits.base, select_related(m, 3));
  }

  static SyntheticData* data_;
  static TrainConfig* cfg_;
  static ModelConfig* model_cfg_;
  static PretrainResult* pre_;
};

SyntheticData* SmallProblem::data_ = nullptr;
TrainConfig* SmallProblem::cfg_ = nullptr;
ModelConfig* SmallProblem::model_cfg_ = nullptr;
PretrainResult* SmallProblem::pre_ = nullptr;

TEST_F(SmallProblem, PretrainTraceIsConsistent) {
  const EarlyStopTrace& t = pre_->trace;
  ASSERT_FALSE(t.accuracies.empty());
  EXPECT_EQ(t.stop_epoch, t.accuracies.size());
  EXPECT_GE(t.stop_epoch, t.window);
  const auto first = t.accuracies.end() - static_cast<std::ptrdiff_t>(t.window);
  EXPECT_EQ(t.accuracies[t.best_epoch - 1], *std::max_element(first, t.accuracies.end()));
  EXPECT_EQ(pre_->epoch_losses.size(), t.stop_epoch);
  EXPECT_TRUE(columns_unit_norm(pre_->model.classifier, 1e-9));
  EXPECT_EQ(pre_->model.classifier.num_classes(), 20u);
}

TEST_F(SmallProblem, PretrainIsSeedDeterministic) {
  const PretrainResult again =
      pretrain(data_->splits.base, data_->splits.validation, *model_cfg_, *cfg_, EpisodeSpec{});
  EXPECT_EQ(again.model, pre_->model);
  EXPECT_EQ(again.trace.accuracies, pre_->trace.accuracies);
}

TEST_F(SmallProblem, FinetuneLeavesEncoderBitwise) {
  const Episode ep = episode(0);
  auto rng = stream_rng(0, 0, 1);
  const ModelState ft = finetune_baseline(pre_->model, ep.support_x, ep.support_y, 5, *cfg_, rng);
  EXPECT_EQ(ft.encoder, pre_->model.encoder);
  EXPECT_EQ(ft.classifier.num_classes(), 5u);
  EXPECT_TRUE(columns_unit_norm(ft.classifier, 1e-9));
}

TEST_F(SmallProblem, FinetuneZeroStepsKeepsInitialization) {
  const Episode ep = episode(1);
  TrainConfig cfg = *cfg_;
  cfg.finetune_steps = 0;
  auto rng = stream_rng(0, 1, 1);
  const ModelState ft = finetune_baseline(pre_->model, ep.support_x, ep.support_y, 5, cfg, rng);
  auto replay = stream_rng(0, 1, 1);
  EXPECT_EQ(ft.classifier, init_classifier(pre_->model.encoder.output_dim(), 5, replay));
}

TEST_F(SmallProblem, FinetuneSeparatesTwoClassSupport) {
  // Two well separated input clusters; a cosine head must fit them exactly.
  MlpParams identity;
  identity.layers.push_back({Tensor2::identity(2), {0.0, 0.0}});
  ModelState model{identity, {}, std::nullopt};
  const Tensor2 x = Tensor2::from_rows({{1.0, 0.1}, {0.9, -0.1}, {-1.0, 0.2}, {-0.8, -0.1}});
  const std::vector<int> y{0, 0, 1, 1};
  TrainConfig cfg = *cfg_;
  cfg.finetune_steps = 200;
  auto rng = stream_rng(3, 0, 1);
  const ModelState ft = finetune_baseline(model, x, y, 2, cfg, rng);
  EXPECT_EQ(predict(encoder_forward(x, ft.encoder), ft.classifier), y);
}

TEST_F(SmallProblem, ZeroBudgetAlignmentIsIdentity) {
  const Episode ep = episode(2);
  auto rng = stream_rng(0, 2, 1);
  const ModelState ft = finetune_baseline(pre_->model, ep.support_x, ep.support_y, 5, *cfg_, rng);
  const LabeledDataset related = related_for(ep, ft);
  TrainConfig cfg = *cfg_;
  cfg.alignment_iterations = 0;
  auto r1 = stream_rng(0, 2, 2);
  EXPECT_EQ(align_centroid(ft, ep.support_x, ep.support_y, related, 5, cfg, r1), ft);
  auto r2 = stream_rng(0, 2, 2);
  EXPECT_EQ(align_adversarial(ft, ep.support_x, ep.support_y, related, 5, *model_cfg_, cfg, r2), ft);
}

TEST_F(SmallProblem, AlignmentKeepsUnitColumnsAndClipsCritic) {
  const Episode ep = episode(3);
  auto rng = stream_rng(0, 3, 1);
  const ModelState ft = finetune_baseline(pre_->model, ep.support_x, ep.support_y, 5, *cfg_, rng);
  const LabeledDataset related = related_for(ep, ft);
  auto r1 = stream_rng(0, 3, 2);
  AlignmentTelemetry tel;
  const ModelState adv =
      align_adversarial(ft, ep.support_x, ep.support_y, related, 5, *model_cfg_, *cfg_, r1, &tel);
  ASSERT_EQ(tel.max_abs_critic.size(), cfg_->alignment_iterations);
  for (double m : tel.max_abs_critic) EXPECT_LE(m, cfg_->clip);
  ASSERT_TRUE(adv.critic.has_value());
  for (const auto& b : adv.critic->blocks()) EXPECT_LE(max_abs(b.values), cfg_->clip);
  EXPECT_TRUE(columns_unit_norm(adv.classifier, 1e-9));
  EXPECT_NE(adv.encoder, ft.encoder);

  auto r2 = stream_rng(0, 3, 2);
  const ModelState cen = align_centroid(ft, ep.support_x, ep.support_y, related, 5, *cfg_, r2);
  EXPECT_TRUE(columns_unit_norm(cen.classifier, 1e-9));
  EXPECT_FALSE(cen.critic.has_value());
}

TEST_F(SmallProblem, NoAlignmentWithZeroBudgetEqualsBaseline) {
  TrainConfig cfg = *cfg_;
  cfg.alignment_iterations = 0;
  const auto base = evaluate_variant(pre_->model, data_->splits, Variant::kBaseline, *model_cfg_,
                                     cfg, EpisodeSpec{}, 4);
  const auto none = evaluate_variant(pre_->model, data_->splits, Variant::kNoAlignment,
                                     *model_cfg_, cfg, EpisodeSpec{}, 4);
  EXPECT_NEAR(base.summary.mean, none.summary.mean, 1e-12);
  EXPECT_EQ(base.summary.accuracies, none.summary.accuracies);
}

TEST_F(SmallProblem, RunEpisodeIsDeterministic) {
  const Episode ep = episode(4);
  const auto a = run_episode(pre_->model, data_->splits.base, ep, 4, Variant::kCentroid,
                             *model_cfg_, *cfg_);
  const auto b = run_episode(pre_->model, data_->splits.base, ep, 4, Variant::kCentroid,
                             *model_cfg_, *cfg_);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.adapted, b.adapted);
  ASSERT_TRUE(a.related.has_value());
  EXPECT_TRUE(a.related->disjoint());
}

TEST_F(SmallProblem, WrongRelatedSubstitutesTail) {
  TrainConfig cfg = *cfg_;
  cfg.wrong_related = 3;
  const Episode ep = episode(5);
  const auto clean = run_episode(pre_->model, data_->splits.base, ep, 5, Variant::kNoAlignment,
                                 *model_cfg_, *cfg_);
  const auto swapped = run_episode(pre_->model, data_->splits.base, ep, 5, Variant::kNoAlignment,
                                   *model_cfg_, cfg);
  for (std::size_t j = 0; j < 5; ++j) {
    for (int b : swapped.related->related[j]) {
      const auto& orig = clean.related->related[j];
      EXPECT_EQ(std::find(orig.begin(), orig.end(), b), orig.end());
    }
  }
}

TEST_F(SmallProblem, DivergenceIsReportedWithStep) {
  ModelState broken = pre_->model;
  broken.encoder.layers[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
  LabeledDataset val = data_->splits.validation;
  const Episode ep = episode(6);
  auto rng = stream_rng(0, 6, 1);
  try {
    (void)finetune_baseline(broken, ep.support_x, ep.support_y, 5, *cfg_, rng);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.stage(), "finetune");
    EXPECT_EQ(e.step(), 0u);
  }
  TrainConfig huge = *cfg_;
  huge.lr_clf = 1e300;
  huge.max_epochs = 3;
  EXPECT_THROW(pretrain(data_->splits.base, val, *model_cfg_, huge, EpisodeSpec{}),
               DivergenceError);
}

TEST(Preset, MatchesTheDeskScaleSetup) {
  const Preset p = synthetic_preset();
  EXPECT_NO_THROW(p.data.validate());
  EXPECT_NO_THROW(p.model.validate());
  EXPECT_NO_THROW(p.train.validate());
  EXPECT_EQ(p.data.dim, 16u);
  EXPECT_EQ(p.data.base_classes, 20u);
  EXPECT_EQ(p.data.novel_classes, 5u);
  EXPECT_EQ(p.data.relatives_per_novel, 3u);
  EXPECT_EQ(p.data.spread, 0.5);
  EXPECT_EQ(p.data.seed, 0u);
  EXPECT_EQ(p.eval.way, 5u);
  EXPECT_EQ(p.eval.shot, 5u);
  EXPECT_EQ(p.train.related_per_class, 3u);
  EXPECT_EQ(p.train.pretrain_arcmax.scale, 20.0);
  EXPECT_EQ(p.train.finetune_arcmax.scale, 5.0);
}

}  // namespace
}  // namespace assoc
