#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "assoc/errors.hpp"
#include "assoc/related_base.hpp"
#include "assoc/synthetic.hpp"
#include "support.hpp"

namespace assoc {
namespace {

SimilarityMatrix matrix_of(std::initializer_list<std::initializer_list<double>> rows) {
  SimilarityMatrix m;
  m.scores = Tensor2::from_rows(rows);
  for (std::size_t i = 0; i < m.scores.rows(); ++i) m.base_ids.push_back(static_cast<int>(i));
  return m;
}

TEST(Similarity, CountingRow) {
  const std::vector<int> ids{7};
  const std::vector<int> labels{7, 7, 7, 7};
  const std::vector<int> predicted{0, 1, 0, 2};
  const SimilarityMatrix m = similarity_from_predictions(ids, labels, predicted, 5);
  const std::vector<double> expected{0.5, 0.25, 0.25, 0.0, 0.0};
  for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(m.scores(0, j), expected[j]);
}

TEST(Similarity, OneHotRowAndEmptyClass) {
  const std::vector<int> ids{0, 1};
  const std::vector<int> labels{0, 0, 1};
  const std::vector<int> predicted{2, 2, 0};
  const SimilarityMatrix m = similarity_from_predictions(ids, labels, predicted, 3);
  EXPECT_EQ(m.scores, Tensor2::from_rows({{0, 0, 1}, {1, 0, 0}}));
  const std::vector<int> three{0, 1, 2};
  EXPECT_THROW(similarity_from_predictions(three, labels, predicted, 3), EmptySetError);
}

TEST(Similarity, RowsSumToOneAndMatchRecount) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    LabeledDataset base;
    base.features = testing::random_tensor(60, 4, rng);
    base.labels = testing::covering_labels(60, 6, rng);
    MlpParams enc = init_mlp(std::vector<std::size_t>{4, 5, 3}, Activation::kTanh, rng);
    const ClassifierWeights w = testing::random_classifier(3, 4, rng);
    const SimilarityMatrix m = compute_similarity(base, enc, w);
    const auto pred = predict(encoder_forward(base.features, enc), w);
    for (std::size_t i = 0; i < m.num_base(); ++i) {
      double sum = 0.0;
      std::vector<int> counts(4, 0);
      int total = 0;
      for (std::size_t r = 0; r < base.size(); ++r) {
        if (base.labels[r] != m.base_ids[i]) continue;
        ++counts[static_cast<std::size_t>(pred[r])];
        ++total;
      }
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(m.scores(i, j), static_cast<double>(counts[j]) / total);
        sum += m.scores(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(SelectRelated, IdentityLike) {
  const auto map = select_related(matrix_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), 1);
  EXPECT_EQ(map.related, (std::vector<std::vector<int>>{{0}, {1}, {2}}));
}

TEST(SelectRelated, HandTraces) {
  const auto plain = select_related(matrix_of({{0.9, 0.1}, {0.8, 0.2}, {0.1, 0.9}}), 1);
  EXPECT_EQ(plain.related, (std::vector<std::vector<int>>{{0}, {2}}));
  const auto contended = select_related(matrix_of({{0.9, 0.8}, {0.5, 0.4}, {0.1, 0.2}}), 1);
  EXPECT_EQ(contended.related, (std::vector<std::vector<int>>{{0}, {1}}));
}

TEST(SelectRelated, SharedModeIsIndependentTopB) {
  const auto shared = select_related(matrix_of({{0.9, 0.8}, {0.5, 0.4}, {0.1, 0.2}}), 1, true);
  EXPECT_EQ(shared.related, (std::vector<std::vector<int>>{{0}, {0}}));
  EXPECT_FALSE(shared.disjoint());
  EXPECT_THROW(shared.novel_of(0), MappingError);
}

TEST(SelectRelated, InsufficientBaseClasses) {
  EXPECT_THROW(select_related(matrix_of({{1, 0}, {0, 1}, {1, 0}}), 2), ContractError);
}

TEST(SelectRelated, FuzzedInvariants) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    SimilarityMatrix m;
    m.scores = Tensor2(12, 4);
    for (std::size_t i = 0; i < 12; ++i) {
      m.base_ids.push_back(static_cast<int>(10 + i));
      // coarse values so ties are common
      for (std::size_t j = 0; j < 4; ++j) m.scores(i, j) = std::floor(u(rng) * 4.0) / 4.0;
    }
    const auto map = select_related(m, 3);
    EXPECT_EQ(map, select_related(m, 3));
    EXPECT_TRUE(map.disjoint());
    std::set<int> seen;
    for (std::size_t j = 0; j < 4; ++j) {
      ASSERT_EQ(map.related[j].size(), 3u);
      for (int b : map.related[j]) {
        EXPECT_EQ(map.novel_of(b), static_cast<int>(j));
        seen.insert(b);
      }
    }
    EXPECT_EQ(seen.size(), 12u);
  }
}

LabeledDataset tiny_base() {
  LabeledDataset d;
  d.features = Tensor2::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  d.labels = {5, 6, 6, 7};
  return d;
}

TEST(Relabel, MapsThroughG) {
  RelatedBaseMap map;
  map.related = {{7}, {}, {}, {5, 6}};
  const LabeledDataset out = relabel_related(tiny_base(), map);
  EXPECT_EQ(out.labels, (std::vector<int>{3, 3, 3, 0}));
  EXPECT_EQ(out.features, tiny_base().features);
  EXPECT_EQ(relabel_related(LabeledDataset{}, map).size(), 0u);
  map.related = {{5}};
  EXPECT_THROW(relabel_related(tiny_base(), map), MappingError);
}

TEST(Relabel, GatherKeepsOnlyRelated) {
  RelatedBaseMap map;
  map.related = {{6}, {5}};
  const LabeledDataset out = gather_related(tiny_base(), map);
  EXPECT_EQ(out.labels, (std::vector<int>{1, 0, 0}));
}

TEST(Relabel, PlantedSyntheticCarriesPlantedIds) {
  const SyntheticData data = generate_synthetic(SyntheticSpec{});
  RelatedBaseMap map;
  map.related = data.planted;
  std::vector<std::size_t> rows;
  std::vector<int> expected;
  for (std::size_t r = 0; r < data.splits.base.size(); ++r) {
    for (std::size_t j = 0; j < data.planted.size(); ++j) {
      const auto& p = data.planted[j];
      if (std::find(p.begin(), p.end(), data.splits.base.labels[r]) != p.end()) {
        rows.push_back(r);
        expected.push_back(static_cast<int>(j));
      }
    }
  }
  const LabeledDataset relabeled = relabel_related(data.splits.base.subset(rows), map);
  EXPECT_EQ(relabeled.labels, expected);
  EXPECT_EQ(gather_related(data.splits.base, map).size(), rows.size());
  EXPECT_DOUBLE_EQ(selection_precision(map, data.planted), 1.0);
}

TEST(SubstituteRandom, KeepsHeadReplacesTail) {
  RelatedBaseMap map;
  map.related = {{0, 1, 2}, {3, 4, 5}};
  std::vector<int> ids(12);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(33);
  const auto out = substitute_random(map, 2, ids, rng);
  EXPECT_TRUE(out.disjoint());
  for (std::size_t j = 0; j < 2; ++j) {
    ASSERT_EQ(out.related[j].size(), 3u);
    EXPECT_EQ(out.related[j][0], map.related[j][0]);
    for (std::size_t t = 1; t < 3; ++t) {
      const auto& orig = map.related[j];
      EXPECT_EQ(std::find(orig.begin(), orig.end(), out.related[j][t]), orig.end());
    }
  }
  EXPECT_EQ(substitute_random(map, 0, ids, rng), map);
  EXPECT_THROW(substitute_random(map, 4, ids, rng), ContractError);
}

TEST(Precision, CountsPlantedMembers) {
  RelatedBaseMap map;
  map.related = {{0, 1}, {2, 9}};
  const std::vector<std::vector<int>> planted{{1, 0}, {3, 2}};
  EXPECT_DOUBLE_EQ(selection_precision(map, planted), 0.75);
}

TEST(Json, RoundTrip) {
  RelatedBaseMap map;
  map.related = {{4, 2, 9}, {1, 0, 3}};
  const std::string text = to_json(map);
  EXPECT_NE(text.find("\"per_class\": 3"), std::string::npos);
  EXPECT_EQ(related_map_from_json(text), map);
  EXPECT_THROW(related_map_from_json("{\"related\": 3}"), MappingError);
}

}  // namespace
}  // namespace assoc
