#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assoc/classifier.hpp"
#include "assoc/dataset.hpp"
#include "assoc/mlp.hpp"

namespace assoc {

/// m(i, j) = fraction of base class base_ids[i] examples that the novel
/// classifier assigns to novel class j. Rows sum to one.
struct SimilarityMatrix {
  std::vector<int> base_ids;
  Tensor2 scores;  // K^b x K^n

  std::size_t num_base() const noexcept { return scores.rows(); }
  std::size_t num_novel() const noexcept { return scores.cols(); }
};

// Counting core: `predicted[i]` is the novel class chosen for an example of
// base class `labels[i]`. Every id in `base_ids` must have examples.
SimilarityMatrix similarity_from_predictions(std::span<const int> base_ids,
                                             std::span<const int> labels,
                                             std::span<const int> predicted,
                                             std::size_t num_novel);

// Embeds every base example with the frozen encoder and classifies it with
// the novel classifier (argmax of W^T z, lowest index on ties).
SimilarityMatrix compute_similarity(const LabeledDataset& base, const MlpParams& encoder,
                                    const ClassifierWeights& novel_classifier);

/// B related base classes per novel class, plus the base -> novel map g.
struct RelatedBaseMap {
  std::vector<std::vector<int>> related;  // related[j]: base ids for novel class j

  std::size_t num_novel() const noexcept { return related.size(); }
  // Novel classes whose list contains `base_id` (empty if unrelated).
  std::vector<int> owners(int base_id) const;
  // g(base_id); throws MappingError if the class is unmapped or shared.
  int novel_of(int base_id) const;
  bool disjoint() const;

  friend bool operator==(const RelatedBaseMap&, const RelatedBaseMap&) = default;
};

// Top-B base classes per novel column of M. Unless `allow_shared`, base
// classes are handed out greedily in descending score order (ties: lower
// base index, then lower novel index) so the lists stay disjoint.
RelatedBaseMap select_related(const SimilarityMatrix& m, std::size_t per_class,
                              bool allow_shared = false);

// Replaces `count` entries at the tail of every list with base classes drawn
// uniformly from those not otherwise in use, keeping lists disjoint.
RelatedBaseMap substitute_random(const RelatedBaseMap& map, std::size_t count,
                                 std::span<const int> base_ids, std::mt19937_64& rng);

// Rewrites base labels to novel labels through g. Shared base classes (only
// possible with allow_shared) yield one copy per owner.
LabeledDataset relabel_related(const LabeledDataset& examples, const RelatedBaseMap& map);

// All examples of related classes from `base`, relabeled to novel ids.
LabeledDataset gather_related(const LabeledDataset& base, const RelatedBaseMap& map);

// Fraction of selected ids that belong to the planted list of the same class.
double selection_precision(const RelatedBaseMap& map,
                           const std::vector<std::vector<int>>& planted);

// {"per_class": B, "related": {"0": [..], ...}}
std::string to_json(const RelatedBaseMap& map);
RelatedBaseMap related_map_from_json(std::string_view text);

}  // namespace assoc
