#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "assoc/dataset.hpp"

namespace assoc {

/// Gaussian-cluster dataset with planted base/novel relatedness.
///
/// Each novel class owns `relatives_per_novel` base classes. Their centers
/// scatter (`group_spread`) around a shared group center drawn with
/// `center_scale`; the novel center is the mean of those base centers plus
/// an offset. The offset has a class-specific part of expected norm
/// `offset_scale` and a part of norm `shared_offset` common to every novel
/// and validation class (a base-to-novel domain shift). Remaining base
/// classes are distractors drawn with `distractor_scale`. Validation classes
/// follow the novel recipe with fresh groups that have no base relatives. Every example
/// is its class center plus isotropic noise of standard deviation `spread`.
struct SyntheticSpec {
  std::size_t dim = 16;
  std::size_t base_classes = 20;
  std::size_t validation_classes = 5;
  std::size_t novel_classes = 5;
  std::size_t relatives_per_novel = 3;
  double spread = 0.5;
  double offset_scale = 0.2;
  double shared_offset = 3.0;
  double center_scale = 0.3;
  double group_spread = 0.05;
  double distractor_scale = 0.3;
  std::size_t base_examples = 100;
  std::size_t validation_examples = 40;
  std::size_t novel_examples = 40;
  std::uint64_t seed = 0;

  void validate() const;  // throws SpecError
};

struct SyntheticData {
  DatasetSplits splits;
  // planted[j] = base class ids related to novel class novel_ids[j].
  std::vector<std::vector<int>> planted;
  std::vector<int> novel_ids;
  Tensor2 base_centers;   // row i = center of base class i
  Tensor2 novel_centers;  // row j = center of novel class novel_ids[j]
  std::vector<double> shared_shift;  // zero when shared_offset == 0
};

// Class ids: base [0, Kb), validation [Kb, Kb+Kv), novel [Kb+Kv, Kb+Kv+Kn).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace assoc
