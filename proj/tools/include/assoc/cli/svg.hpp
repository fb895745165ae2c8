#pragma once

#include <span>
#include <string>
#include <vector>

#include "assoc/tensor.hpp"

namespace assoc::cli {

struct EmbeddingSet {
  Tensor2 novel;
  std::vector<int> novel_labels;
  Tensor2 related;
  std::vector<int> related_labels;  // already mapped to novel classes
};

// Leading two principal axes of the rows, as a cols x 2 matrix. Falls back
// to zero-padding when there are fewer than two dimensions.
Tensor2 principal_axes(const Tensor2& rows);

// Two side-by-side scatter panels, "before alignment" and "after alignment",
// projected on axes fitted to both sets together. Filled circles are novel
// examples, hollow squares related base examples; color encodes class.
std::string render_alignment_svg(const EmbeddingSet& before, const EmbeddingSet& after);

}  // namespace assoc::cli
