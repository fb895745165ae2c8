#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assoc/tensor.hpp"

namespace assoc {

enum class Split { kBase, kValidation, kNovel };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);  // throws SpecError

/// Feature vectors with integer class ids, all from one split.
struct LabeledDataset {
  Tensor2 features;         // one example per row
  std::vector<int> labels;  // one per row
  Split split = Split::kBase;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // Sorted distinct class ids (the split's class roster).
  std::vector<int> classes() const;
  std::map<int, std::vector<std::size_t>> indices_by_class() const;

  LabeledDataset subset(std::span<const std::size_t> rows) const;

  // Throws DimensionError if labels and rows disagree.
  void validate() const;
};

struct DatasetSplits {
  LabeledDataset base;
  LabeledDataset validation;
  LabeledDataset novel;

  // Shape checks plus pairwise-disjoint class rosters (SpecError otherwise).
  void validate() const;
};

// CSV with a header row: d feature columns, then `label`, then `split`
// (base | validation | novel). Errors carry the 1-based line number.
DatasetSplits load_csv(const std::filesystem::path& path);
DatasetSplits parse_csv(std::string_view text, const std::string& source = "<csv>");

void write_csv(const DatasetSplits& splits, const std::filesystem::path& path);

}  // namespace assoc
