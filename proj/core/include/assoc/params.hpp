#pragma once

#include <span>
#include <string>
#include <vector>

namespace assoc {

// Named view over one contiguous block of trainable parameters.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string name;
  std::span<const double> values;
};

inline std::vector<ConstParamBlock> as_const(const std::vector<ParamBlock>& blocks) {
  std::vector<ConstParamBlock> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back({b.name, b.values});
  return out;
}

}  // namespace assoc
