#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace assoc {

inline constexpr double kGradcheckTolerance = 1e-4;

struct LossCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t points = 0;
  bool passed() const noexcept { return max_relative_error < kGradcheckTolerance; }
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t points = 20;
  double step = 3e-5;  // balances truncation against round-off at s = 20
  // Test hook: perturbs the analytic gradient of the named loss.
  std::string corrupt;
};

// Loss names in report order.
const std::vector<std::string_view>& gradcheck_loss_names();

// Central differences against every analytic loss gradient at `points`
// random points per loss. Arcmax and cosmax are checked in both the
// embeddings and W; critic in its parameters; the rest in the embeddings.
std::vector<LossCheck> run_gradcheck_suite(const GradcheckOptions& options);

}  // namespace assoc
