#pragma once

#include <functional>
#include <span>
#include <vector>

#include "assoc/params.hpp"

namespace assoc {

// Entries whose analytic and numeric magnitudes are both below this floor are
// compared on an absolute scale.
inline constexpr double kRelativeErrorFloor = 1e-6;

/// Central-difference gradient of `loss` with respect to every entry of
/// `params`. `loss` must read the parameters through the same storage the
/// blocks view; each entry is perturbed in place and restored bitwise.
/// Throws NumericError if `loss` returns a non-finite value.
std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& loss,
                                                  std::span<const ParamBlock> params,
                                                  double step);

// Single-block convenience overload.
std::vector<double> finite_diff_grad(const std::function<double()>& loss,
                                     std::span<double> params, double step);

// |a - n| / max(|a|, |n|, floor), maximized over entries.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = kRelativeErrorFloor);

double max_relative_error(std::span<const ConstParamBlock> analytic,
                          const std::vector<std::vector<double>>& numeric,
                          double floor = kRelativeErrorFloor);

}  // namespace assoc
