#include "assoc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

namespace {

double checked(double v, const std::string& where) {
  if (!std::isfinite(v)) throw NumericError("finite_diff_grad: loss is non-finite at " + where);
  return v;
}

}  // namespace

std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& loss,
                                                  std::span<const ParamBlock> params,
                                                  double step) {
  if (!(step > 0.0)) throw ContractError("finite_diff_grad: step must be positive");
  checked(loss(), "the unperturbed point");
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& block : params) {
    std::vector<double> grad(block.values.size());
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const double saved = block.values[i];
      const std::string where = block.name + "[" + std::to_string(i) + "]";
      block.values[i] = saved + step;
      const double plus = checked(loss(), where);
      block.values[i] = saved - step;
      const double minus = checked(loss(), where);
      block.values[i] = saved;
      grad[i] = (plus - minus) / (2.0 * step);
    }
    out.push_back(std::move(grad));
  }
  return out;
}

std::vector<double> finite_diff_grad(const std::function<double()>& loss, std::span<double> params,
                                     double step) {
  const ParamBlock block{"params", params};
  return finite_diff_grad(loss, std::span<const ParamBlock>(&block, 1), step).front();
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  if (analytic.size() != numeric.size()) {
    throw DimensionError("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    if (!std::isfinite(a) || !std::isfinite(n)) return INFINITY;
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

double max_relative_error(std::span<const ConstParamBlock> analytic,
                          const std::vector<std::vector<double>>& numeric, double floor) {
  if (analytic.size() != numeric.size()) {
    throw DimensionError("max_relative_error: block count mismatch");
  }
  double worst = 0.0;
  for (std::size_t b = 0; b < analytic.size(); ++b)
    worst = std::max(worst, max_relative_error(analytic[b].values, numeric[b], floor));
  return worst;
}

}  // namespace assoc
