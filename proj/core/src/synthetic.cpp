#include "assoc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "assoc/errors.hpp"

namespace assoc {

void SyntheticSpec::validate() const {
  if (dim == 0) throw SpecError("synthetic dim must be positive");
  if (base_classes == 0 || novel_classes == 0) {
    throw SpecError("synthetic spec needs at least one base and one novel class");
  }
  if (relatives_per_novel == 0) throw SpecError("relatives_per_novel must be positive");
  if (relatives_per_novel * novel_classes > base_classes) {
    throw SpecError("cannot plant " + std::to_string(relatives_per_novel) +
                    " disjoint relatives for each of " + std::to_string(novel_classes) +
                    " novel classes among " + std::to_string(base_classes) + " base classes");
  }
  if (!(spread > 0.0)) throw SpecError("synthetic spread must be positive");
  for (double v : {offset_scale, shared_offset, center_scale, group_spread, distractor_scale}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw SpecError("synthetic scales must be finite and >= 0");
  }
  if (base_examples == 0 || novel_examples == 0) {
    throw SpecError("synthetic example counts must be positive");
  }
  if (validation_classes > 0 && validation_examples == 0) {
    throw SpecError("validation classes need examples");
  }
}

namespace {

void draw_gaussian(std::span<double> out, std::span<const double> mean, double sd,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = mean[d] + sd * normal(rng);
}

// A group center plus `count` members scattered around it; returns the mean
// of the members offset by a random vector of expected norm `offset_scale`.
std::vector<double> group_member_mean(Tensor2& members, std::span<const std::size_t> rows,
                                      std::span<const double> shift, const SyntheticSpec& spec,
                                      std::mt19937_64& rng) {
  const std::vector<double> origin(spec.dim, 0.0);
  std::vector<double> group(spec.dim);
  draw_gaussian(group, origin, spec.center_scale, rng);
  std::vector<double> mean(spec.dim, 0.0);
  for (std::size_t r : rows) {
    draw_gaussian(members.row(r), group, spec.group_spread, rng);
    for (std::size_t d = 0; d < spec.dim; ++d)
      mean[d] += members(r, d) / static_cast<double>(rows.size());
  }
  for (std::size_t d = 0; d < spec.dim; ++d) mean[d] += shift[d];
  std::vector<double> shifted(spec.dim);
  draw_gaussian(shifted, mean, spec.offset_scale / std::sqrt(static_cast<double>(spec.dim)), rng);
  return shifted;
}

LabeledDataset sample_examples(const Tensor2& centers, int first_id, std::size_t per_class,
                               double spread, Split split, std::mt19937_64& rng) {
  LabeledDataset out;
  out.split = split;
  out.features = Tensor2(centers.rows() * per_class, centers.cols());
  out.labels.reserve(centers.rows() * per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    for (std::size_t e = 0; e < per_class; ++e, ++row) {
      draw_gaussian(out.features.row(row), centers.row(c), spread, rng);
      out.labels.push_back(first_id + static_cast<int>(c));
    }
  }
  return out;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t kb = spec.base_classes;
  const std::size_t kv = spec.validation_classes;
  const std::size_t kn = spec.novel_classes;
  const std::size_t r = spec.relatives_per_novel;

  SyntheticData data;
  std::vector<std::size_t> order(kb);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  // Shared shift: uniform direction scaled to norm shared_offset.
  std::vector<double> shift(spec.dim, 0.0);
  if (spec.shared_offset > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double norm = 0.0;
    for (double& v : shift) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : shift) v *= spec.shared_offset / norm;
  }

  data.base_centers = Tensor2(kb, spec.dim);
  data.novel_centers = Tensor2(kn, spec.dim);
  data.planted.resize(kn);
  for (std::size_t j = 0; j < kn; ++j) {
    const std::span<const std::size_t> rows(order.data() + j * r, r);
    const auto center = group_member_mean(data.base_centers, rows, shift, spec, rng);
    std::copy(center.begin(), center.end(), data.novel_centers.row(j).begin());
    for (std::size_t b : rows) data.planted[j].push_back(static_cast<int>(b));
    std::sort(data.planted[j].begin(), data.planted[j].end());
    data.novel_ids.push_back(static_cast<int>(kb + kv + j));
  }
  const std::vector<double> origin(spec.dim, 0.0);
  for (std::size_t i = kn * r; i < kb; ++i)
    draw_gaussian(data.base_centers.row(order[i]), origin, spec.distractor_scale, rng);

  Tensor2 validation_centers(kv, spec.dim);
  Tensor2 scratch(r, spec.dim);
  std::vector<std::size_t> scratch_rows(r);
  std::iota(scratch_rows.begin(), scratch_rows.end(), std::size_t{0});
  for (std::size_t v = 0; v < kv; ++v) {
    const auto center = group_member_mean(scratch, scratch_rows, shift, spec, rng);
    std::copy(center.begin(), center.end(), validation_centers.row(v).begin());
  }

  data.splits.base = sample_examples(data.base_centers, 0, spec.base_examples, spec.spread,
                                     Split::kBase, rng);
  data.splits.validation =
      sample_examples(validation_centers, static_cast<int>(kb), spec.validation_examples,
                      spec.spread, Split::kValidation, rng);
  data.splits.novel = sample_examples(data.novel_centers, static_cast<int>(kb + kv),
                                      spec.novel_examples, spec.spread, Split::kNovel, rng);
  data.shared_shift = std::move(shift);
  data.splits.validate();
  return data;
}

}  // namespace assoc
