#include "assoc/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(index), hi(index), lo(stream), hi(stream)};
  return std::mt19937_64(seq);
}

Episode sample_episode(const LabeledDataset& dataset, const EpisodeSpec& spec,
                       std::mt19937_64& rng) {
  if (spec.way == 0 || spec.shot == 0) throw SamplingError("episode needs way >= 1 and shot >= 1");
  const std::size_t per_class = spec.shot + spec.query;
  std::vector<std::pair<int, std::vector<std::size_t>>> eligible;
  for (auto& [label, rows] : dataset.indices_by_class()) {
    if (rows.size() >= per_class) eligible.emplace_back(label, std::move(rows));
  }
  if (eligible.size() < spec.way) {
    throw SamplingError("need " + std::to_string(spec.way) + " classes with >= " +
                        std::to_string(per_class) + " examples, found " +
                        std::to_string(eligible.size()));
  }
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(spec.way);

  Episode ep;
  ep.spec = spec;
  for (std::size_t c = 0; c < spec.way; ++c) {
    auto& [label, rows] = eligible[c];
    ep.classes.push_back(label);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t i = 0; i < spec.shot; ++i) {
      ep.support_rows.push_back(rows[i]);
      ep.support_y.push_back(static_cast<int>(c));
    }
    for (std::size_t i = spec.shot; i < per_class; ++i) {
      ep.query_rows.push_back(rows[i]);
      ep.query_y.push_back(static_cast<int>(c));
    }
  }
  ep.support_x = gather_rows(dataset.features, ep.support_rows);
  ep.query_x = gather_rows(dataset.features, ep.query_rows);
  return ep;
}

std::vector<int> nearest_centroid_classify(const Tensor2& support,
                                           std::span<const int> support_labels, std::size_t way,
                                           const Tensor2& query) {
  if (support_labels.size() != support.rows()) {
    throw DimensionError("nearest_centroid_classify: label count != support rows");
  }
  if (query.rows() > 0 && query.cols() != support.cols()) {
    throw DimensionError("nearest_centroid_classify: query dim != support dim");
  }
  Tensor2 means(way, support.cols());
  std::vector<std::size_t> counts(way, 0);
  for (std::size_t i = 0; i < support.rows(); ++i) {
    const int y = support_labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= way) {
      throw MappingError("nearest_centroid_classify: support label out of range");
    }
    ++counts[y];
    auto dst = means.row(y);
    const auto src = support.row(i);
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
  }
  for (std::size_t c = 0; c < way; ++c) {
    if (counts[c] == 0) {
      throw EmptySetError("nearest_centroid_classify: class " + std::to_string(c) +
                          " has no support examples");
    }
    for (double& v : means.row(c)) v /= static_cast<double>(counts[c]);
  }
  std::vector<int> out(query.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(query.row(i), means.row(0));
    for (std::size_t c = 1; c < way; ++c) {
      const double d = squared_distance(query.row(i), means.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw DimensionError("accuracy: prediction/truth length mismatch or empty");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

AccuracySummary summarize_accuracies(std::span<const double> accuracies, std::size_t failed) {
  AccuracySummary out;
  out.failed = failed;
  out.episodes = accuracies.size();
  out.accuracies.assign(accuracies.begin(), accuracies.end());
  if (accuracies.empty()) throw DivergenceError("evaluate", 0);
  const double n = static_cast<double>(accuracies.size());
  out.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  if (accuracies.size() >= 2) {
    double ss = 0.0;
    for (double a : accuracies) ss += (a - out.mean) * (a - out.mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    out.ci95 = 1.96 * sd / std::sqrt(n);
  }
  return out;
}

AccuracySummary evaluate(const LabeledDataset& dataset, const EpisodeSpec& spec,
                         std::size_t episodes, std::uint64_t seed, const EpisodeRunner& runner) {
  if (episodes < 2) throw ContractError("evaluate needs at least 2 episodes");
  std::vector<double> accs;
  accs.reserve(episodes);
  std::size_t failed = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto rng = stream_rng(seed, e, 0);
    const Episode ep = sample_episode(dataset, spec, rng);
    const auto acc = runner(ep, e);
    if (acc) {
      accs.push_back(*acc);
    } else {
      ++failed;
    }
  }
  return summarize_accuracies(accs, failed);
}

}  // namespace assoc
