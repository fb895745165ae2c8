#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "assoc/dataset.hpp"
#include "assoc/tensor.hpp"

namespace assoc {

struct EpisodeSpec {
  std::size_t way = 5;
  std::size_t shot = 5;
  std::size_t query = 15;
};

/// One N-way k-shot task. Labels inside the episode are remapped to
/// [0, way); `classes[i]` is the original id of episode class i.
struct Episode {
  EpisodeSpec spec;
  std::vector<int> classes;
  Tensor2 support_x;
  std::vector<int> support_y;
  std::vector<std::size_t> support_rows;  // rows in the source dataset
  Tensor2 query_x;
  std::vector<int> query_y;
  std::vector<std::size_t> query_rows;
};

// Independent generator for (seed, index, stream); no ambient entropy.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

// Samples without replacement. Throws SamplingError when fewer than `way`
// classes have at least shot + query examples.
Episode sample_episode(const LabeledDataset& dataset, const EpisodeSpec& spec,
                       std::mt19937_64& rng);

// Assigns each query row to the nearest per-class support mean (squared
// Euclidean distance). Ties go to the lower class id.
std::vector<int> nearest_centroid_classify(const Tensor2& support,
                                           std::span<const int> support_labels, std::size_t way,
                                           const Tensor2& query);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct AccuracySummary {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sample std / sqrt(n)
  std::size_t episodes = 0;  // successful episodes
  std::size_t failed = 0;    // excluded after divergence
  std::vector<double> accuracies;
};

AccuracySummary summarize_accuracies(std::span<const double> accuracies, std::size_t failed = 0);

// Adapts to one episode and returns query accuracy, or nullopt if the
// adaptation diverged.
using EpisodeRunner =
    std::function<std::optional<double>(const Episode& episode, std::uint64_t index)>;

// Draws `episodes` episodes from `dataset` using stream_rng(seed, i, 0) and
// aggregates the runner's accuracies. Requires episodes >= 2.
AccuracySummary evaluate(const LabeledDataset& dataset, const EpisodeSpec& spec,
                         std::size_t episodes, std::uint64_t seed, const EpisodeRunner& runner);

}  // namespace assoc
