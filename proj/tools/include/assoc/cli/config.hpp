#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "assoc/episodes.hpp"
#include "assoc/synthetic.hpp"
#include "assoc/training.hpp"

namespace assoc::cli {

/// Everything one experiment needs. Exactly one of `synthetic` and `csv`
/// describes the dataset.
struct RunConfig {
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path csv;
  ModelConfig model;
  TrainConfig train;
  EpisodeSpec eval;
  std::size_t episodes = 100;
  std::filesystem::path output_dir = "out";

  void validate() const;  // throws ConfigError
};

// The built-in synthetic preset.
RunConfig default_run_config();

// YAML with top-level sections dataset, model, train, eval and output.
// Omitted keys keep their preset values; unknown keys and malformed values
// throw ConfigError prefixed with "source:line:". A relative csv path is
// resolved against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Fully specified YAML rendering; parse_run_config round-trips it.
std::string to_yaml(const RunConfig& config);

// 64-bit FNV-1a of to_yaml(config) with the output directory blanked, as
// 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace assoc::cli
