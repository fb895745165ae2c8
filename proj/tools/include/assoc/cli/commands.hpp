#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace assoc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitConfigError = 2,
  kExitDiverged = 3,
};

struct RunOptions {
  std::optional<std::filesystem::path> config;  // preset when absent
  std::optional<std::filesystem::path> output;  // overrides the config's output
  std::string variant = "centroid";
  std::uint64_t seed = 0;
  bool plot = true;
};

struct SweepOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> output;
  std::string variant = "centroid";  // ignored when sweeping the variant
  std::uint64_t seed = 0;
  std::string param;   // B | m | wrong_related_count | variant
  std::string values;  // comma-separated
  std::size_t jobs = 1;
};

struct GradcheckCliOptions {
  std::uint64_t seed = 0;
  std::size_t points = 20;
  std::string corrupt;
};

// Writes metrics.json, episodes.jsonl and (for aligned variants)
// embeddings.svg to the output directory and appends one results.csv row.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

// Pre-trains once, then evaluates every value with the same seed. Appends
// one results.csv row per value and writes sweep_<param>.csv.
int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);

int cmd_gradcheck(const GradcheckCliOptions& options, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace assoc::cli
