#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace assoc::cli {

inline constexpr const char* kResultsHeader = "variant,way,shot,mean,ci,seed";

struct ResultRow {
  std::string variant;
  std::size_t way = 0;
  std::size_t shot = 0;
  double mean = 0.0;
  double ci = 0.0;
  std::uint64_t seed = 0;
};

// Fixed six-decimal formatting so replays compare byte for byte.
std::string format_row(const ResultRow& row);

// Appends under an exclusive flock, writing the header first when the file
// is empty. Throws ConfigError if an existing file has a different header.
void append_result(const std::filesystem::path& csv, const ResultRow& row);

}  // namespace assoc::cli
