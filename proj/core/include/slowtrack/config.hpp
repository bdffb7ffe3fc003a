#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "slowtrack/tracker.hpp"

namespace slowtrack::config {

struct DatasetConfig {
  double diffThreshold = 0.1;
  int minComponentArea = 25;
  // Synthetic session generator.
  double maxShift = 1.5;
  double maxRotationDeg = 8.0;
};

struct PathConfig {
  std::filesystem::path layer1Weights;
  std::filesystem::path layer2Weights;
};

struct RunConfig {
  tracker::TrackerConfig tracker;
  DatasetConfig dataset;
  PathConfig paths;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Parses INI text (`[section]` headers, `key = value` lines, `;` or `#` comments).
/// Unknown sections or keys and unparsable values throw FormatError; out-of-range
/// values throw InvalidInput.
RunConfig parse(std::string_view text);

RunConfig load(const std::filesystem::path& path);

/// Serializes every key, so parse(format(c)) reproduces c.
std::string format(const RunConfig& config);

/// "section.key" for every recognized key, in schema order.
std::vector<std::string> keys();

}  // namespace slowtrack::config
