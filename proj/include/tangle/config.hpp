#pragma once

// Flat `key = value` run configuration shared by every CLI command.
// Lines starting with `#` and blank lines are ignored. Unknown or
// repeated keys and unparsable values raise ConfigError citing the line.

#include "tangle/geometry.hpp"
#include "tangle/model.hpp"
#include "tangle/pick.hpp"
#include "tangle/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tangle {

enum class GridMode { Full, Single };

struct RunConfig {
  std::uint64_t seed = 1;
  GridMode grid = GridMode::Full;
  TargetConfig single;  // used with GridMode::Single
  StudySpec study;

  // pack / integrity
  std::vector<GrainType> grain_types = {kAllGrainTypes.begin(), kAllGrainTypes.end()};
  int segments = 100;
  double grain_density_gcc = 1.2;
  int integrity_seeds = 10;
  bool shake = false;
  ShakeSpec shake_spec;
  RemovalSpec removal;

  FitOptions fit;

  std::vector<TargetConfig> targets() const;
};

RunConfig parse_config(std::istream& is);
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order, doubles with 17 significant digits, so
/// parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const RunConfig& config);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);

std::string_view to_string(GridMode mode);
std::string_view to_string(ReturnMode mode);

}  // namespace tangle
