#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rank_sde/coefficients.hpp"
#include "rank_sde/scheme.hpp"
#include "rank_sde/transform.hpp"

namespace rank_sde {

struct TransformSection {
  Interval domain{-5.0, 5.0};
  int grid_points = 1001;
  std::optional<double> c_max;
  double safety = kDefaultSafety;
  double check_box = 5.0;  // half-width of the square scanned by transform-check
};

struct AnalysisSection {
  std::size_t n_paths = 1;
  std::vector<double> dts;
  double eps_collision = 1e-3;
  double burn_in_fraction = 0.5;
  std::size_t hist_bins = 50;
  double hist_max = 5.0;
};

struct OutputSection {
  std::filesystem::path dir = "out";
  std::size_t trajectories = 1;
  std::size_t record_stride = 1;
};

// Run configuration: a JSON document with the sections system, transform,
// sim, analysis and output. Unknown keys are rejected.
struct RunConfig {
  SystemSpec system;
  TransformSection transform;
  SimConfig sim;
  AnalysisSection analysis;
  OutputSection output;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text);

// Applies RANK_SDE_SEED when it is set.
void apply_seed_override(RunConfig& cfg, const char* env_value);

}  // namespace rank_sde
