#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "rank_sde/config.hpp"
#include "rank_sde/errors.hpp"

namespace rank_sde {

enum class Command { simulate, convergence, gap, transform_check };

Command parse_command(std::string_view name);
std::string_view to_string(Command cmd);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  unsigned threads = 1;
};

// Transform parameters derived from the transform section: the planar system
// itself when N = 2, otherwise the restriction to the first two ranks.
TransformParams transform_params_for(const RunConfig& cfg);

// Executes one subcommand, writing its files and returning the summary record.
nlohmann::json run_command(Command cmd, const RunConfig& cfg, const RunOptions& options);

// Stable process exit code for each error kind.
int exit_code_for(ErrorKind kind);

}  // namespace rank_sde
