#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "rank_sde/analysis.hpp"
#include "rank_sde/scheme.hpp"
#include "rank_sde/transform.hpp"

namespace rank_sde {

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
// Reads a `t,x1,...,xN` file back; the status is left as completed.
Trajectory read_trajectory_csv(std::istream& in);

void write_histogram_csv(std::ostream& out, const Histogram& hist);

nlohmann::json to_json(const TransformParams& p);
nlohmann::json to_json(const PathStatus& s);
nlohmann::json to_json(const EnsembleStats& s);
nlohmann::json to_json(const GapRecord& g);

// Writes one compact JSON document per line.
class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::filesystem::path& path);
  void write(const nlohmann::json& record);

 private:
  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> out_;
};

}  // namespace rank_sde
