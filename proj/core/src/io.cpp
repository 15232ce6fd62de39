#include "rank_sde/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rank_sde/errors.hpp"

namespace rank_sde {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << 't';
  for (std::size_t i = 1; i <= traj.n_particles; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t m = 0; m < traj.rows(); ++m) {
    out << format_double(traj.times[m]);
    for (double v : traj.row(m)) out << ',' << format_double(v);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t", 0) != 0) {
    throw Error(ErrorKind::io_error, "trajectory CSV lacks the t,x1,... header");
  }
  Trajectory traj;
  traj.n_particles = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(fields, cell, ',')) {
      // strtod rather than stod: subnormals set ERANGE but parse exactly.
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || std::isinf(v)) {
        throw Error(ErrorKind::io_error, "malformed CSV cell '" + cell + "'");
      }
      if (col == 0) {
        traj.times.push_back(v);
      } else {
        traj.states.push_back(v);
      }
      ++col;
    }
    if (col != traj.n_particles + 1) throw Error(ErrorKind::io_error, "ragged CSV row");
  }
  return traj;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1]) << ','
        << hist.counts[b] << '\n';
  }
}

nlohmann::json to_json(const TransformParams& p) {
  return {{"c", p.c},
          {"alpha_sup", p.alpha_sup},
          {"alpha_domain", {p.alpha_domain.lo, p.alpha_domain.hi}},
          {"safety", p.safety}};
}

nlohmann::json to_json(const PathStatus& s) {
  return {{"status", std::string(to_string(s.kind))}, {"t", s.t}};
}

nlohmann::json to_json(const EnsembleStats& s) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : s.status_counts) counts[k] = v;
  return {{"n_paths", s.n_paths},
          {"n_completed", s.n_completed},
          {"terminal_mean", s.terminal_mean},
          {"terminal_sd", s.terminal_sd},
          {"min_over_paths", s.min_over_paths},
          {"max_over_paths", s.max_over_paths},
          {"occupation_fraction_theta_c", s.occupation_fraction_theta_c},
          {"near_collision_count", s.near_collision_count},
          {"diffusion_at_nonpositive", s.diffusion_at_nonpositive},
          {"nonzero_diffusion_at_nonpositive", s.nonzero_diffusion_at_nonpositive},
          {"status_counts", counts}};
}

nlohmann::json to_json(const GapRecord& g) {
  return {{"gap_mean", g.gap_mean},
          {"gap_min", g.gap_min},
          {"n_samples", g.n_samples},
          {"n_paths", g.n_paths},
          {"hist_overflow", g.hist.overflow}};
}

JsonLinesWriter::JsonLinesWriter(const std::filesystem::path& path)
    : path_(path), out_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
  if (!*out_) throw Error(ErrorKind::io_error, "cannot write " + path.string());
}

void JsonLinesWriter::write(const nlohmann::json& record) {
  *out_ << record.dump() << '\n';
  if (!*out_) throw Error(ErrorKind::io_error, "write failed for " + path_.string());
}

}  // namespace rank_sde
