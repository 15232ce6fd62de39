#include "rank_sde/runner.hpp"

#include <fstream>
#include <string>

#include "rank_sde/analysis.hpp"
#include "rank_sde/diagnostics.hpp"
#include "rank_sde/io.hpp"

namespace rank_sde {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prepare_dir(const RunConfig& cfg, const RunOptions& options) {
  const fs::path dir = options.out_dir.value_or(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create output directory " + dir.string());
  return dir;
}

PlanarSpec planar_for(const SystemSpec& spec) {
  return spec.n_particles == 2 ? PlanarSpec::from_system(spec) : PlanarSpec::restriction_of(spec);
}

// The transformed scheme always needs parameters. The naive scheme only uses
// them for the Theta_c occupation of planar systems, so a system whose alpha
// cannot be bounded simply reports no occupation there.
std::optional<TransformParams> params_if_planar(const RunConfig& cfg) {
  if (cfg.sim.scheme == SchemeKind::transformed) return transform_params_for(cfg);
  if (cfg.system.n_particles != 2 || cfg.system.variant != ModelVariant::own_diffusion) {
    return std::nullopt;
  }
  try {
    return transform_params_for(cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::alpha_unbounded) throw;
    return std::nullopt;
  }
}

json params_record(const std::optional<TransformParams>& p) {
  json rec = {{"record", "transform_params"}};
  if (p) rec.update(to_json(*p));
  return rec;
}

json run_simulate(const RunConfig& cfg, const RunOptions& options, const fs::path& dir) {
  const auto params = params_if_planar(cfg);
  EnsembleOptions eo;
  eo.eps_collision = cfg.analysis.eps_collision;
  eo.threads = options.threads;
  eo.dump_paths = cfg.output.trajectories;
  eo.record_stride = cfg.output.record_stride;
  const auto result = run_ensemble(cfg.system, params, cfg.sim, cfg.analysis.n_paths, eo);

  JsonLinesWriter status(dir / "status.jsonl");
  for (std::size_t p = 0; p < result.trajectories.size(); ++p) {
    const auto name = "trajectory_" + std::to_string(p) + ".csv";
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + (dir / name).string());
    write_trajectory_csv(out, result.trajectories[p]);
    json rec = {{"record", "path_status"}, {"path", p}, {"file", name}};
    rec.update(to_json(result.trajectories[p].status));
    status.write(rec);
  }
  json summary = {{"record", "ensemble"}, {"scheme", std::string(to_string(cfg.sim.scheme))},
                  {"seed", cfg.sim.seed}};
  summary.update(to_json(result.stats));
  JsonLinesWriter ensemble(dir / "ensemble.jsonl");
  if (params) ensemble.write(params_record(params));
  ensemble.write(summary);
  return summary;
}

json run_convergence(const RunConfig& cfg, const RunOptions& options, const fs::path& dir) {
  const auto params = params_if_planar(cfg);
  const auto table = strong_order(cfg.system, params, cfg.sim, cfg.analysis.dts,
                                  cfg.analysis.n_paths, options.threads);
  JsonLinesWriter out(dir / "convergence.jsonl");
  if (params) out.write(params_record(params));
  for (std::size_t j = 0; j < table.dts.size(); ++j) {
    out.write({{"record", "strong_error"},
               {"dt", table.dts[j]},
               {"strong_error", table.strong_errors[j]},
               {"reference_dt", table.reference_dt}});
  }
  json summary = {{"record", "convergence_fit"},
                  {"scheme", std::string(to_string(cfg.sim.scheme))},
                  {"fitted_order", table.fitted_order},
                  {"fit_r2", table.fit_r2},
                  {"n_paths", table.n_paths},
                  {"n_excluded", table.n_excluded},
                  {"seed", cfg.sim.seed}};
  out.write(summary);
  return summary;
}

json run_gap(const RunConfig& cfg, const RunOptions& options, const fs::path& dir) {
  const auto params = params_if_planar(cfg);
  GapOptions go;
  go.burn_in_fraction = cfg.analysis.burn_in_fraction;
  go.hist_bins = cfg.analysis.hist_bins;
  go.hist_max = cfg.analysis.hist_max;
  go.threads = options.threads;
  const auto rec = gap_statistics(cfg.system, params, cfg.sim, cfg.analysis.n_paths, go);
  json summary = {{"record", "gap"}, {"scheme", std::string(to_string(cfg.sim.scheme))},
                  {"seed", cfg.sim.seed}};
  summary.update(to_json(rec));
  JsonLinesWriter out(dir / "gap.jsonl");
  out.write(summary);
  std::ofstream hist(dir / "gap_hist.csv", std::ios::binary | std::ios::trunc);
  if (!hist) throw Error(ErrorKind::io_error, "cannot write gap_hist.csv");
  write_histogram_csv(hist, rec.hist);
  return summary;
}

json run_transform_check(const RunConfig& cfg, const fs::path& dir) {
  const auto params = transform_params_for(cfg);
  const DistortionMap map(planar_for(cfg.system), params);
  TransformCheckOptions opt;
  opt.box = cfg.transform.check_box;
  opt.seed = cfg.sim.seed;
  const auto report = check_transform(map, opt);
  json summary = {{"record", "transform_check"},
                  {"c", report.c},
                  {"alpha_sup", report.alpha_sup},
                  {"det_min", report.det_min},
                  {"roundtrip_max", report.roundtrip_max},
                  {"derivative_max_rel", report.derivative_max_rel},
                  {"planar_restriction", cfg.system.n_particles != 2}};
  JsonLinesWriter out(dir / "transform_check.jsonl");
  out.write(params_record(params));
  out.write(summary);
  return summary;
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "simulate") return Command::simulate;
  if (name == "convergence") return Command::convergence;
  if (name == "gap") return Command::gap;
  if (name == "transform-check") return Command::transform_check;
  throw Error(ErrorKind::parameter_error, "unknown subcommand '" + std::string(name) + "'");
}

std::string_view to_string(Command cmd) {
  switch (cmd) {
    case Command::simulate:
      return "simulate";
    case Command::convergence:
      return "convergence";
    case Command::gap:
      return "gap";
    case Command::transform_check:
      return "transform-check";
  }
  return "unknown";
}

TransformParams transform_params_for(const RunConfig& cfg) {
  return make_transform_params(planar_for(cfg.system), cfg.transform.domain,
                               cfg.transform.grid_points, cfg.transform.c_max,
                               cfg.transform.safety);
}

json run_command(Command cmd, const RunConfig& cfg, const RunOptions& options) {
  const fs::path dir = prepare_dir(cfg, options);
  switch (cmd) {
    case Command::simulate:
      return run_simulate(cfg, options, dir);
    case Command::convergence:
      return run_convergence(cfg, options, dir);
    case Command::gap:
      return run_gap(cfg, options, dir);
    case Command::transform_check:
      return run_transform_check(cfg, dir);
  }
  return {};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config_missing:
      return 3;
    case ErrorKind::config_parse:
      return 4;
    case ErrorKind::constraint_violation:
      return 5;
    case ErrorKind::parameter_error:
      return 6;
    case ErrorKind::alpha_unbounded:
      return 7;
    case ErrorKind::inversion_failure:
      return 8;
    case ErrorKind::invariant_violation:
      return 9;
    case ErrorKind::invalid_state:
      return 10;
    case ErrorKind::dimension_mismatch:
      return 11;
    case ErrorKind::io_error:
      return 12;
  }
  return 1;
}

}  // namespace rank_sde
