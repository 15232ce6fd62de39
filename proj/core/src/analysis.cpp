#include "rank_sde/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "rank_sde/errors.hpp"

namespace rank_sde {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < n && !failed; i = next++) fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

bool near_collision(std::span<const double> x, double eps, std::vector<double>& sorted) {
  sorted.assign(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k + 1 < sorted.size(); ++k) {
    if (sorted[k] - sorted[k - 1] < eps && sorted[k + 1] - sorted[k] < eps) return true;
  }
  return false;
}

Vec2 as_vec2(std::span<const double> x) { return {x[0], x[1]}; }

std::optional<DistortionMap> make_map(const SystemSpec& spec,
                                      const std::optional<TransformParams>& params,
                                      SchemeKind scheme) {
  if (scheme == SchemeKind::transformed) {
    if (spec.n_particles != 2) {
      throw ConstraintError("sim.scheme", "the transformed scheme requires N = 2");
    }
    if (!params) {
      throw Error(ErrorKind::parameter_error, "the transformed scheme needs transform parameters");
    }
    return DistortionMap(PlanarSpec::from_system(spec), *params);
  }
  return std::nullopt;
}

// Dispatches one path to the scheme's stepper.
template <class Visit>
PathStatus run_one(const SystemSpec& spec, const std::optional<DistortionMap>& map,
                   const SimConfig& cfg, IncrementSource& source, Visit&& visit) {
  if (map) {
    TransformedStepper stepper(*map);
    return run_path(stepper, spec.x0, cfg, source, visit);
  }
  NaiveStepper stepper(spec);
  return run_path(stepper, spec.x0, cfg, source, visit);
}

}  // namespace

EnsembleAccumulator::EnsembleAccumulator(std::size_t n_particles)
    : n_particles_(n_particles), mean_(n_particles, 0.0), m2_(n_particles, 0.0) {}

void EnsembleAccumulator::add_path(PathStatus status, std::span<const double> terminal_state) {
  ++n_paths_;
  ++status_counts_[std::string(to_string(status.kind))];
  if (!status.ok()) return;
  ++n_completed_;
  const double n = static_cast<double>(n_completed_);
  for (std::size_t i = 0; i < n_particles_; ++i) {
    const double delta = terminal_state[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (terminal_state[i] - mean_[i]);
  }
}

void EnsembleAccumulator::observe_state(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!seen_state_) {
    min_ = *lo;
    max_ = *hi;
    seen_state_ = true;
    return;
  }
  min_ = std::min(min_, *lo);
  max_ = std::max(max_, *hi);
}

void EnsembleAccumulator::observe_occupation(bool inside_theta_c) {
  ++occupation_total_;
  if (inside_theta_c) ++occupied_;
}

void EnsembleAccumulator::observe_diffusion(std::span<const double> x,
                                            std::span<const double> diffusion) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) continue;
    ++diffusion_at_nonpositive_;
    if (diffusion[i] != 0.0) ++diffusion_violations_;
  }
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
  if (other.n_particles_ != n_particles_) {
    throw Error(ErrorKind::dimension_mismatch, "cannot merge ensembles of different N");
  }
  const std::size_t na = n_completed_;
  const std::size_t nb = other.n_completed_;
  if (nb > 0) {
    const double n = static_cast<double>(na + nb);
    for (std::size_t i = 0; i < n_particles_; ++i) {
      const double delta = other.mean_[i] - mean_[i];
      mean_[i] += delta * static_cast<double>(nb) / n;
      m2_[i] += other.m2_[i] + delta * delta * static_cast<double>(na) * static_cast<double>(nb) / n;
    }
  }
  n_completed_ += nb;
  n_paths_ += other.n_paths_;
  if (other.seen_state_) {
    if (!seen_state_) {
      min_ = other.min_;
      max_ = other.max_;
      seen_state_ = true;
    } else {
      min_ = std::min(min_, other.min_);
      max_ = std::max(max_, other.max_);
    }
  }
  occupied_ += other.occupied_;
  occupation_total_ += other.occupation_total_;
  near_collisions_ += other.near_collisions_;
  diffusion_violations_ += other.diffusion_violations_;
  diffusion_at_nonpositive_ += other.diffusion_at_nonpositive_;
  for (const auto& [k, v] : other.status_counts_) status_counts_[k] += v;
}

EnsembleStats EnsembleAccumulator::finish() const {
  EnsembleStats s;
  s.n_paths = n_paths_;
  s.n_particles = n_particles_;
  s.n_completed = n_completed_;
  s.terminal_mean = mean_;
  s.terminal_sd.assign(n_particles_, 0.0);
  if (n_completed_ > 1) {
    for (std::size_t i = 0; i < n_particles_; ++i) {
      s.terminal_sd[i] = std::sqrt(m2_[i] / static_cast<double>(n_completed_ - 1));
    }
  }
  s.min_over_paths = min_;
  s.max_over_paths = max_;
  s.occupation_fraction_theta_c =
      occupation_total_ == 0 ? 0.0
                             : static_cast<double>(occupied_) / static_cast<double>(occupation_total_);
  s.near_collision_count = near_collisions_;
  s.diffusion_at_nonpositive = diffusion_at_nonpositive_;
  s.nonzero_diffusion_at_nonpositive = diffusion_violations_;
  s.status_counts = status_counts_;
  return s;
}

namespace {

struct PathOutcome {
  EnsembleAccumulator acc;
  std::optional<Trajectory> trajectory;
};

PathOutcome simulate_path(const SystemSpec& spec, const std::optional<TransformParams>& params,
                          const std::optional<DistortionMap>& map, const SimConfig& cfg,
                          std::uint64_t path, const EnsembleOptions& options, bool keep) {
  PathOutcome out{EnsembleAccumulator(spec.n_particles), std::nullopt};
  const std::size_t n = spec.n_particles;
  const double c = params ? params->c : 0.0;
  std::vector<double> prev(spec.x0.begin(), spec.x0.end());
  std::vector<double> terminal = prev;
  std::vector<double> sorted;
  Trajectory traj;
  traj.n_particles = n;
  const std::size_t stride = std::max<std::size_t>(1, options.record_stride);
  const TimeGrid grid = TimeGrid::of(cfg.dt, cfg.t_end);

  SimConfig path_cfg = cfg;
  path_cfg.path_index = path;
  CounterIncrements source(cfg.seed, path);
  auto visit = [&](std::uint64_t m, double t, const auto& stepper) {
    const auto x = stepper.state();
    out.acc.observe_state(x);
    if (m > 0) out.acc.observe_diffusion(prev, stepper.last_diffusion());
    if (n == 2 && params) {
      out.acc.observe_occupation(DistortionMap::distance_to_diagonal(as_vec2(x)) < c);
    }
    if (n >= 3 && near_collision(x, options.eps_collision, sorted)) out.acc.observe_near_collision();
    if (keep && (m % stride == 0 || m == grid.steps)) {
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), x.begin(), x.end());
    }
    std::copy(x.begin(), x.end(), prev.begin());
  };
  const PathStatus status = run_one(spec, map, path_cfg, source, visit);
  out.acc.add_path(status, prev);
  if (keep) {
    traj.status = status;
    out.trajectory = std::move(traj);
  }
  return out;
}

}  // namespace

namespace {

std::vector<PathOutcome> simulate_paths(const SystemSpec& spec,
                                        const std::optional<TransformParams>& params,
                                        const SimConfig& cfg, std::size_t n_paths,
                                        const EnsembleOptions& options) {
  spec.validate();
  cfg.validate();
  if (n_paths == 0) throw Error(ErrorKind::parameter_error, "n_paths must be >= 1");
  const auto map = make_map(spec, params, cfg.scheme);
  std::vector<std::optional<PathOutcome>> slots(n_paths);
  parallel_for(n_paths, options.threads, [&](std::size_t i) {
    slots[i] = simulate_path(spec, params, map, cfg, options.first_path + i, options,
                             i < options.dump_paths);
  });
  std::vector<PathOutcome> outcomes;
  outcomes.reserve(n_paths);
  for (auto& s : slots) outcomes.push_back(std::move(*s));
  return outcomes;
}

}  // namespace

EnsembleAccumulator accumulate_ensemble(const SystemSpec& spec,
                                        const std::optional<TransformParams>& params,
                                        const SimConfig& cfg, std::size_t n_paths,
                                        const EnsembleOptions& options) {
  EnsembleOptions no_dump = options;
  no_dump.dump_paths = 0;
  EnsembleAccumulator total(spec.n_particles);
  for (const auto& o : simulate_paths(spec, params, cfg, n_paths, no_dump)) total.merge(o.acc);
  return total;
}

EnsembleResult run_ensemble(const SystemSpec& spec, const std::optional<TransformParams>& params,
                            const SimConfig& cfg, std::size_t n_paths,
                            const EnsembleOptions& options) {
  EnsembleResult result;
  EnsembleAccumulator total(spec.n_particles);
  for (auto& o : simulate_paths(spec, params, cfg, n_paths, options)) {
    total.merge(o.acc);
    if (o.trajectory) result.trajectories.push_back(std::move(*o.trajectory));
  }
  result.stats = total.finish();
  return result;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::parameter_error, "least squares needs matching samples, at least 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::parameter_error, "least squares needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

ConvergenceTable strong_order(const SystemSpec& spec, const std::optional<TransformParams>& params,
                              const SimConfig& base_cfg, std::span<const double> dts,
                              std::size_t n_paths, unsigned threads) {
  spec.validate();
  if (dts.size() < 3) {
    throw Error(ErrorKind::parameter_error, "strong_order needs at least 3 step sizes for a fit");
  }
  if (n_paths == 0) throw Error(ErrorKind::parameter_error, "n_paths must be >= 1");
  for (std::size_t j = 1; j < dts.size(); ++j) {
    if (!(dts[j] < dts[j - 1])) {
      throw Error(ErrorKind::parameter_error, "step sizes must be strictly descending");
    }
  }
  const double ref_dt = dts.back() / 64.0;
  std::vector<std::uint64_t> ratios;
  for (double dt : dts) {
    const double r = dt / ref_dt;
    const auto ri = static_cast<std::uint64_t>(std::llround(r));
    if (ri == 0 || std::abs(r - static_cast<double>(ri)) > 1e-9 * r || (ri & (ri - 1)) != 0) {
      throw Error(ErrorKind::parameter_error, "step sizes must be dyadic multiples of each other");
    }
    ratios.push_back(ri);
  }
  const TimeGrid ref_grid = TimeGrid::of(ref_dt, base_cfg.t_end);
  if (ref_grid.last_dt != ref_dt || ref_grid.steps % ratios.front() != 0) {
    throw Error(ErrorKind::parameter_error, "t_end must be a whole number of coarsest steps");
  }
  SimConfig ref_cfg = base_cfg;
  ref_cfg.dt = ref_dt;
  ref_cfg.validate();
  const auto map = make_map(spec, params, base_cfg.scheme);
  const std::size_t n = spec.n_particles;

  struct PathErrors {
    bool ok = true;
    std::vector<double> err;
  };
  std::vector<PathErrors> per_path(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    RecordedIncrements source(base_cfg.seed, base_cfg.path_index + p, n, ref_grid.steps, ref_dt);
    std::vector<double> terminal(n);
    auto capture = [&](std::uint64_t, double, const auto& stepper) {
      const auto x = stepper.state();
      std::copy(x.begin(), x.end(), terminal.begin());
    };
    SimConfig cfg = ref_cfg;
    cfg.path_index = base_cfg.path_index + p;
    source.set_ratio(1);
    if (!run_one(spec, map, cfg, source, capture).ok()) {
      per_path[p].ok = false;
      return;
    }
    const std::vector<double> reference = terminal;
    for (std::size_t j = 0; j < dts.size(); ++j) {
      cfg.dt = dts[j];
      source.set_ratio(ratios[j]);
      if (!run_one(spec, map, cfg, source, capture).ok()) {
        per_path[p].ok = false;
        return;
      }
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += (terminal[i] - reference[i]) * (terminal[i] - reference[i]);
      per_path[p].err.push_back(std::sqrt(d2));
    }
  });

  ConvergenceTable table;
  table.dts.assign(dts.begin(), dts.end());
  table.reference_dt = ref_dt;
  table.strong_errors.assign(dts.size(), 0.0);
  for (const auto& pe : per_path) {
    if (!pe.ok) {
      ++table.n_excluded;
      continue;
    }
    ++table.n_paths;
    for (std::size_t j = 0; j < dts.size(); ++j) table.strong_errors[j] += pe.err[j];
  }
  if (table.n_paths == 0) throw Error(ErrorKind::parameter_error, "every path was excluded");
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < dts.size(); ++j) {
    table.strong_errors[j] /= static_cast<double>(table.n_paths);
    if (!(table.strong_errors[j] > 0.0)) {
      throw Error(ErrorKind::parameter_error, "strong error vanished; order fit undefined");
    }
    lx.push_back(std::log2(dts[j]));
    ly.push_back(std::log2(table.strong_errors[j]));
  }
  const LinearFit fit = least_squares(lx, ly);
  table.fitted_order = fit.slope;
  table.fit_r2 = fit.r2;
  return table;
}

GapRecord gap_statistics(const SystemSpec& spec, const std::optional<TransformParams>& params,
                         const SimConfig& cfg, std::size_t n_paths, const GapOptions& options) {
  spec.validate();
  cfg.validate();
  if (spec.n_particles != 2) throw Error(ErrorKind::parameter_error, "gap statistics need N = 2");
  for (const auto* families : {&spec.drifts, &spec.diffusions}) {
    for (const auto& f : *families) {
      if (f.kind() != FamilyKind::constant) {
        throw Error(ErrorKind::parameter_error, "gap statistics need constant coefficients");
      }
    }
  }
  if (!(spec.drifts[0].params()[0] > spec.drifts[1].params()[0])) {
    throw Error(ErrorKind::parameter_error, "no stationary gap unless b1 > b2");
  }
  if (n_paths == 0) throw Error(ErrorKind::parameter_error, "n_paths must be >= 1");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0)) {
    throw Error(ErrorKind::parameter_error, "burn-in fraction must lie in [0, 1)");
  }
  if (options.hist_bins == 0 || !(options.hist_max > 0.0)) {
    throw Error(ErrorKind::parameter_error, "histogram needs bins >= 1 and a positive range");
  }
  const auto map = make_map(spec, params, cfg.scheme);
  const double burn_in = options.burn_in_fraction * cfg.t_end;
  const double bin_width = options.hist_max / static_cast<double>(options.hist_bins);

  struct PathGap {
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    std::uint64_t count = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;
  };
  std::vector<PathGap> per_path(n_paths);
  parallel_for(n_paths, options.threads, [&](std::size_t p) {
    PathGap& pg = per_path[p];
    pg.counts.assign(options.hist_bins, 0);
    SimConfig path_cfg = cfg;
    path_cfg.path_index = cfg.path_index + p;
    CounterIncrements source(cfg.seed, path_cfg.path_index);
    auto visit = [&](std::uint64_t, double t, const auto& stepper) {
      if (t < burn_in) return;
      const auto x = stepper.state();
      const double gap = std::abs(x[1] - x[0]);
      pg.sum += gap;
      pg.min = std::min(pg.min, gap);
      ++pg.count;
      const auto bin = static_cast<std::size_t>(gap / bin_width);
      if (bin < options.hist_bins) {
        ++pg.counts[bin];
      } else {
        ++pg.overflow;
      }
    };
    run_one(spec, map, path_cfg, source, visit);
  });

  GapRecord rec;
  rec.n_paths = n_paths;
  rec.gap_min = std::numeric_limits<double>::infinity();
  rec.hist.counts.assign(options.hist_bins, 0);
  for (std::size_t b = 0; b <= options.hist_bins; ++b) {
    rec.hist.edges.push_back(static_cast<double>(b) * bin_width);
  }
  double total = 0.0;
  for (const auto& pg : per_path) {
    total += pg.sum;
    rec.n_samples += pg.count;
    rec.gap_min = std::min(rec.gap_min, pg.min);
    rec.hist.overflow += pg.overflow;
    for (std::size_t b = 0; b < options.hist_bins; ++b) rec.hist.counts[b] += pg.counts[b];
  }
  if (rec.n_samples == 0) throw Error(ErrorKind::parameter_error, "no samples after burn-in");
  rec.gap_mean = total / static_cast<double>(rec.n_samples);
  return rec;
}

}  // namespace rank_sde
