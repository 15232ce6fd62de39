#include "rank_sde/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rank_sde/errors.hpp"
#include "rank_sde/random.hpp"

namespace rank_sde {

std::string_view to_string(SchemeKind kind) {
  return kind == SchemeKind::naive ? "naive" : "transformed";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "naive") return SchemeKind::naive;
  if (name == "transformed") return SchemeKind::transformed;
  throw Error(ErrorKind::parameter_error, "unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(PathStatusKind kind) {
  switch (kind) {
    case PathStatusKind::completed:
      return "completed";
    case PathStatusKind::exploded:
      return "exploded";
    case PathStatusKind::inversion_failed:
      return "inversion_failed";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConstraintError("sim.dt", "must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw ConstraintError("sim.t_end", "must be positive");
  }
  if (dt > t_end) throw ConstraintError("sim.dt", "must not exceed sim.t_end");
  if (!(r_explode > 0.0)) throw ConstraintError("sim.r_explode", "must be positive");
}

TimeGrid TimeGrid::of(double dt, double t_end) {
  TimeGrid g;
  g.dt = dt;
  const double ratio = t_end / dt;
  g.steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(ratio * (1.0 - 1e-12))));
  g.last_dt = t_end - static_cast<double>(g.steps - 1) * dt;
  if (std::abs(g.last_dt - dt) <= 1e-9 * dt) g.last_dt = dt;
  return g;
}

double TimeGrid::time_at(std::uint64_t m, double t_end) const {
  return m >= steps ? t_end : static_cast<double>(m) * dt;
}

void CounterIncrements::fill(std::uint64_t step, double dt, std::span<double> out) {
  brownian_increments(seed_, path_, step, dt, out);
}

CoarsenedIncrements::CoarsenedIncrements(std::uint64_t seed, std::uint64_t path_index,
                                         std::uint64_t ratio, double fine_dt)
    : fine_(seed, path_index), ratio_(ratio), fine_dt_(fine_dt) {
  if (ratio_ == 0) throw Error(ErrorKind::parameter_error, "coarsening ratio must be >= 1");
  if (!(fine_dt_ > 0.0)) throw Error(ErrorKind::parameter_error, "fine dt must be > 0");
}

void CoarsenedIncrements::fill(std::uint64_t step, double dt, std::span<double> out) {
  const double expected = fine_dt_ * static_cast<double>(ratio_);
  if (std::abs(dt - expected) > 1e-9 * expected) {
    throw Error(ErrorKind::parameter_error,
                "coarse step does not span a whole number of fine steps");
  }
  scratch_.resize(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::uint64_t j = 0; j < ratio_; ++j) {
    fine_.fill(step * ratio_ + j, fine_dt_, scratch_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += scratch_[k];
  }
}

RecordedIncrements::RecordedIncrements(std::uint64_t seed, std::uint64_t path_index,
                                       std::size_t n_components, std::uint64_t fine_steps,
                                       double fine_dt)
    : n_(n_components), fine_dt_(fine_dt), fine_steps_(fine_steps), fine_(fine_steps * n_components) {
  CounterIncrements source(seed, path_index);
  for (std::uint64_t m = 0; m < fine_steps_; ++m) {
    source.fill(m, fine_dt_, std::span<double>(fine_.data() + m * n_, n_));
  }
}

void RecordedIncrements::fill(std::uint64_t step, double dt, std::span<double> out) {
  const double expected = fine_dt_ * static_cast<double>(ratio_);
  if (std::abs(dt - expected) > 1e-9 * expected || out.size() != n_ ||
      (step + 1) * ratio_ > fine_steps_) {
    throw Error(ErrorKind::parameter_error, "recorded increments do not cover the requested step");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::uint64_t j = 0; j < ratio_; ++j) {
    const double* row = fine_.data() + (step * ratio_ + j) * n_;
    for (std::size_t k = 0; k < n_; ++k) out[k] += row[k];
  }
}

NaiveStepper::NaiveStepper(const SystemSpec& spec)
    : spec_(&spec),
      x_(spec.n_particles),
      drift_(spec.n_particles),
      diff_(spec.n_particles) {}

void NaiveStepper::reset(std::span<const double> x0) {
  if (x0.size() != spec_->n_particles) {
    throw Error(ErrorKind::dimension_mismatch, "initial state does not match N");
  }
  std::copy(x0.begin(), x0.end(), x_.begin());
  std::fill(diff_.begin(), diff_.end(), 0.0);
}

void NaiveStepper::step(double dt, std::span<const double> dw) {
  drift_vector(*spec_, x_, drift_);
  diffusion_coeffs(*spec_, x_, diff_);
  for (std::size_t i = 0; i < x_.size(); ++i) x_[i] = x_[i] + drift_[i] * dt + diff_[i] * dw[i];
}

TransformedStepper::TransformedStepper(const DistortionMap& map) : map_(&map) {}

void TransformedStepper::reset(std::span<const double> x0) {
  if (x0.size() != 2) throw Error(ErrorKind::dimension_mismatch, "transformed scheme needs N = 2");
  x_ = {x0[0], x0[1]};
  z_ = map_->G(x_);
  diff_ = {0.0, 0.0};
}

void TransformedStepper::step(double dt, std::span<const double> dw) {
  const ZCoefficients co = map_->z_coefficients_at(x_);
  diff_ = map_->spec().diffusion(x_);
  for (int k = 0; k < 2; ++k) {
    z_[k] = z_[k] + co.drift[k] * dt + (co.diffusion[k][0] * dw[0] + co.diffusion[k][1] * dw[1]);
  }
  if (!std::isfinite(z_[0]) || !std::isfinite(z_[1])) {
    x_ = z_;
    return;
  }
  x_ = map_->inverse(z_);
}

namespace {

template <class Stepper>
Trajectory record(Stepper& stepper, std::span<const double> x0, const SimConfig& cfg,
                  IncrementSource& source) {
  Trajectory traj;
  traj.n_particles = x0.size();
  const TimeGrid grid = TimeGrid::of(cfg.dt, cfg.t_end);
  traj.times.reserve(grid.steps + 1);
  traj.states.reserve((grid.steps + 1) * x0.size());
  traj.status = run_path(stepper, x0, cfg, source, [&](std::uint64_t, double t, const Stepper& s) {
    traj.times.push_back(t);
    const auto x = s.state();
    traj.states.insert(traj.states.end(), x.begin(), x.end());
  });
  return traj;
}

}  // namespace

Trajectory simulate_naive(const SystemSpec& spec, const SimConfig& cfg, IncrementSource& source) {
  spec.validate();
  cfg.validate();
  NaiveStepper stepper(spec);
  return record(stepper, spec.x0, cfg, source);
}

Trajectory simulate_naive(const SystemSpec& spec, const SimConfig& cfg) {
  CounterIncrements source(cfg.seed, cfg.path_index);
  return simulate_naive(spec, cfg, source);
}

Trajectory simulate_transformed(const DistortionMap& map, const Vec2& x0, const SimConfig& cfg,
                                IncrementSource& source) {
  cfg.validate();
  TransformedStepper stepper(map);
  return record(stepper, x0, cfg, source);
}

Trajectory simulate_transformed(const PlanarSpec& spec, const TransformParams& params,
                                const Vec2& x0, const SimConfig& cfg) {
  const DistortionMap map(spec, params);
  CounterIncrements source(cfg.seed, cfg.path_index);
  return simulate_transformed(map, x0, cfg, source);
}

}  // namespace rank_sde
