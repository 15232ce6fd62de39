#pragma once

#include <cmath>
#include <vector>

#include "rank_sde/errors.hpp"

namespace rank_sde {

template <class Stepper, class Visit>
PathStatus run_path(Stepper& stepper, std::span<const double> x0, const SimConfig& cfg,
                    IncrementSource& source, Visit&& visit) {
  const TimeGrid grid = TimeGrid::of(cfg.dt, cfg.t_end);
  stepper.reset(x0);
  visit(std::uint64_t{0}, 0.0, stepper);
  std::vector<double> dw(x0.size());
  for (std::uint64_t m = 0; m < grid.steps; ++m) {
    const double h = grid.step_length(m);
    const double t_next = grid.time_at(m + 1, cfg.t_end);
    source.fill(m, h, dw);
    try {
      stepper.step(h, dw);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::inversion_failure) {
        return {PathStatusKind::inversion_failed, t_next};
      }
      throw;
    }
    double norm2 = 0.0;
    for (double v : stepper.state()) norm2 += v * v;
    if (!std::isfinite(norm2) || norm2 > cfg.r_explode * cfg.r_explode) {
      return {PathStatusKind::exploded, t_next};
    }
    visit(m + 1, t_next, stepper);
  }
  return {PathStatusKind::completed, cfg.t_end};
}

}  // namespace rank_sde
