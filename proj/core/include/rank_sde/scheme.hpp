#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rank_sde/coefficients.hpp"
#include "rank_sde/transform.hpp"

namespace rank_sde {

enum class SchemeKind { naive, transformed };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(std::string_view name);

inline constexpr double kDefaultExplosionRadius = 1e6;

struct SimConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double r_explode = kDefaultExplosionRadius;
  SchemeKind scheme = SchemeKind::naive;

  void validate() const;
};

// Step count and the length of the last (possibly partial) step.
struct TimeGrid {
  std::uint64_t steps = 0;
  double dt = 0.0;
  double last_dt = 0.0;

  static TimeGrid of(double dt, double t_end);
  double time_at(std::uint64_t m, double t_end) const;
  double step_length(std::uint64_t m) const { return m + 1 == steps ? last_dt : dt; }
};

enum class PathStatusKind { completed, exploded, inversion_failed };

std::string_view to_string(PathStatusKind kind);

struct PathStatus {
  PathStatusKind kind = PathStatusKind::completed;
  double t = 0.0;  // time of the failing step, or t_end when completed

  bool ok() const noexcept { return kind == PathStatusKind::completed; }
};

struct Trajectory {
  std::size_t n_particles = 0;
  std::vector<double> times;
  std::vector<double> states;  // row-major, times.size() x n_particles
  PathStatus status;

  std::span<const double> row(std::size_t m) const {
    return {states.data() + m * n_particles, n_particles};
  }
  std::size_t rows() const noexcept { return times.size(); }
};

// Source of Brownian increments for one path.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  // Fills out with the increments of time step `step`, of length dt.
  virtual void fill(std::uint64_t step, double dt, std::span<double> out) = 0;
};

// Increments drawn directly from the counter-based stream of one path.
class CounterIncrements final : public IncrementSource {
 public:
  CounterIncrements(std::uint64_t seed, std::uint64_t path_index)
      : seed_(seed), path_(path_index) {}
  void fill(std::uint64_t step, double dt, std::span<double> out) override;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
};

// Coarse increments as sums of `ratio` consecutive fine increments of length
// fine_dt, so that coarse and fine paths share one Brownian realisation.
class CoarsenedIncrements final : public IncrementSource {
 public:
  CoarsenedIncrements(std::uint64_t seed, std::uint64_t path_index, std::uint64_t ratio,
                      double fine_dt);
  void fill(std::uint64_t step, double dt, std::span<double> out) override;

 private:
  CounterIncrements fine_;
  std::uint64_t ratio_;
  double fine_dt_;
  std::vector<double> scratch_;
};

// Fine increments drawn once and replayed; coarse steps sum consecutive
// blocks exactly as CoarsenedIncrements does.
class RecordedIncrements final : public IncrementSource {
 public:
  RecordedIncrements(std::uint64_t seed, std::uint64_t path_index, std::size_t n_components,
                     std::uint64_t fine_steps, double fine_dt);

  void set_ratio(std::uint64_t ratio) { ratio_ = ratio; }
  void fill(std::uint64_t step, double dt, std::span<double> out) override;

 private:
  std::size_t n_;
  double fine_dt_;
  std::uint64_t fine_steps_;
  std::uint64_t ratio_ = 1;
  std::vector<double> fine_;  // fine_steps x n_
};

// Euler-Maruyama on X for any N.
class NaiveStepper {
 public:
  explicit NaiveStepper(const SystemSpec& spec);

  void reset(std::span<const double> x0);
  void step(double dt, std::span<const double> dw);

  std::span<const double> state() const noexcept { return x_; }
  // Diffusion coefficients used by the most recent step.
  std::span<const double> last_diffusion() const noexcept { return diff_; }

 private:
  const SystemSpec* spec_;
  std::vector<double> x_;
  std::vector<double> drift_;
  std::vector<double> diff_;
};

// Euler-Maruyama on Z = G(X), mapping every iterate back through G^{-1}.
class TransformedStepper {
 public:
  explicit TransformedStepper(const DistortionMap& map);

  void reset(std::span<const double> x0);
  void step(double dt, std::span<const double> dw);

  std::span<const double> state() const noexcept { return x_; }
  std::span<const double> z() const noexcept { return z_; }
  std::span<const double> last_diffusion() const noexcept { return diff_; }

 private:
  const DistortionMap* map_;
  Vec2 z_{};
  Vec2 x_{};
  Vec2 diff_{};
};

// Generic driver shared by both schemes. visit(m, t, stepper) sees the initial
// state (m = 0) and every accepted iterate; a non-finite state or one with
// norm above r_explode ends the path without being visited.
template <class Stepper, class Visit>
PathStatus run_path(Stepper& stepper, std::span<const double> x0, const SimConfig& cfg,
                    IncrementSource& source, Visit&& visit);

Trajectory simulate_naive(const SystemSpec& spec, const SimConfig& cfg);
Trajectory simulate_naive(const SystemSpec& spec, const SimConfig& cfg, IncrementSource& source);

Trajectory simulate_transformed(const PlanarSpec& spec, const TransformParams& params,
                                const Vec2& x0, const SimConfig& cfg);
Trajectory simulate_transformed(const DistortionMap& map, const Vec2& x0, const SimConfig& cfg,
                                IncrementSource& source);

}  // namespace rank_sde

#include "rank_sde/scheme_impl.hpp"
