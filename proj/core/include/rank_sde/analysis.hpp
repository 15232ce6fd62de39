#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rank_sde/coefficients.hpp"
#include "rank_sde/scheme.hpp"
#include "rank_sde/transform.hpp"

namespace rank_sde {

inline constexpr double kDefaultCollisionEps = 1e-3;

// Aggregates over an ensemble of paths. Terminal moments use completed paths
// only; extrema and counters cover every visited iterate.
struct EnsembleStats {
  std::size_t n_paths = 0;
  std::size_t n_particles = 0;
  std::size_t n_completed = 0;
  std::vector<double> terminal_mean;
  std::vector<double> terminal_sd;
  double min_over_paths = 0.0;
  double max_over_paths = 0.0;
  double occupation_fraction_theta_c = 0.0;
  std::uint64_t near_collision_count = 0;
  // Diffusion coefficients evaluated at a nonpositive component, and those of
  // them that were not exactly zero (meaningful under positivity wrapping).
  std::uint64_t diffusion_at_nonpositive = 0;
  std::uint64_t nonzero_diffusion_at_nonpositive = 0;
  std::map<std::string, std::size_t> status_counts;
};

// Mergeable partial sums behind EnsembleStats; merging accumulators built
// over disjoint path ranges equals accumulating over their union.
class EnsembleAccumulator {
 public:
  explicit EnsembleAccumulator(std::size_t n_particles = 0);

  void add_path(PathStatus status, std::span<const double> terminal_state);
  void observe_state(std::span<const double> x);
  void observe_occupation(bool inside_theta_c);
  void observe_near_collision() { ++near_collisions_; }
  void observe_diffusion(std::span<const double> x, std::span<const double> diffusion);

  void merge(const EnsembleAccumulator& other);
  EnsembleStats finish() const;

 private:
  std::size_t n_particles_;
  std::size_t n_paths_ = 0;
  std::size_t n_completed_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
  double min_ = 0.0;
  double max_ = 0.0;
  bool seen_state_ = false;
  std::uint64_t occupied_ = 0;
  std::uint64_t occupation_total_ = 0;
  std::uint64_t near_collisions_ = 0;
  std::uint64_t diffusion_at_nonpositive_ = 0;
  std::uint64_t diffusion_violations_ = 0;
  std::map<std::string, std::size_t> status_counts_;
};

struct EnsembleOptions {
  double eps_collision = kDefaultCollisionEps;
  unsigned threads = 1;
  std::uint64_t first_path = 0;
  std::size_t dump_paths = 0;  // number of leading paths whose trajectory is kept
  std::size_t record_stride = 1;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<Trajectory> trajectories;  // paths first_path .. first_path + dump_paths - 1
};

// Simulates paths first_path .. first_path + n_paths - 1 with the scheme of
// cfg. The transformed scheme and the theta_c occupation need params.
EnsembleResult run_ensemble(const SystemSpec& spec, const std::optional<TransformParams>& params,
                            const SimConfig& cfg, std::size_t n_paths,
                            const EnsembleOptions& options = {});

// Accumulator for one ensemble without finishing it, for merge tests.
EnsembleAccumulator accumulate_ensemble(const SystemSpec& spec,
                                        const std::optional<TransformParams>& params,
                                        const SimConfig& cfg, std::size_t n_paths,
                                        const EnsembleOptions& options = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = intercept + slope x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct ConvergenceTable {
  std::vector<double> dts;
  std::vector<double> strong_errors;
  double reference_dt = 0.0;
  double fitted_order = 0.0;
  double fit_r2 = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_excluded = 0;
};

// Strong error at t_end of each dt against a reference at min(dts)/64 driven
// by the same Brownian path; the order is the slope of log2(error) on log2(dt).
ConvergenceTable strong_order(const SystemSpec& spec, const std::optional<TransformParams>& params,
                              const SimConfig& base_cfg, std::span<const double> dts,
                              std::size_t n_paths, unsigned threads = 1);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;
};

struct GapOptions {
  double burn_in_fraction = 0.5;
  std::size_t hist_bins = 50;
  double hist_max = 5.0;
  unsigned threads = 1;
};

struct GapRecord {
  double gap_mean = 0.0;
  double gap_min = 0.0;
  std::uint64_t n_samples = 0;
  std::size_t n_paths = 0;
  Histogram hist;
};

// Time-averaged gap X^(2) - X^(1) after burn-in for the N = 2 system with
// constant coefficients and b1 > b2.
GapRecord gap_statistics(const SystemSpec& spec, const std::optional<TransformParams>& params,
                         const SimConfig& cfg, std::size_t n_paths, const GapOptions& options = {});

}  // namespace rank_sde
