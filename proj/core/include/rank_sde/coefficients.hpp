#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rank_sde {

enum class FamilyKind { constant, affine, logistic1, logistic2, polynomial };
enum class FamilyRole { drift, diffusion };

std::string_view to_string(FamilyKind kind);
std::string_view to_string(FamilyRole role);
FamilyKind parse_family_kind(std::string_view name);

// Value and first two derivatives of a scalar coefficient at one point.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Closed-form scalar coefficient selected by name and parameter vector.
//
// Parameter layouts:
//   constant          [v]
//   affine            [a0, a1]                 a0 + a1 u
//   polynomial        [a0, a1, ..., an]        evaluated by Horner's rule
//   logistic1 drift   [r, x_max]               r u^2 max(1 - u/x_max, 0)
//   logistic1 diff.   [sigma0]                 sigma0 u
//   logistic2 drift   [r, x_max]               r u^2 (1 - u/x_max)^2
//   logistic2 diff.   [sigma0, x_max]          sigma0 u (1 - u/x_max)
class CoefficientFamily {
 public:
  CoefficientFamily(FamilyKind kind, FamilyRole role, std::vector<double> params);

  static CoefficientFamily constant(double v, FamilyRole role);

  FamilyKind kind() const noexcept { return kind_; }
  FamilyRole role() const noexcept { return role_; }
  std::span<const double> params() const noexcept { return params_; }

  double operator()(double u) const;
  Jet jet(double u) const;

  // Lower bound of the interval on which the family is declared meaningful;
  // diffusion families promise nonnegativity there.
  double domain_lower() const noexcept;
  double domain_upper() const noexcept;

  bool operator==(const CoefficientFamily&) const = default;

 private:
  FamilyKind kind_;
  FamilyRole role_;
  std::vector<double> params_;
};

enum class ModelVariant { rank_diffusion, own_diffusion };

std::string_view to_string(ModelVariant variant);

struct SystemSpec {
  std::size_t n_particles = 0;
  ModelVariant variant = ModelVariant::own_diffusion;
  std::vector<CoefficientFamily> drifts;      // indexed by rank
  std::vector<CoefficientFamily> diffusions;  // by rank or by particle, per variant
  bool positivity_wrap = false;
  std::vector<double> x0;

  // Throws ConstraintError naming the offending field.
  void validate() const;
};

// Ranks are 0-based: rank_of[i] == k means particle i is the (k+1)-th smallest.
struct RankAssignment {
  std::vector<std::size_t> rank_of;
  std::vector<std::size_t> index_of;
};

// Ties are broken by particle index, lower index taking the lower rank.
RankAssignment rank_partition(std::span<const double> x);

void drift_vector(const SystemSpec& spec, std::span<const double> x, std::span<double> out);
std::vector<double> drift_vector(const SystemSpec& spec, std::span<const double> x);

void diffusion_coeffs(const SystemSpec& spec, std::span<const double> x, std::span<double> out);
std::vector<double> diffusion_coeffs(const SystemSpec& spec, std::span<const double> x);

}  // namespace rank_sde
