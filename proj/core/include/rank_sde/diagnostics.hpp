#pragma once

#include <cstdint>

#include "rank_sde/transform.hpp"

namespace rank_sde {

struct TransformCheckOptions {
  double box = 5.0;                 // scan Theta_c within [-box, box]^2
  int det_grid = 201;               // nodes per axis
  std::size_t roundtrip_points = 10'000;
  std::size_t derivative_points = 1'000;
  double fd_step_rel = 1e-5;        // central-difference step as a fraction of c
  std::uint64_t seed = 0;
};

struct TransformCheckReport {
  double c = 0.0;
  double alpha_sup = 0.0;
  double det_min = 0.0;
  double roundtrip_max = 0.0;        // max ||G^{-1}(G(x)) - x|| / (1 + ||x||)
  double derivative_max_rel = 0.0;   // analytic g derivatives vs central differences
  bool planar_restriction = false;
};

// Relative discrepancy used by the derivative check; values below 1 in
// magnitude are compared on an absolute scale.
double derivative_rel_error(double analytic, double numeric);

// Numerical certificate that G is a diffeomorphism with consistent
// derivatives for the given parameters.
TransformCheckReport check_transform(const DistortionMap& map, const TransformCheckOptions& options);

}  // namespace rank_sde
