#pragma once

#include <array>
#include <optional>

#include "rank_sde/coefficients.hpp"

namespace rank_sde {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// sgn with sgn(0) = 0.
constexpr double sign_of(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Compactly supported bump (1 - u^2)^4 on [-1, 1] and its first two derivatives.
double bump_phi(double u, int order);

// N = 2 system with rank-indexed drifts and particle-indexed diffusions.
struct PlanarSpec {
  CoefficientFamily b1;
  CoefficientFamily b2;
  CoefficientFamily sigma1;
  CoefficientFamily sigma2;
  bool positivity_wrap = false;

  static PlanarSpec from_system(const SystemSpec& spec);
  // First two rank drifts and first two diffusions of an arbitrary system.
  static PlanarSpec restriction_of(const SystemSpec& spec);

  Vec2 drift(const Vec2& x) const;
  Vec2 diffusion(const Vec2& x) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Drift-jump to diffusion ratio alpha(u) = (b1 - b2) / (sqrt(2) (sigma1^2 + sigma2^2)).
//
// Shared roots of sigma1 and sigma2 are removable for the logistic pairs; those
// pairs are evaluated through their algebraically reduced form. Other pairs hit
// at a root of sigma1^2 + sigma2^2 are evaluated as the two-sided limit.
class AlphaFunction {
 public:
  explicit AlphaFunction(const PlanarSpec& spec);

  double operator()(double u) const { return eval(u, 0); }
  double eval(double u, int order) const;
  Jet jet(double u) const;

  bool has_reduced_form() const noexcept { return reduced_.has_value(); }
  // True when b1 == b2 identically, so the transform is inert.
  bool identically_zero() const noexcept { return zero_; }

 private:
  struct Reduced {
    FamilyKind kind;
    double scale;  // (r1 - r2) / (sqrt(2) (s1^2 + s2^2))
    double x_max;
  };

  Jet generic_jet(double u) const;
  double limit_value(double u) const;

  PlanarSpec spec_;
  std::optional<Reduced> reduced_;
  bool zero_ = false;
};

struct TransformParams {
  double c = 1.0;
  double alpha_sup = 0.0;
  Interval alpha_domain;
  double safety = 0.5;

  // Throws when c violates c < 1 / (16 alpha_sup).
  void validate() const;
};

double estimate_alpha_sup(const AlphaFunction& alpha, Interval domain, int grid_points);

inline constexpr double kDefaultSafety = 0.5;
inline constexpr double kDefaultCMax = 1.0;

double select_c(double alpha_sup, std::optional<double> c_max, double safety = kDefaultSafety);

TransformParams make_transform_params(const PlanarSpec& spec, Interval domain, int grid_points,
                                      std::optional<double> c_max,
                                      double safety = kDefaultSafety);

// Rotation to normal/tangential coordinates of the diagonal and back.
Vec2 rotate_S(const Vec2& x);
Vec2 rotate_tau(const Vec2& y);

// g = S o G o tau together with every first and second derivative.
struct GJet {
  Vec2 value{};
  Vec2 d_y1{};
  Vec2 d_y2{};
  Vec2 d_y1y1{};
  Vec2 d_y2y2{};
  Vec2 d_y1y2{};
};

struct ZCoefficients {
  Vec2 x{};          // G^{-1}(z)
  Vec2 drift{};
  Mat2 diffusion{};  // row k, column = Brownian component
};

// The distortion map G on the plane, its inverse, and the coefficients of the
// SDE solved by Z = G(X).
class DistortionMap {
 public:
  DistortionMap(PlanarSpec spec, TransformParams params);

  const PlanarSpec& spec() const noexcept { return spec_; }
  const TransformParams& params() const noexcept { return params_; }
  const AlphaFunction& alpha() const noexcept { return alpha_; }

  Vec2 g(const Vec2& y) const;
  GJet g_jet(const Vec2& y) const;

  Vec2 G(const Vec2& x) const;
  Mat2 jacobian(const Vec2& x) const;
  // Hessians of G_1 and G_2.
  std::array<Mat2, 2> hessians(const Vec2& x) const;

  // Throws Error(inversion_failure) when the scalar root find fails.
  Vec2 inverse(const Vec2& z) const;

  ZCoefficients z_coefficients(const Vec2& z) const;
  // Same coefficients when G^{-1}(z) is already known.
  ZCoefficients z_coefficients_at(const Vec2& x) const;

  // Distance of x to the diagonal, |x1 - x2| / sqrt(2).
  static double distance_to_diagonal(const Vec2& x);

 private:
  PlanarSpec spec_;
  TransformParams params_;
  AlphaFunction alpha_;
};

}  // namespace rank_sde
