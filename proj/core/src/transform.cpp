#include "rank_sde/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rank_sde/errors.hpp"
#include "rank_sde/root_find.hpp"

namespace rank_sde {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr double kLimitOffset = 1e-8;
constexpr double kLimitMismatch = 1e-4;

[[noreturn]] void alpha_unbounded(double u, const std::string& why) {
  throw Error(ErrorKind::alpha_unbounded,
              "alpha is not finite at u=" + std::to_string(u) + " (" + why + ")");
}

// Ratio (b1 - b2) / (sqrt(2) (s1^2 + s2^2)) without any singularity handling.
double raw_ratio(const PlanarSpec& s, double u) {
  const double s1 = s.sigma1(u);
  const double s2 = s.sigma2(u);
  return (s.b1(u) - s.b2(u)) / (kSqrt2 * (s1 * s1 + s2 * s2));
}

bool same_logistic_pair(const CoefficientFamily& a, const CoefficientFamily& b, FamilyKind kind) {
  return a.kind() == kind && b.kind() == kind;
}

}  // namespace

double bump_phi(double u, int order) {
  if (order < 0 || order > 2) {
    throw Error(ErrorKind::parameter_error, "bump_phi order must be 0, 1 or 2");
  }
  if (std::abs(u) > 1.0) return 0.0;
  const double m = 1.0 - u * u;
  switch (order) {
    case 0:
      return m * m * m * m;
    case 1:
      return -8.0 * u * m * m * m;
    default:
      return m * m * (56.0 * u * u - 8.0);
  }
}

PlanarSpec PlanarSpec::from_system(const SystemSpec& spec) {
  if (spec.n_particles != 2) {
    throw Error(ErrorKind::parameter_error, "the distortion map needs a system with N = 2");
  }
  if (spec.variant != ModelVariant::own_diffusion && !(spec.diffusions[0] == spec.diffusions[1])) {
    throw Error(ErrorKind::parameter_error,
                "the distortion map needs particle-indexed (own_diffusion) diffusions");
  }
  return restriction_of(spec);
}

PlanarSpec PlanarSpec::restriction_of(const SystemSpec& spec) {
  if (spec.n_particles < 2) {
    throw Error(ErrorKind::parameter_error, "planar restriction needs at least two particles");
  }
  return PlanarSpec{spec.drifts[0], spec.drifts[1], spec.diffusions[0], spec.diffusions[1],
                    spec.positivity_wrap};
}

Vec2 PlanarSpec::drift(const Vec2& x) const {
  return {x[0] <= x[1] ? b1(x[0]) : b2(x[0]), x[1] < x[0] ? b1(x[1]) : b2(x[1])};
}

Vec2 PlanarSpec::diffusion(const Vec2& x) const {
  const double u1 = positivity_wrap ? std::max(x[0], 0.0) : x[0];
  const double u2 = positivity_wrap ? std::max(x[1], 0.0) : x[1];
  const Vec2 s{sigma1(u1), sigma2(u2)};
  if (s[0] < 0.0 || s[1] < 0.0) {
    throw Error(ErrorKind::invariant_violation, "negative diffusion coefficient");
  }
  return s;
}

AlphaFunction::AlphaFunction(const PlanarSpec& spec) : spec_(spec) {
  zero_ = spec_.b1 == spec_.b2;
  for (auto kind : {FamilyKind::logistic1, FamilyKind::logistic2}) {
    if (!same_logistic_pair(spec_.b1, spec_.b2, kind) ||
        !same_logistic_pair(spec_.sigma1, spec_.sigma2, kind)) {
      continue;
    }
    const double xm = spec_.b1.params()[1];
    if (spec_.b2.params()[1] != xm) continue;
    if (kind == FamilyKind::logistic2 &&
        (spec_.sigma1.params()[1] != xm || spec_.sigma2.params()[1] != xm)) {
      continue;
    }
    const double s1 = spec_.sigma1.params()[0];
    const double s2 = spec_.sigma2.params()[0];
    if (s1 * s1 + s2 * s2 == 0.0) continue;
    const double r1 = spec_.b1.params()[0];
    const double r2 = spec_.b2.params()[0];
    reduced_ = Reduced{kind, (r1 - r2) / (kSqrt2 * (s1 * s1 + s2 * s2)), xm};
  }
}

double AlphaFunction::eval(double u, int order) const {
  if (order < 0 || order > 2) {
    throw Error(ErrorKind::parameter_error, "alpha derivative order must be 0, 1 or 2");
  }
  const Jet j = jet(u);
  return order == 0 ? j.value : (order == 1 ? j.d1 : j.d2);
}

Jet AlphaFunction::jet(double u) const {
  if (zero_) return {};
  if (reduced_) {
    if (reduced_->kind == FamilyKind::logistic2) return {reduced_->scale, 0.0, 0.0};
    // logistic1: scale * max(1 - u/x_max, 0)
    const double m = 1.0 - u / reduced_->x_max;
    if (m <= 0.0) return {};
    return {reduced_->scale * m, -reduced_->scale / reduced_->x_max, 0.0};
  }
  return generic_jet(u);
}

double AlphaFunction::limit_value(double u) const {
  // One-sided values at two offsets: a removable singularity settles, a pole
  // does not.
  const double left = raw_ratio(spec_, u - kLimitOffset);
  const double right = raw_ratio(spec_, u + kLimitOffset);
  const double left_far = raw_ratio(spec_, u - 100.0 * kLimitOffset);
  const double right_far = raw_ratio(spec_, u + 100.0 * kLimitOffset);
  for (double v : {left, right, left_far, right_far}) {
    if (!std::isfinite(v)) {
      alpha_unbounded(u, "sigma1^2 + sigma2^2 vanishes and the limit is not finite");
    }
  }
  auto close = [](double a, double b) {
    return std::abs(a - b) <= kLimitMismatch * std::max({1.0, std::abs(a), std::abs(b)});
  };
  if (!close(left, left_far) || !close(right, right_far)) {
    alpha_unbounded(u, "ratio diverges at a root of sigma1^2 + sigma2^2");
  }
  if (!close(left, right)) alpha_unbounded(u, "one-sided limits disagree");
  return 0.5 * (left + right);
}

Jet AlphaFunction::generic_jet(double u) const {
  const Jet b1 = spec_.b1.jet(u);
  const Jet b2 = spec_.b2.jet(u);
  const Jet s1 = spec_.sigma1.jet(u);
  const Jet s2 = spec_.sigma2.jet(u);
  const double n0 = b1.value - b2.value;
  const double n1 = b1.d1 - b2.d1;
  const double n2 = b1.d2 - b2.d2;
  const double d0 = s1.value * s1.value + s2.value * s2.value;

  if (!(d0 > 0.0)) {
    // Removable singularity: two-sided limit for the value, central
    // differences for the derivatives.
    const double h = std::max(1e-5, 1e-5 * std::abs(u));
    auto v = [&](double t) {
      const double s1t = spec_.sigma1(t);
      const double s2t = spec_.sigma2(t);
      return s1t * s1t + s2t * s2t > 0.0 ? raw_ratio(spec_, t) : limit_value(t);
    };
    const double f0 = limit_value(u);
    const double fp = v(u + h);
    const double fm = v(u - h);
    const Jet j{f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
    if (!std::isfinite(j.d1) || !std::isfinite(j.d2)) alpha_unbounded(u, "derivative");
    return j;
  }

  const double d1 = 2.0 * (s1.value * s1.d1 + s2.value * s2.d1);
  const double d2 = 2.0 * (s1.d1 * s1.d1 + s1.value * s1.d2 + s2.d1 * s2.d1 + s2.value * s2.d2);
  const double q = n0 / d0;
  const double q1 = (n1 * d0 - n0 * d1) / (d0 * d0);
  const double q2 = (n2 * d0 - n0 * d2) / (d0 * d0) - 2.0 * d1 * (n1 * d0 - n0 * d1) / (d0 * d0 * d0);
  const Jet j{q * kInvSqrt2, q1 * kInvSqrt2, q2 * kInvSqrt2};
  if (!std::isfinite(j.value) || !std::isfinite(j.d1) || !std::isfinite(j.d2)) {
    alpha_unbounded(u, "non-finite ratio");
  }
  return j;
}

void TransformParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConstraintError("transform.c", "must be positive");
  if (!(safety > 0.0 && safety < 1.0)) {
    throw ConstraintError("transform.safety", "must lie in (0, 1)");
  }
  if (!(alpha_sup >= 0.0) || !std::isfinite(alpha_sup)) {
    throw ConstraintError("transform.alpha_sup", "must be finite and nonnegative");
  }
  if (alpha_sup > 0.0 && !(16.0 * alpha_sup * c < 1.0)) {
    throw ConstraintError("transform.c", "must satisfy c < 1/(16 alpha_sup)");
  }
}

double estimate_alpha_sup(const AlphaFunction& alpha, Interval domain, int grid_points) {
  if (grid_points < 101) {
    throw Error(ErrorKind::parameter_error, "alpha scan needs at least 101 grid points");
  }
  if (!(domain.lo < domain.hi) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi)) {
    throw Error(ErrorKind::parameter_error, "alpha scan domain must be a finite interval lo < hi");
  }
  const double h = (domain.hi - domain.lo) / (grid_points - 1);
  auto node = [&](int i) { return i == grid_points - 1 ? domain.hi : domain.lo + i * h; };
  int best = 0;
  double best_abs = -1.0;
  for (int i = 0; i < grid_points; ++i) {
    const double a = std::abs(alpha(node(i)));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  const double lo = node(std::max(best - 1, 0));
  const double hi = node(std::min(best + 1, grid_points - 1));
  const double fine = h / 4.0;
  for (double u = lo; u <= hi; u += fine) best_abs = std::max(best_abs, std::abs(alpha(u)));
  return 1.1 * best_abs;
}

double select_c(double alpha_sup, std::optional<double> c_max, double safety) {
  if (!(alpha_sup >= 0.0)) throw Error(ErrorKind::parameter_error, "alpha_sup must be >= 0");
  if (alpha_sup == 0.0) return c_max.value_or(kDefaultCMax);
  const double c = safety / (16.0 * alpha_sup);
  return c_max ? std::min(c, *c_max) : c;
}

TransformParams make_transform_params(const PlanarSpec& spec, Interval domain, int grid_points,
                                      std::optional<double> c_max, double safety) {
  const AlphaFunction alpha(spec);
  TransformParams p;
  p.alpha_sup = alpha.identically_zero() ? 0.0 : estimate_alpha_sup(alpha, domain, grid_points);
  p.alpha_domain = domain;
  p.safety = safety;
  p.c = select_c(p.alpha_sup, c_max, safety);
  p.validate();
  return p;
}

Vec2 rotate_S(const Vec2& x) { return {(x[0] - x[1]) * kInvSqrt2, 0.5 * (x[0] + x[1])}; }

Vec2 rotate_tau(const Vec2& y) {
  return {y[0] * kInvSqrt2 + y[1], -y[0] * kInvSqrt2 + y[1]};
}

DistortionMap::DistortionMap(PlanarSpec spec, TransformParams params)
    : spec_(std::move(spec)), params_(params), alpha_(spec_) {
  if (!(params_.c > 0.0) || !std::isfinite(params_.c)) {
    throw Error(ErrorKind::parameter_error, "c must be positive and finite");
  }
}

double DistortionMap::distance_to_diagonal(const Vec2& x) {
  return std::abs(x[0] - x[1]) * kInvSqrt2;
}

Vec2 DistortionMap::g(const Vec2& y) const {
  const double p = bump_phi(y[0] / params_.c, 0);
  if (p == 0.0) return y;
  return {y[0] + 2.0 * y[0] * std::abs(y[0]) * p * alpha_(y[1]), y[1]};
}

GJet DistortionMap::g_jet(const Vec2& y) const {
  GJet j;
  j.value = y;
  j.d_y1 = {1.0, 0.0};
  j.d_y2 = {0.0, 1.0};
  const double c = params_.c;
  const double q = y[0] / c;
  if (std::abs(q) >= 1.0) return j;

  const double p0 = bump_phi(q, 0);
  const double p1 = bump_phi(q, 1);
  const double p2 = bump_phi(q, 2);
  const Jet a = alpha_.jet(y[1]);
  const double s = sign_of(y[0]);
  const double y1 = y[0];
  const double abs_y1 = std::abs(y1);
  const double sq = y1 * abs_y1;  // y1^2 sgn(y1)

  j.value[0] = y1 + 2.0 * sq * p0 * a.value;
  j.d_y1[0] = 1.0 + 4.0 * abs_y1 * p0 * a.value + (2.0 / c) * sq * p1 * a.value;
  j.d_y2[0] = 2.0 * sq * p0 * a.d1;
  j.d_y1y1[0] = (4.0 * s * p0 + (8.0 / c) * abs_y1 * p1 + (2.0 / (c * c)) * sq * p2) * a.value;
  j.d_y2y2[0] = 2.0 * sq * p0 * a.d2;
  j.d_y1y2[0] = (4.0 * abs_y1 * p0 + (2.0 / c) * sq * p1) * a.d1;
  return j;
}

Vec2 DistortionMap::G(const Vec2& x) const {
  const double diff = x[0] - x[1];
  const double p = bump_phi(diff / (kSqrt2 * params_.c), 0);
  if (p == 0.0) return x;
  const double a = alpha_((x[0] + x[1]) / 2.0);
  if (a == 0.0) return x;
  const double disp = kInvSqrt2 * diff * std::abs(diff) * p * a;
  return {x[0] + disp, x[1] - disp};
}

namespace {

// G' = tau' g' S' written as I + n r^T so that it is exactly the identity
// wherever g' is.
Mat2 jacobian_from(const GJet& j) {
  const double e11 = j.d_y1[0] - 1.0;
  const double e12 = j.d_y2[0];
  const double r0 = e11 * kInvSqrt2 + 0.5 * e12;
  const double r1 = -e11 * kInvSqrt2 + 0.5 * e12;
  return {{{1.0 + kInvSqrt2 * r0, kInvSqrt2 * r1}, {-kInvSqrt2 * r0, 1.0 - kInvSqrt2 * r1}}};
}

// Only g_1 is nonlinear, so Hess G_k = tau'_{k1} S'^T Hess(g_1) S'.
std::array<Mat2, 2> hessians_from(const GJet& j) {
  const double h11 = j.d_y1y1[0];
  const double h12 = j.d_y1y2[0];
  const double h22 = j.d_y2y2[0];
  constexpr Mat2 sp{{{kInvSqrt2, -kInvSqrt2}, {0.5, 0.5}}};
  const Mat2 h{{{h11, h12}, {h12, h22}}};
  Mat2 m{};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      double acc = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) acc += sp[k][a] * h[k][l] * sp[l][b];
      }
      m[a][b] = acc;
    }
  }
  std::array<Mat2, 2> out{};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      out[0][a][b] = kInvSqrt2 * m[a][b];
      out[1][a][b] = -kInvSqrt2 * m[a][b];
    }
  }
  return out;
}

}  // namespace

Mat2 DistortionMap::jacobian(const Vec2& x) const { return jacobian_from(g_jet(rotate_S(x))); }

std::array<Mat2, 2> DistortionMap::hessians(const Vec2& x) const {
  return hessians_from(g_jet(rotate_S(x)));
}

Vec2 DistortionMap::inverse(const Vec2& z) const {
  const double c = params_.c;
  const Vec2 w = rotate_S(z);
  if (std::abs(w[0]) >= c) return z;
  const double a = alpha_(w[1]);
  if (a == 0.0) return z;
  if (16.0 * c * std::abs(a) >= 1.0) {
    throw Error(ErrorKind::inversion_failure,
                "c violates the 1/(16 |alpha|) bound at z=(" + std::to_string(z[0]) + ", " +
                    std::to_string(z[1]) + ")");
  }

  auto h = [&](double t) {
    const double q = t / c;
    const double p0 = bump_phi(q, 0);
    const double p1 = bump_phi(q, 1);
    const double at = std::abs(t);
    const double val = t + 2.0 * t * at * p0 * a - w[0];
    const double der = 1.0 + 4.0 * at * p0 * a + (2.0 / c) * t * at * p1 * a;
    return std::pair{val, der};
  };

  const double znorm = std::hypot(z[0], z[1]);
  const double ftol = 1e-13 * (1.0 + znorm);
  double lo = std::max(-c, w[0] - 0.25 * c);
  double hi = std::min(c, w[0] + 0.25 * c);
  if ((h(lo).first > 0.0) || (h(hi).first < 0.0)) {
    lo = -c;
    hi = c;
  }
  const auto root = safeguarded_newton(h, lo, hi, ftol, 100);
  if (!root || !(h(root->root).second > 0.0)) {
    throw Error(ErrorKind::inversion_failure,
                "G inversion failed at z=(" + std::to_string(z[0]) + ", " +
                    std::to_string(z[1]) + "); c likely violates the 1/(16 alpha_sup) bound");
  }
  return rotate_tau({root->root, w[1]});
}

ZCoefficients DistortionMap::z_coefficients(const Vec2& z) const {
  return z_coefficients_at(inverse(z));
}

ZCoefficients DistortionMap::z_coefficients_at(const Vec2& x) const {
  const GJet j = g_jet(rotate_S(x));
  const Mat2 jac = jacobian_from(j);
  const Vec2 b = spec_.drift(x);
  const Vec2 s = spec_.diffusion(x);
  ZCoefficients out;
  out.x = x;
  const bool curved = j.d_y1y1[0] != 0.0 || j.d_y1y2[0] != 0.0 || j.d_y2y2[0] != 0.0;
  std::array<Mat2, 2> hess{};
  if (curved) hess = hessians_from(j);
  for (int k = 0; k < 2; ++k) {
    const double ito = 0.5 * (s[0] * s[0] * hess[k][0][0] + s[1] * s[1] * hess[k][1][1]);
    out.drift[k] = jac[k][0] * b[0] + jac[k][1] * b[1] + ito;
    out.diffusion[k] = {jac[k][0] * s[0], jac[k][1] * s[1]};
  }
  return out;
}

}  // namespace rank_sde
