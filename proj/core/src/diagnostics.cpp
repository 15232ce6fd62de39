#include "rank_sde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rank_sde {

double derivative_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

namespace {

double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

// Largest relative discrepancy between the analytic jet of g at y and
// central differences: of g for first derivatives, of the analytic first
// derivatives for second derivatives.
double jet_discrepancy(const DistortionMap& map, const Vec2& y, double h) {
  const GJet j = map.g_jet(y);
  const Vec2 e1{h, 0.0};
  const Vec2 e2{0.0, h};
  auto shifted = [&](const Vec2& d, double s) { return Vec2{y[0] + s * d[0], y[1] + s * d[1]}; };
  const Vec2 gp1 = map.g(shifted(e1, 1)), gm1 = map.g(shifted(e1, -1));
  const Vec2 gp2 = map.g(shifted(e2, 1)), gm2 = map.g(shifted(e2, -1));
  const GJet jp1 = map.g_jet(shifted(e1, 1)), jm1 = map.g_jet(shifted(e1, -1));
  const GJet jp2 = map.g_jet(shifted(e2, 1)), jm2 = map.g_jet(shifted(e2, -1));
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    worst = std::max(worst, derivative_rel_error(j.d_y1[k], (gp1[k] - gm1[k]) / (2 * h)));
    worst = std::max(worst, derivative_rel_error(j.d_y2[k], (gp2[k] - gm2[k]) / (2 * h)));
    worst = std::max(worst,
                     derivative_rel_error(j.d_y1y1[k], (jp1.d_y1[k] - jm1.d_y1[k]) / (2 * h)));
    worst = std::max(worst,
                     derivative_rel_error(j.d_y2y2[k], (jp2.d_y2[k] - jm2.d_y2[k]) / (2 * h)));
    worst = std::max(worst,
                     derivative_rel_error(j.d_y1y2[k], (jp2.d_y1[k] - jm2.d_y1[k]) / (2 * h)));
  }
  return worst;
}

}  // namespace

TransformCheckReport check_transform(const DistortionMap& map,
                                     const TransformCheckOptions& options) {
  TransformCheckReport r;
  const double c = map.params().c;
  r.c = c;
  r.alpha_sup = map.params().alpha_sup;

  // Jacobian determinant over Theta_c in rotated coordinates.
  r.det_min = std::numeric_limits<double>::infinity();
  const double b = options.box;
  const int n = options.det_grid;
  for (int i = 0; i < n; ++i) {
    const double y1 = -c + 2.0 * c * i / (n - 1);
    for (int k = 0; k < n; ++k) {
      const double y2 = -b + 2.0 * b * k / (n - 1);
      const Vec2 x = rotate_tau({y1, y2});
      if (std::abs(x[0]) > b || std::abs(x[1]) > b) continue;
      r.det_min = std::min(r.det_min, det(map.jacobian(x)));
    }
  }

  std::mt19937_64 rng(options.seed);
  // Round trip: half the points inside the band around the diagonal.
  std::uniform_real_distribution<double> box(-b, b);
  std::uniform_real_distribution<double> band(-c, c);
  for (std::size_t p = 0; p < options.roundtrip_points; ++p) {
    Vec2 x;
    if (p % 2 == 0) {
      x = {box(rng), box(rng)};
    } else {
      x = rotate_tau({band(rng), box(rng)});
    }
    const Vec2 back = map.inverse(map.G(x));
    const double err = std::hypot(back[0] - x[0], back[1] - x[1]);
    r.roundtrip_max = std::max(r.roundtrip_max, err / (1.0 + std::hypot(x[0], x[1])));
  }

  const double l = 2.0 * c;
  std::uniform_real_distribution<double> square(-2.0 * l, 2.0 * l);
  for (std::size_t p = 0; p < options.derivative_points;) {
    const Vec2 y{square(rng), square(rng)};
    if (std::abs(y[0]) <= 1e-3) continue;
    r.derivative_max_rel = std::max(r.derivative_max_rel, jet_discrepancy(map, y, options.fd_step_rel * c));
    ++p;
  }
  return r;
}

}  // namespace rank_sde
