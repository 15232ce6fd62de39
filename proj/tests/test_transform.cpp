#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rank_sde/errors.hpp"
#include "rank_sde/transform.hpp"

using namespace rank_sde;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

CoefficientFamily cdrift(double v) { return CoefficientFamily::constant(v, FamilyRole::drift); }
CoefficientFamily cdiff(double v) { return CoefficientFamily::constant(v, FamilyRole::diffusion); }

PlanarSpec constants(double b1, double b2, double s1 = 1.0, double s2 = 1.0) {
  return PlanarSpec{cdrift(b1), cdrift(b2), cdiff(s1), cdiff(s2), false};
}

PlanarSpec logistic1_pair(double r1, double r2, double s0, double xm) {
  return PlanarSpec{CoefficientFamily(FamilyKind::logistic1, FamilyRole::drift, {r1, xm}),
                    CoefficientFamily(FamilyKind::logistic1, FamilyRole::drift, {r2, xm}),
                    CoefficientFamily(FamilyKind::logistic1, FamilyRole::diffusion, {s0}),
                    CoefficientFamily(FamilyKind::logistic1, FamilyRole::diffusion, {s0}), true};
}

// A system with position-dependent alpha, for derivative checks.
PlanarSpec wavy() {
  return PlanarSpec{CoefficientFamily(FamilyKind::polynomial, FamilyRole::drift, {0.3, 0.2, -0.1}),
                    CoefficientFamily(FamilyKind::affine, FamilyRole::drift, {-0.2, 0.1}),
                    CoefficientFamily(FamilyKind::polynomial, FamilyRole::diffusion, {1.0, 0.0, 0.1}),
                    cdiff(0.8), false};
}

TransformParams params_with_c(double c) {
  TransformParams p;
  p.c = c;
  return p;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io_error;
}

}  // namespace

TEST_CASE("bump examples") {
  CHECK(bump_phi(0.0, 0) == 1.0);
  CHECK(bump_phi(1.0, 0) == 0.0);
  CHECK(bump_phi(1.0, 1) == 0.0);
  CHECK(bump_phi(-1.0, 2) == 0.0);
  CHECK(bump_phi(0.5, 0) == doctest::Approx(0.31640625).epsilon(1e-15));
  CHECK(bump_phi(1.5, 0) == 0.0);
  CHECK(kind_of([] { bump_phi(0.1, 3); }) == ErrorKind::parameter_error);
}

TEST_CASE("bump derivatives match differences") {
  const double h = 1e-6;
  for (double u = -0.97; u < 1.0; u += 0.0731) {
    CHECK(bump_phi(u, 1) == doctest::Approx((bump_phi(u + h, 0) - bump_phi(u - h, 0)) / (2 * h)).epsilon(1e-7));
    CHECK(bump_phi(u, 2) == doctest::Approx((bump_phi(u + h, 1) - bump_phi(u - h, 1)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("alpha closed forms") {
  CHECK(AlphaFunction(constants(2.0, 1.0))(0.3) == doctest::Approx(1.0 / (2.0 * kSqrt2)));
  const AlphaFunction flat(constants(0.4, 0.4));
  CHECK(flat.identically_zero());
  CHECK(flat(1.7) == 0.0);

  // Logistic I: shared root at u = 0 is removable.
  const double r1 = 0.8, r2 = 0.7, s0 = 0.05, xm = 10.0;
  const AlphaFunction a(logistic1_pair(r1, r2, s0, xm));
  CHECK(a.has_reduced_form());
  const double limit0 = (r1 - r2) / (kSqrt2 * 2.0 * s0 * s0);
  CHECK(a(0.0) == doctest::Approx(limit0));
  // Raw quotient just off the root agrees.
  const double u = 1e-6;
  const double raw = (r1 * u * u * (1 - u / xm) - r2 * u * u * (1 - u / xm)) /
                     (kSqrt2 * 2.0 * (s0 * u) * (s0 * u));
  CHECK(a(u) == doctest::Approx(raw).epsilon(1e-12));
  CHECK(a(12.0) == 0.0);
}

TEST_CASE("alpha removable singularity without a closed form") {
  // b1 = u^2, b2 = 0, sigma = u: alpha = 1/(2 sqrt 2) away from 0, and in the limit.
  const PlanarSpec spec{CoefficientFamily(FamilyKind::polynomial, FamilyRole::drift, {0.0, 0.0, 1.0}),
                        cdrift(0.0),
                        CoefficientFamily(FamilyKind::affine, FamilyRole::diffusion, {0.0, 1.0}),
                        CoefficientFamily(FamilyKind::affine, FamilyRole::diffusion, {0.0, 1.0}),
                        false};
  const AlphaFunction a(spec);
  CHECK_FALSE(a.has_reduced_form());
  CHECK(a(0.0) == doctest::Approx(1.0 / (2.0 * kSqrt2)).epsilon(1e-8));
  CHECK(a(0.5) == doctest::Approx(1.0 / (2.0 * kSqrt2)).epsilon(1e-14));
  CHECK(std::abs(a.eval(0.0, 1)) < 1e-4);
}

TEST_CASE("alpha unbounded at a diffusion root") {
  const PlanarSpec spec{cdrift(1.0), cdrift(0.0),
                        CoefficientFamily(FamilyKind::affine, FamilyRole::diffusion, {0.0, 1.0}),
                        CoefficientFamily(FamilyKind::affine, FamilyRole::diffusion, {0.0, 1.0}),
                        false};
  const AlphaFunction a(spec);
  CHECK(kind_of([&] { a(0.0); }) == ErrorKind::alpha_unbounded);
  CHECK(kind_of([&] { make_transform_params(spec, {-1.0, 1.0}, 1001, std::nullopt); }) ==
        ErrorKind::alpha_unbounded);
}

TEST_CASE("alpha jet matches differences") {
  const AlphaFunction a(wavy());
  const double h = 1e-5;
  for (double u = -3.0; u <= 3.0; u += 0.37) {
    CHECK(a.eval(u, 1) == doctest::Approx((a(u + h) - a(u - h)) / (2 * h)).epsilon(1e-7));
    CHECK(a.eval(u, 2) == doctest::Approx((a.eval(u + h, 1) - a.eval(u - h, 1)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("alpha_sup estimate and c selection") {
  const AlphaFunction constant_alpha(constants(2.0, 1.0));
  CHECK(estimate_alpha_sup(constant_alpha, {-5.0, 5.0}, 1001) ==
        doctest::Approx(1.1 / (2.0 * kSqrt2)));

  // Dense independent scan of the logistic I ratio on [0, 10].
  const double r1 = 0.8, r2 = 0.7, s0 = 0.05, xm = 10.0;
  double dense = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double u = 10.0 * i / 200000.0;
    dense = std::max(dense, std::abs((r1 - r2) * std::max(1 - u / xm, 0.0) / (2 * kSqrt2 * s0 * s0)));
  }
  const double est = estimate_alpha_sup(AlphaFunction(logistic1_pair(r1, r2, s0, xm)), {0.0, 10.0}, 1001);
  CHECK(est == doctest::Approx(1.1 * dense).epsilon(1e-9));
  CHECK(est == doctest::Approx(15.556).epsilon(1e-4));

  CHECK(kind_of([&] { estimate_alpha_sup(constant_alpha, {0.0, 1.0}, 100); }) ==
        ErrorKind::parameter_error);

  CHECK(select_c(0.5, std::nullopt) == doctest::Approx(0.0625));
  CHECK(select_c(0.0, std::nullopt) == 1.0);
  CHECK(select_c(0.0, 0.25) == 0.25);
  CHECK(select_c(15.556, 0.001) == 0.001);

  const auto p = make_transform_params(constants(0.3, 0.3), {-5.0, 5.0}, 1001, 0.2);
  CHECK(p.alpha_sup == 0.0);
  CHECK(p.c == 0.2);

  const auto q = make_transform_params(constants(1.0, 0.0), {-5.0, 5.0}, 1001, std::nullopt);
  CHECK(16.0 * q.alpha_sup * q.c < 1.0);
  TransformParams bad = q;
  bad.c = 1.01 / (16.0 * q.alpha_sup);
  CHECK_THROWS_AS(bad.validate(), ConstraintError);
}

TEST_CASE("rotations") {
  const Vec2 y = rotate_S({3.0, 1.0});
  CHECK(y[0] == doctest::Approx(kSqrt2));
  CHECK(y[1] == doctest::Approx(2.0));
  const Vec2 d = rotate_S({0.7, 0.7});
  CHECK(d[0] == 0.0);
  CHECK(d[1] == doctest::Approx(0.7));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 100; ++i) {
    const Vec2 x{nd(rng), nd(rng)};
    const Vec2 back = rotate_tau(rotate_S(x));
    CHECK(back[0] == doctest::Approx(x[0]).epsilon(1e-14));
    CHECK(back[1] == doctest::Approx(x[1]).epsilon(1e-14));
  }
}

TEST_CASE("g and G examples") {
  const double a = 1.0 / (2.0 * kSqrt2);
  const DistortionMap m(constants(2.0, 1.0), params_with_c(0.05));
  // Identity on the diagonal and outside the band.
  CHECK(m.g({0.0, 0.4})[0] == 0.0);
  CHECK(m.g_jet({0.0, 0.4}).d_y1[0] == 1.0);
  CHECK(m.g({0.05, 0.4})[0] == 0.05);
  CHECK(m.g({-0.2, 0.4})[0] == -0.2);
  const double c = 0.05;
  CHECK(m.g({c / 2, 0.0})[0] == doctest::Approx(c / 2 + (c * c / 2) * 0.31640625 * a).epsilon(1e-14));
  CHECK(m.G({2.0, 2.0}) == Vec2{2.0, 2.0});
  CHECK(m.G({0.0, 1.0}) == Vec2{0.0, 1.0});
}

TEST_CASE("G equals tau o g o S and is swap equivariant") {
  const DistortionMap m(wavy(), params_with_c(0.2));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 direct = m.G(x);
    const Vec2 composed = rotate_tau(m.g(rotate_S(x)));
    CHECK(direct[0] == doctest::Approx(composed[0]).epsilon(1e-13));
    CHECK(direct[1] == doctest::Approx(composed[1]).epsilon(1e-13));
    // The displacement is along (1, -1): the sum is preserved.
    CHECK(direct[0] + direct[1] == doctest::Approx(x[0] + x[1]).epsilon(1e-14));
    // Swapping the coordinates flips the displacement.
    const Vec2 swapped = m.G({x[1], x[0]});
    CHECK(swapped[0] == doctest::Approx(direct[1]).epsilon(1e-13));
    CHECK(swapped[1] == doctest::Approx(direct[0]).epsilon(1e-13));
  }
}

TEST_CASE("jacobian and hessians of G match differences of G") {
  const DistortionMap m(wavy(), params_with_c(0.2));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 300) {
    const Vec2 x{u(rng), u(rng)};
    if (std::abs(x[0] - x[1]) < 1e-3) continue;
    ++checked;
    const Mat2 J = m.jacobian(x);
    const auto H = m.hessians(x);
    for (int i = 0; i < 2; ++i) {
      Vec2 xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Vec2 gp = m.G(xp), gm = m.G(xm);
      const Mat2 Jp = m.jacobian(xp), Jm = m.jacobian(xm);
      for (int k = 0; k < 2; ++k) {
        CHECK(J[k][i] == doctest::Approx((gp[k] - gm[k]) / (2 * h)).epsilon(1e-7));
        for (int j = 0; j < 2; ++j) {
          const double fd = (Jp[k][j] - Jm[k][j]) / (2 * h);
          CHECK(std::abs(H[k][j][i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
      }
    }
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    CHECK(det == doctest::Approx(m.g_jet(rotate_S(x)).d_y1[0]).epsilon(1e-12));
  }
}

TEST_CASE("G is the identity outside the band") {
  const DistortionMap m(wavy(), params_with_c(0.1));
  const Vec2 x{1.0, 0.2};
  CHECK(m.G(x) == x);
  const Mat2 J = m.jacobian(x);
  CHECK(J[0][0] == 1.0);
  CHECK(J[0][1] == 0.0);
  CHECK(J[1][0] == 0.0);
  CHECK(J[1][1] == 1.0);
  CHECK(m.inverse(x) == x);
}

TEST_CASE("inverse examples and round trips") {
  const auto spec = constants(1.0, 0.0);
  const auto p = make_transform_params(spec, {-5.0, 5.0}, 1001, std::nullopt);
  const DistortionMap m(spec, p);
  const Vec2 x{0.01, -0.01};
  const Vec2 back = m.inverse(m.G(x));
  CHECK(std::abs(back[0] - x[0]) < 1e-10);
  CHECK(std::abs(back[1] - x[1]) < 1e-10);

  const DistortionMap flat(constants(0.5, 0.5), params_with_c(0.3));
  CHECK(flat.inverse({0.1, 0.05}) == Vec2{0.1, 0.05});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> band(-p.c, p.c);
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 z = i % 2 ? rotate_tau({band(rng), box(rng)}) : Vec2{box(rng), box(rng)};
    const Vec2 xr = m.inverse(z);
    const Vec2 zr = m.G(xr);
    REQUIRE(std::hypot(zr[0] - z[0], zr[1] - z[1]) <= 1e-10 * (1.0 + std::hypot(z[0], z[1])));
  }
}

TEST_CASE("inverse reports a violated c bound") {
  // 16 c |alpha| = 16 * 1 * 10/(2 sqrt 2) >> 1.
  const DistortionMap m(constants(0.0, 10.0), params_with_c(1.0));
  CHECK(kind_of([&] { m.inverse(rotate_tau({0.3, 0.0})); }) == ErrorKind::inversion_failure);
}

TEST_CASE("determinant stays positive under the c bound") {
  for (const auto& spec : {constants(1.0, 0.0), constants(-3.0, 2.0), wavy(),
                           logistic1_pair(0.8, 0.7, 0.05, 10.0)}) {
    const auto p = make_transform_params(spec, {-3.0, 3.0}, 1001, std::nullopt);
    const DistortionMap m(spec, p);
    for (int i = 0; i <= 200; ++i) {
      for (int k = 0; k <= 40; ++k) {
        const double y1 = -p.c + 2.0 * p.c * i / 200.0;
        const double y2 = -3.0 + 6.0 * k / 40.0;
        REQUIRE(m.g_jet({y1, y2}).d_y1[0] > 0.0);
      }
    }
  }
}

TEST_CASE("z coefficients outside the band equal the X coefficients") {
  const auto spec = wavy();
  const DistortionMap m(spec, params_with_c(0.1));
  const Vec2 z{1.2, -0.4};
  const auto zc = m.z_coefficients(z);
  const Vec2 b = spec.drift(z);
  const Vec2 s = spec.diffusion(z);
  CHECK(zc.x == z);
  CHECK(zc.drift == b);
  CHECK(zc.diffusion[0][0] == s[0]);
  CHECK(zc.diffusion[0][1] == 0.0);
  CHECK(zc.diffusion[1][0] == 0.0);
  CHECK(zc.diffusion[1][1] == s[1]);

  const DistortionMap flat(constants(0.2, 0.2), params_with_c(0.5));
  const auto fc = flat.z_coefficients({0.1, 0.1});
  CHECK(fc.drift == Vec2{0.2, 0.2});
}

TEST_CASE("z drift agrees with the Ito formula from differences of G") {
  const auto spec = wavy();
  const DistortionMap m(spec, params_with_c(0.2));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double h = 1e-4;
  int checked = 0;
  while (checked < 200) {
    const Vec2 x{u(rng), u(rng)};
    if (std::abs(x[0] - x[1]) < 1e-2) continue;
    ++checked;
    const Vec2 b = spec.drift(x);
    const Vec2 s = spec.diffusion(x);
    const auto zc = m.z_coefficients_at(x);
    for (int k = 0; k < 2; ++k) {
      double expect = 0.0;
      for (int i = 0; i < 2; ++i) {
        Vec2 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double d1 = (m.G(xp)[k] - m.G(xm)[k]) / (2 * h);
        const double d2 = (m.G(xp)[k] - 2.0 * m.G(x)[k] + m.G(xm)[k]) / (h * h);
        expect += d1 * b[i] + 0.5 * s[i] * s[i] * d2;
      }
      CHECK(zc.drift[k] == doctest::Approx(expect).epsilon(1e-5));
    }
  }
}

TEST_CASE("z drift is continuous across the diagonal") {
  const auto spec = constants(1.0, 0.0);
  const auto p = make_transform_params(spec, {-5.0, 5.0}, 1001, std::nullopt);
  const DistortionMap m(spec, p);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double y2 = u(rng);
    const auto above = m.z_coefficients(rotate_tau(m.g({1e-8, y2})));
    const auto below = m.z_coefficients(rotate_tau(m.g({-1e-8, y2})));
    const double nu_above = rotate_S(above.drift)[0];
    const double nu_below = rotate_S(below.drift)[0];
    CHECK(std::abs(nu_above) <= 1e-6);
    CHECK(std::abs(nu_below) <= 1e-6);
  }
}
