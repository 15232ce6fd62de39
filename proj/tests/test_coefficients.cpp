#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "rank_sde/coefficients.hpp"
#include "rank_sde/errors.hpp"

using namespace rank_sde;

namespace {

CoefficientFamily drift_fam(FamilyKind k, std::vector<double> p) {
  return CoefficientFamily(k, FamilyRole::drift, std::move(p));
}
CoefficientFamily diff_fam(FamilyKind k, std::vector<double> p) {
  return CoefficientFamily(k, FamilyRole::diffusion, std::move(p));
}

SystemSpec constants_system(std::vector<double> b, std::vector<double> s, ModelVariant v) {
  SystemSpec spec;
  spec.n_particles = b.size();
  spec.variant = v;
  for (double x : b) spec.drifts.push_back(CoefficientFamily::constant(x, FamilyRole::drift));
  for (double x : s) spec.diffusions.push_back(CoefficientFamily::constant(x, FamilyRole::diffusion));
  spec.x0.resize(b.size());
  std::iota(spec.x0.begin(), spec.x0.end(), 0.0);
  return spec;
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

bool is_permutation_of_range(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> s = v;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != i) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("family values") {
  CHECK(drift_fam(FamilyKind::constant, {2.5})(7.0) == 2.5);
  CHECK(drift_fam(FamilyKind::affine, {1.0, -2.0})(3.0) == -5.0);
  CHECK(drift_fam(FamilyKind::polynomial, {1.0, 0.0, 3.0})(2.0) == 13.0);
  // r u^2 (1 - u/x_max)
  CHECK(drift_fam(FamilyKind::logistic1, {0.8, 10.0})(5.0) == doctest::Approx(0.8 * 25 * 0.5));
  CHECK(drift_fam(FamilyKind::logistic1, {0.8, 10.0})(12.0) == 0.0);
  CHECK(drift_fam(FamilyKind::logistic2, {0.8, 10.0})(5.0) == doctest::Approx(0.8 * 25 * 0.25));
  CHECK(diff_fam(FamilyKind::logistic1, {0.05})(4.0) == doctest::Approx(0.2));
  CHECK(diff_fam(FamilyKind::logistic2, {0.125, 10.0})(5.0) == doctest::Approx(0.3125));
}

TEST_CASE("family jets match central differences") {
  const std::vector<CoefficientFamily> fams = {
      drift_fam(FamilyKind::affine, {0.3, -1.2}),
      drift_fam(FamilyKind::polynomial, {0.5, -1.0, 0.25, 0.125}),
      drift_fam(FamilyKind::logistic1, {0.75, 10.0}),
      drift_fam(FamilyKind::logistic2, {0.75, 10.0}),
      diff_fam(FamilyKind::logistic1, {0.05}),
      diff_fam(FamilyKind::logistic2, {0.125, 10.0}),
  };
  const double h = 1e-5;
  for (const auto& f : fams) {
    for (double u : {-1.5, 0.0, 0.7, 3.3, 9.1}) {
      const Jet j = f.jet(u);
      CHECK(j.value == doctest::Approx(f(u)).epsilon(1e-14));
      CHECK(j.d1 == doctest::Approx((f(u + h) - f(u - h)) / (2 * h)).epsilon(1e-7));
      const double d2 = (f.jet(u + h).d1 - f.jet(u - h).d1) / (2 * h);
      CHECK(j.d2 == doctest::Approx(d2).epsilon(1e-7));
    }
  }
}

TEST_CASE("family parameter validation") {
  CHECK(kind_of([] { drift_fam(FamilyKind::affine, {1.0}); }) == ErrorKind::parameter_error);
  CHECK(kind_of([] { drift_fam(FamilyKind::polynomial, {}); }) == ErrorKind::parameter_error);
  CHECK(kind_of([] { drift_fam(FamilyKind::logistic1, {0.8, 0.0}); }) ==
        ErrorKind::parameter_error);
  CHECK(kind_of([] { drift_fam(FamilyKind::constant, {NAN}); }) == ErrorKind::parameter_error);
  CHECK(kind_of([] { diff_fam(FamilyKind::constant, {-1.0}); }) ==
        ErrorKind::invariant_violation);
  CHECK(kind_of([] { parse_family_kind("cubic"); }) == ErrorKind::parameter_error);
  CHECK(parse_family_kind("logistic2") == FamilyKind::logistic2);
}

TEST_CASE("rank_partition examples") {
  const std::vector<double> x{3.0, 1.0, 2.0};
  const auto r = rank_partition(x);
  CHECK(r.rank_of == std::vector<std::size_t>{2, 0, 1});
  CHECK(r.index_of == std::vector<std::size_t>{1, 2, 0});

  const std::vector<double> tie{1.0, 1.0, 0.0};
  const auto t = rank_partition(tie);
  CHECK(t.rank_of == std::vector<std::size_t>{1, 2, 0});

  const std::vector<double> one{4.0};
  CHECK(rank_partition(one).rank_of == std::vector<std::size_t>{0});

  const std::vector<double> bad{1.0, NAN};
  CHECK(kind_of([&] { rank_partition(bad); }) == ErrorKind::invalid_state);
}

TEST_CASE("rank_partition returns a permutation") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coarse(0, 3);  // frequent ties
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 500; ++rep) {
      std::vector<double> x(n);
      for (auto& v : x) v = coarse(rng);
      const auto r = rank_partition(x);
      REQUIRE(is_permutation_of_range(r.rank_of));
      REQUIRE(is_permutation_of_range(r.index_of));
      for (std::size_t k = 0; k + 1 < n; ++k) REQUIRE(x[r.index_of[k]] <= x[r.index_of[k + 1]]);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(r.index_of[r.rank_of[i]] == i);
    }
  }
}

TEST_CASE("drift_vector examples") {
  SystemSpec two;
  two.n_particles = 2;
  two.drifts = {drift_fam(FamilyKind::affine, {0.0, 1.0}), drift_fam(FamilyKind::affine, {0.0, 2.0})};
  two.diffusions = {CoefficientFamily::constant(1.0, FamilyRole::diffusion),
                    CoefficientFamily::constant(1.0, FamilyRole::diffusion)};
  two.x0 = {0.0, 1.0};
  const std::vector<double> x{0.5, 0.2};
  const auto b = drift_vector(two, x);
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(0.2));

  // Both particles at the same point: first takes b1, second b2.
  const std::vector<double> diag{0.3, 0.3};
  const auto bd = drift_vector(two, diag);
  CHECK(bd[0] == doctest::Approx(0.3));
  CHECK(bd[1] == doctest::Approx(0.6));

  const auto three = constants_system({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0}, ModelVariant::own_diffusion);
  const std::vector<double> x3{3.0, 1.0, 2.0};
  CHECK(drift_vector(three, x3) == std::vector<double>{3.0, 1.0, 2.0});

  const std::vector<double> short_x{1.0, 2.0};
  CHECK(kind_of([&] { drift_vector(three, short_x); }) == ErrorKind::dimension_mismatch);
  const std::vector<double> inf_x{1.0, INFINITY, 2.0};
  CHECK(kind_of([&] { drift_vector(three, inf_x); }) == ErrorKind::invalid_state);
}

TEST_CASE("planar drift agrees with the indicator formula") {
  SystemSpec two;
  two.n_particles = 2;
  two.drifts = {drift_fam(FamilyKind::polynomial, {0.1, 0.7, -0.2}),
                drift_fam(FamilyKind::affine, {-0.4, 1.3})};
  two.diffusions = {CoefficientFamily::constant(1.0, FamilyRole::diffusion),
                    CoefficientFamily::constant(1.0, FamilyRole::diffusion)};
  two.x0 = {0.0, 1.0};
  const auto& f1 = two.drifts[0];
  const auto& f2 = two.drifts[1];
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::vector<double> x{u(rng), rep % 10 == 0 ? 0.0 : u(rng)};
    std::vector<double> y = x;
    if (rep % 10 == 0) y[1] = y[0];
    const double lo = y[0] <= y[1] ? 1.0 : 0.0;
    const double expect0 = lo * f1(y[0]) + (1.0 - lo) * f2(y[0]);
    const double lo2 = y[1] < y[0] ? 1.0 : 0.0;
    const double expect1 = lo2 * f1(y[1]) + (1.0 - lo2) * f2(y[1]);
    const auto b = drift_vector(two, y);
    REQUIRE(b[0] == expect0);
    REQUIRE(b[1] == expect1);
  }
}

TEST_CASE("drift_vector is permutation equivariant") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (std::size_t n : {3u, 5u, 8u}) {
    SystemSpec spec;
    spec.n_particles = n;
    for (std::size_t k = 0; k < n; ++k) {
      spec.drifts.push_back(drift_fam(FamilyKind::affine, {nd(rng), nd(rng)}));
      spec.diffusions.push_back(CoefficientFamily::constant(1.0, FamilyRole::diffusion));
    }
    spec.x0.resize(n);
    std::iota(spec.x0.begin(), spec.x0.end(), 0.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int rep = 0; rep < 300; ++rep) {
      std::vector<double> x(n);
      for (auto& v : x) v = nd(rng);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> px(n);
      for (std::size_t i = 0; i < n; ++i) px[i] = x[perm[i]];
      const auto b = drift_vector(spec, x);
      const auto pb = drift_vector(spec, px);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(pb[i] == b[perm[i]]);
    }
  }
}

TEST_CASE("diffusion_coeffs examples") {
  SystemSpec own;
  own.n_particles = 2;
  own.drifts = {drift_fam(FamilyKind::logistic1, {0.7, 10.0}), drift_fam(FamilyKind::logistic1, {0.8, 10.0})};
  own.diffusions = {diff_fam(FamilyKind::logistic1, {0.05}), diff_fam(FamilyKind::logistic1, {0.05})};
  own.x0 = {1.0, 2.0};
  const std::vector<double> x{2.0, 4.0};
  const auto s = diffusion_coeffs(own, x);
  CHECK(s[0] == doctest::Approx(0.1));
  CHECK(s[1] == doctest::Approx(0.2));

  // Without wrapping sigma0 * u is negative below zero.
  const std::vector<double> neg{-1.0, 4.0};
  CHECK(kind_of([&] { diffusion_coeffs(own, neg); }) == ErrorKind::invariant_violation);
  own.positivity_wrap = true;
  const auto w = diffusion_coeffs(own, neg);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == doctest::Approx(0.2));

  const auto ranked = constants_system({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, ModelVariant::rank_diffusion);
  const std::vector<double> x3{3.0, 1.0, 2.0};
  CHECK(diffusion_coeffs(ranked, x3) == std::vector<double>{3.0, 1.0, 2.0});
  const auto owned = constants_system({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, ModelVariant::own_diffusion);
  CHECK(diffusion_coeffs(owned, x3) == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("positivity wrap zeroes diffusion at nonpositive states") {
  SystemSpec spec;
  spec.n_particles = 3;
  spec.positivity_wrap = true;
  for (int k = 0; k < 3; ++k) {
    spec.drifts.push_back(drift_fam(FamilyKind::logistic2, {0.7, 10.0}));
    spec.diffusions.push_back(diff_fam(FamilyKind::logistic2, {0.125, 10.0}));
  }
  spec.x0 = {0.1, 0.2, 0.3};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::vector<double> x{u(rng), u(rng), rep % 7 == 0 ? 0.0 : u(rng)};
    const auto s = diffusion_coeffs(spec, x);
    for (std::size_t i = 0; i < 3; ++i) {
      if (x[i] <= 0.0) {
        REQUIRE(s[i] == 0.0);
      } else {
        REQUIRE(s[i] > 0.0);
      }
    }
  }
}

TEST_CASE("system validation names the field") {
  auto spec = constants_system({1.0, 0.0}, {1.0, 1.0}, ModelVariant::own_diffusion);
  spec.validate();
  spec.x0 = {1.0, 1.0};
  try {
    spec.validate();
    FAIL("expected ConstraintError");
  } catch (const ConstraintError& e) {
    CHECK(e.key() == "system.x0");
  }
  spec.x0 = {0.0, 1.0};
  spec.drifts.pop_back();
  CHECK_THROWS_AS(spec.validate(), ConstraintError);
}
