#include "rank_sde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rank_sde/errors.hpp"

namespace rank_sde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t expected_param_count(FamilyKind kind, FamilyRole role) {
  switch (kind) {
    case FamilyKind::constant:
      return 1;
    case FamilyKind::affine:
      return 2;
    case FamilyKind::logistic1:
      return role == FamilyRole::drift ? 2 : 1;
    case FamilyKind::logistic2:
      return 2;
    case FamilyKind::polynomial:
      return 0;  // any nonzero length
  }
  return 0;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// Horner evaluation of a polynomial and its first two derivatives.
Jet horner(std::span<const double> a, double u) {
  Jet j;
  for (std::size_t k = a.size(); k-- > 0;) {
    j.d2 = j.d2 * u + 2.0 * j.d1;
    j.d1 = j.d1 * u + j.value;
    j.value = j.value * u + a[k];
  }
  return j;
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::constant:
      return "constant";
    case FamilyKind::affine:
      return "affine";
    case FamilyKind::logistic1:
      return "logistic1";
    case FamilyKind::logistic2:
      return "logistic2";
    case FamilyKind::polynomial:
      return "polynomial";
  }
  return "unknown";
}

std::string_view to_string(FamilyRole role) {
  return role == FamilyRole::drift ? "drift" : "diffusion";
}

std::string_view to_string(ModelVariant variant) {
  return variant == ModelVariant::rank_diffusion ? "rank_diffusion" : "own_diffusion";
}

FamilyKind parse_family_kind(std::string_view name) {
  for (auto kind : {FamilyKind::constant, FamilyKind::affine, FamilyKind::logistic1,
                    FamilyKind::logistic2, FamilyKind::polynomial}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::parameter_error, "unknown coefficient family '" + std::string(name) + "'");
}

CoefficientFamily::CoefficientFamily(FamilyKind kind, FamilyRole role, std::vector<double> params)
    : kind_(kind), role_(role), params_(std::move(params)) {
  const std::string name(to_string(kind_));
  const std::size_t expected = expected_param_count(kind_, role_);
  if (kind_ == FamilyKind::polynomial) {
    if (params_.empty()) {
      throw Error(ErrorKind::parameter_error, "polynomial family needs at least one coefficient");
    }
  } else if (params_.size() != expected) {
    throw Error(ErrorKind::parameter_error,
                name + " " + std::string(to_string(role_)) + " family expects " +
                    std::to_string(expected) + " parameters, got " +
                    std::to_string(params_.size()));
  }
  if (!all_finite(params_)) {
    throw Error(ErrorKind::parameter_error, name + " family has non-finite parameters");
  }
  if ((kind_ == FamilyKind::logistic1 || kind_ == FamilyKind::logistic2) &&
      params_.size() == 2 && !(params_[1] > 0.0)) {
    throw Error(ErrorKind::parameter_error, name + " family needs x_max > 0");
  }
  if (role_ == FamilyRole::diffusion) {
    const bool scale_negative =
        (kind_ == FamilyKind::constant || kind_ == FamilyKind::logistic1 ||
         kind_ == FamilyKind::logistic2) &&
        params_[0] < 0.0;
    if (scale_negative) {
      throw Error(ErrorKind::invariant_violation,
                  name + " diffusion family must be nonnegative on its domain");
    }
  }
}

CoefficientFamily CoefficientFamily::constant(double v, FamilyRole role) {
  return CoefficientFamily(FamilyKind::constant, role, {v});
}

double CoefficientFamily::operator()(double u) const {
  const auto& p = params_;
  switch (kind_) {
    case FamilyKind::constant:
      return p[0];
    case FamilyKind::affine:
      return p[0] + p[1] * u;
    case FamilyKind::polynomial:
      return horner(p, u).value;
    case FamilyKind::logistic1:
      if (role_ == FamilyRole::diffusion) return p[0] * u;
      return p[0] * u * u * std::max(1.0 - u / p[1], 0.0);
    case FamilyKind::logistic2: {
      const double m = 1.0 - u / p[1];
      if (role_ == FamilyRole::diffusion) return p[0] * u * m;
      return p[0] * u * u * m * m;
    }
  }
  return 0.0;
}

Jet CoefficientFamily::jet(double u) const {
  const auto& p = params_;
  switch (kind_) {
    case FamilyKind::constant:
      return {p[0], 0.0, 0.0};
    case FamilyKind::affine:
      return {p[0] + p[1] * u, p[1], 0.0};
    case FamilyKind::polynomial:
      return horner(p, u);
    case FamilyKind::logistic1: {
      if (role_ == FamilyRole::diffusion) return {p[0] * u, p[0], 0.0};
      const double r = p[0];
      const double xm = p[1];
      if (1.0 - u / xm <= 0.0) return {0.0, 0.0, 0.0};
      return {r * u * u * (1.0 - u / xm), r * (2.0 * u - 3.0 * u * u / xm),
              r * (2.0 - 6.0 * u / xm)};
    }
    case FamilyKind::logistic2: {
      const double xm = p[1];
      const double m = 1.0 - u / xm;
      if (role_ == FamilyRole::diffusion) {
        const double s = p[0];
        return {s * u * m, s * (1.0 - 2.0 * u / xm), -2.0 * s / xm};
      }
      const double r = p[0];
      return {r * u * u * m * m, r * (2.0 * u * m * m - 2.0 * u * u * m / xm),
              r * (2.0 * m * m - 8.0 * u * m / xm + 2.0 * u * u / (xm * xm))};
    }
  }
  return {};
}

double CoefficientFamily::domain_lower() const noexcept {
  if (role_ == FamilyRole::diffusion &&
      (kind_ == FamilyKind::logistic1 || kind_ == FamilyKind::logistic2)) {
    return 0.0;
  }
  return -kInf;
}

double CoefficientFamily::domain_upper() const noexcept {
  if (role_ == FamilyRole::diffusion && kind_ == FamilyKind::logistic2) return params_[1];
  return kInf;
}

void SystemSpec::validate() const {
  if (n_particles == 0) throw ConstraintError("system.n_particles", "must be positive");
  if (drifts.size() != n_particles) {
    throw ConstraintError("system.drifts", "expected " + std::to_string(n_particles) +
                                               " entries, got " + std::to_string(drifts.size()));
  }
  if (diffusions.size() != n_particles) {
    throw ConstraintError("system.diffusions",
                          "expected " + std::to_string(n_particles) + " entries, got " +
                              std::to_string(diffusions.size()));
  }
  for (const auto& f : drifts) {
    if (f.role() != FamilyRole::drift) {
      throw ConstraintError("system.drifts", "entry does not have the drift role");
    }
  }
  for (const auto& f : diffusions) {
    if (f.role() != FamilyRole::diffusion) {
      throw ConstraintError("system.diffusions", "entry does not have the diffusion role");
    }
  }
  if (x0.size() != n_particles) {
    throw ConstraintError("system.x0", "expected " + std::to_string(n_particles) + " entries");
  }
  if (!all_finite(x0)) throw ConstraintError("system.x0", "entries must be finite");
  for (std::size_t i = 1; i < x0.size(); ++i) {
    if (!(x0[i - 1] < x0[i])) throw ConstraintError("system.x0", "must be strictly increasing");
  }
}

RankAssignment rank_partition(std::span<const double> x) {
  if (!all_finite(x)) throw Error(ErrorKind::invalid_state, "rank_partition: non-finite state");
  RankAssignment r;
  r.index_of.resize(x.size());
  std::iota(r.index_of.begin(), r.index_of.end(), std::size_t{0});
  std::stable_sort(r.index_of.begin(), r.index_of.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  r.rank_of.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r.rank_of[r.index_of[k]] = k;
  return r;
}

namespace {

void check_dimension(const SystemSpec& spec, std::span<const double> x, std::span<double> out) {
  if (x.size() != spec.n_particles || out.size() != spec.n_particles) {
    throw Error(ErrorKind::dimension_mismatch,
                "state has " + std::to_string(x.size()) + " entries, system has " +
                    std::to_string(spec.n_particles));
  }
}

// Rank of every particle, written into ranks; scratch keeps the hot path
// allocation free once warmed up.
void ranks_into(std::span<const double> x, std::vector<std::size_t>& ranks) {
  thread_local std::vector<std::size_t> order;
  order.resize(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  ranks.resize(x.size());
  for (std::size_t k = 0; k < order.size(); ++k) ranks[order[k]] = k;
}

double diffusion_at(const CoefficientFamily& f, double u, bool wrap) {
  const double v = f(wrap ? std::max(u, 0.0) : u);
  if (v < 0.0 || std::isnan(v)) {
    throw Error(ErrorKind::invariant_violation,
                "diffusion family " + std::string(to_string(f.kind())) +
                    " is negative at " + std::to_string(u));
  }
  return v;
}

}  // namespace

void drift_vector(const SystemSpec& spec, std::span<const double> x, std::span<double> out) {
  check_dimension(spec, x, out);
  if (!all_finite(x)) throw Error(ErrorKind::invalid_state, "drift_vector: non-finite state");
  if (spec.n_particles == 2) {
    // Planar convention: particle 1 takes b_1 when x1 <= x2, particle 2 takes
    // b_2 when x2 >= x1, so both indicators fire on the diagonal.
    const auto& b1 = spec.drifts[0];
    const auto& b2 = spec.drifts[1];
    out[0] = x[0] <= x[1] ? b1(x[0]) : b2(x[0]);
    out[1] = x[1] < x[0] ? b1(x[1]) : b2(x[1]);
    return;
  }
  thread_local std::vector<std::size_t> ranks;
  ranks_into(x, ranks);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec.drifts[ranks[i]](x[i]);
}

std::vector<double> drift_vector(const SystemSpec& spec, std::span<const double> x) {
  std::vector<double> out(spec.n_particles);
  drift_vector(spec, x, out);
  return out;
}

void diffusion_coeffs(const SystemSpec& spec, std::span<const double> x, std::span<double> out) {
  check_dimension(spec, x, out);
  if (!all_finite(x)) throw Error(ErrorKind::invalid_state, "diffusion_coeffs: non-finite state");
  if (spec.variant == ModelVariant::own_diffusion) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = diffusion_at(spec.diffusions[i], x[i], spec.positivity_wrap);
    }
    return;
  }
  thread_local std::vector<std::size_t> ranks;
  if (spec.n_particles == 2) {
    // Same diagonal convention as the drift.
    ranks.assign({x[0] <= x[1] ? 0u : 1u, x[1] < x[0] ? 0u : 1u});
  } else {
    ranks_into(x, ranks);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = diffusion_at(spec.diffusions[ranks[i]], x[i], spec.positivity_wrap);
  }
}

std::vector<double> diffusion_coeffs(const SystemSpec& spec, std::span<const double> x) {
  std::vector<double> out(spec.n_particles);
  diffusion_coeffs(spec, x, out);
  return out;
}

}  // namespace rank_sde
