#pragma once

#include <cmath>
#include <optional>
#include <utility>

namespace rank_sde {

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

// Newton iteration kept inside a shrinking bracket, falling back to bisection
// whenever the Newton step leaves the bracket or stalls. fdf(t) returns the
// pair (f(t), f'(t)); f must change sign over [lo, hi]. Returns nullopt when
// the bracket is invalid or max_iter is exhausted.
template <class Fdf>
std::optional<RootResult> safeguarded_newton(Fdf&& fdf, double lo, double hi, double ftol,
                                             int max_iter = 100) {
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  if (std::abs(flo) <= ftol) return RootResult{lo, 0};
  if (std::abs(fhi) <= ftol) return RootResult{hi, 0};
  if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
  if (flo > 0.0) std::swap(lo, hi);  // orient so that f(lo) < 0 < f(hi)

  double t = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [f, df] = fdf(t);
  for (int it = 1; it <= max_iter; ++it) {
    if (std::abs(f) <= ftol) return RootResult{t, it};
    const bool newton_leaves = ((t - hi) * df - f) * ((t - lo) * df - f) > 0.0;
    const bool newton_slow = std::abs(2.0 * f) > std::abs(dx_old * df);
    dx_old = dx;
    if (newton_leaves || newton_slow || df == 0.0) {
      dx = 0.5 * (hi - lo);
      t = lo + dx;
    } else {
      dx = f / df;
      t -= dx;
    }
    if (lo == t || hi == t || dx == 0.0) {
      // Bracket collapsed to adjacent doubles.
      return RootResult{t, it};
    }
    std::tie(f, df) = fdf(t);
    if (f < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
  }
  return std::nullopt;
}

}  // namespace rank_sde
