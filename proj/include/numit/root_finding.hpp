#pragma once

#include <cmath>
#include <concepts>

namespace numit {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Bisection for a monotone residual with residual(lo) and residual(hi) of
/// opposite sign. Stops as soon as |residual| < tol, after max_iter
/// iterations, or when the midpoint no longer separates the endpoints.
/// `midpoint` picks the split point (arithmetic or geometric).
template <class F, class Mid>
  requires std::invocable<F, double> && std::invocable<Mid, double, double>
RootResult bisect(F&& residual, double lo, double hi, double tol, int max_iter, Mid&& midpoint) {
  double r_lo = residual(lo);
  RootResult out;
  if (std::abs(r_lo) < tol) return {lo, r_lo, 0, true};
  double r_hi = residual(hi);
  if (std::abs(r_hi) < tol) return {hi, r_hi, 0, true};
  if ((r_lo < 0.0) == (r_hi < 0.0)) return {lo, r_lo, 0, false};

  out = std::abs(r_lo) < std::abs(r_hi) ? RootResult{lo, r_lo, 0, false}
                                        : RootResult{hi, r_hi, 0, false};
  for (int it = 1; it <= max_iter; ++it) {
    const double mid = midpoint(lo, hi);
    if (!(mid > lo && mid < hi)) break;
    const double r = residual(mid);
    out.iterations = it;
    if (std::abs(r) < std::abs(out.residual)) {
      out.x = mid;
      out.residual = r;
    }
    if (std::abs(r) < tol) {
      out.converged = true;
      return out;
    }
    if ((r < 0.0) == (r_lo < 0.0)) {
      lo = mid;
      r_lo = r;
    } else {
      hi = mid;
    }
  }
  return out;
}

inline double arithmetic_mid(double a, double b) noexcept { return a + 0.5 * (b - a); }
inline double geometric_mid(double a, double b) noexcept { return std::sqrt(a) * std::sqrt(b); }

}  // namespace numit
