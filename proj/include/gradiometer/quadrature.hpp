#pragma once

#include <cmath>
#include <cstddef>

namespace gradiometer {

// Adaptive Gauss-Kronrod 7/15 quadrature with an *absolute* error target.
// The per-interval error estimate is the raw |GK15 - G7| difference, which
// for smooth integrands reaches the rounding floor at depth 0; intervals
// split until the estimate meets their share of the budget.
namespace gk15 {

// QUADPACK qk15 abscissae (positive half) and weights.
inline constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
// 7-point Gauss weights attach to nodes 1, 3, 5, 7.
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct Panel {
  double kronrod;
  double error;
};

template <typename F>
Panel evaluate(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double kronrod = 0.0;
  double gauss = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double offset = half * kNodes[k];
    const double fsum =
        (k == 7) ? f(mid) : f(mid - offset) + f(mid + offset);
    kronrod += kKronrodWeights[k] * fsum;
    if (k % 2 == 1) gauss += kGaussWeights[k / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  return {kronrod, std::abs(kronrod - gauss)};
}

template <typename F>
double integrate_recursive(const F& f, double a, double b, double abs_tol,
                           int depth) {
  const Panel panel = evaluate(f, a, b);
  if (panel.error <= abs_tol || depth >= 24) return panel.kronrod;
  const double mid = 0.5 * (a + b);
  return integrate_recursive(f, a, mid, 0.5 * abs_tol, depth + 1) +
         integrate_recursive(f, mid, b, 0.5 * abs_tol, depth + 1);
}

}  // namespace gk15

template <typename F>
double integrate_abs_tol(const F& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  return gk15::integrate_recursive(f, a, b, abs_tol, 0);
}

}  // namespace gradiometer
