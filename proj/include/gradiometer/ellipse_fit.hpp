#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gradiometer {

using Point2 = Eigen::Vector2d;

// General conic a X^2 + b XY + c Y^2 + d X + e Y + f = 0, coefficients
// normalized to unit Euclidean length and signed so the conic is positive at
// the ellipse center (a + c < 0 for an ellipse). Under that convention the
// relative phase of a parametric fringe pair (cos t, cos(t + dphi)) obeys
// cos dphi = b / (2 sqrt(ac)) directly.
struct Conic {
  std::array<double, 6> coeff{};  // a, b, c, d, e, f
  bool is_ellipse = false;        // b^2 - 4ac < 0
  double condition = 0.0;         // |b| / (2 sqrt(ac)); -> 1 when collapsing

  double a() const { return coeff[0]; }
  double b() const { return coeff[1]; }
  double c() const { return coeff[2]; }
  double d() const { return coeff[3]; }
  double e() const { return coeff[4]; }
  double f() const { return coeff[5]; }
};

struct FitOptions {
  // Reject fits with |b/(2 sqrt(ac))| > 1 - degeneracy_margin (collapsed
  // ellipse near dphi = 0 or pi).
  double degeneracy_margin = 1e-6;
  // When > 0, reject fits whose data spread along the fitted minor axis is
  // below 3x this per-point noise level (the regime where the fit would
  // return a silently biased phase).
  double noise_floor = 0.0;
  // Optional Sampson-weighted iterative refinement of the direct fit; each
  // iteration re-solves the ellipse-constrained eigenproblem, so the result
  // stays an ellipse.
  bool refine = false;
  int refine_iterations = 8;
};

// Direct ellipse-specific least squares with constraint 4ac - b^2 = 1,
// solved on centered/RMS-scaled points via the stabilized block
// decomposition of the scatter matrix. Throws TooFewPoints (< 6) and
// DegenerateConic (collinear input, no ellipse solution, or a collapsed
// ellipse per FitOptions).
Conic fit_conic(std::span<const Point2> points, const FitOptions& opts = {});

struct PhaseEstimate {
  double abs_dphi = 0.0;  // rad, in [0, pi]
  double sigma = 0.0;     // rad; filled by phase_uncertainty
  int n_points = 0;
  std::string method = "direct";
  bool clamped = false;   // |b/(2 sqrt(ac))| exceeded 1 and was clamped
};

// |dphi| = arccos(clamp(b / (2 sqrt(ac)))). Throws NotAnEllipse.
PhaseEstimate relative_phase(const Conic& conic);

struct BootstrapResult {
  double sigma = 0.0;    // sample std of |dphi| over resamples
  int n_discarded = 0;   // resamples that hit DegenerateConic
  int n_resamples = 0;
};

// Bootstrap (resample points with replacement, refit, recompute |dphi|).
BootstrapResult phase_uncertainty(std::span<const Point2> points,
                                  int n_resamples, std::uint64_t seed,
                                  const FitOptions& opts = {});

// Half-extents of the fitted ellipse along the coordinate axes; for an
// interference fringe pair these estimate the recovered fringe amplitudes.
std::array<double, 2> ellipse_extents(const Conic& conic);

}  // namespace gradiometer
