#include "gradiometer/ellipse_fit.hpp"

#include <algorithm>
#include <cmath>

#include "gradiometer/errors.hpp"
#include "gradiometer/rng.hpp"

namespace gradiometer {

namespace {

struct Normalization {
  double mx, my, s;
};

// Solve the constrained problem min ||D q||^2 s.t. 4ac - b^2 = 1 on
// pre-normalized coordinates, via the block decomposition of the scatter
// matrix: the quadratic part a1 is an eigenvector of C1^-1 (S1 + S2 T) and
// the linear part follows as a2 = T a1. Returns the unnormalized coefficient
// vector in the normalized frame.
Eigen::Matrix<double, 6, 1> solve_direct(const Eigen::MatrixXd& pts,
                                         const Eigen::VectorXd& weights) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = pts(i, 0), y = pts(i, 1);
    const double w = std::sqrt(weights(i));
    d1.row(i) << w * x * x, w * x * y, w * y * y;
    d2.row(i) << w * x, w * y, w;
  }
  const Eigen::Matrix3d s1 = d1.transpose() * d1;
  const Eigen::Matrix3d s2 = d1.transpose() * d2;
  const Eigen::Matrix3d s3 = d2.transpose() * d2;

  Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
  if (!lu.isInvertible()) {
    throw DegenerateConic("scatter matrix is singular (degenerate data)");
  }
  const Eigen::Matrix3d t = -lu.solve(s2.transpose());
  const Eigen::Matrix3d m = s1 + s2 * t;

  Eigen::Matrix3d c1_inv;
  c1_inv << 0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0;
  const Eigen::Matrix3d reduced = c1_inv * m;

  Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  Eigen::Vector3d a1 = Eigen::Vector3d::Zero();
  double best = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(eig.eigenvalues()(k).imag()) >
        1e-8 * std::abs(eig.eigenvalues()(k).real()) + 1e-300) {
      continue;
    }
    const Eigen::Vector3d v = eig.eigenvectors().col(k).real();
    const double constraint = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (constraint > best) {
      best = constraint;
      a1 = v;
    }
  }
  if (best <= 0.0) {
    throw DegenerateConic("no ellipse-constrained solution exists");
  }
  a1 /= std::sqrt(best);  // enforce 4ac - b^2 = 1
  Eigen::Matrix<double, 6, 1> q;
  q.head<3>() = a1;
  q.tail<3>() = t * a1;
  return q;
}

Eigen::Matrix<double, 6, 1> denormalize(const Eigen::Matrix<double, 6, 1>& q,
                                        const Normalization& nrm) {
  const double a = q(0), b = q(1), c = q(2), d = q(3), e = q(4), f = q(5);
  const double s = nrm.s, mx = nrm.mx, my = nrm.my;
  Eigen::Matrix<double, 6, 1> out;
  out(0) = a;
  out(1) = b;
  out(2) = c;
  out(3) = -2.0 * a * mx - b * my + d * s;
  out(4) = -b * mx - 2.0 * c * my + e * s;
  out(5) = a * mx * mx + b * mx * my + c * my * my - d * s * mx - e * s * my +
           f * s * s;
  return out;
}

double minor_axis_spread(const Eigen::MatrixXd& pts,
                         const Eigen::Matrix<double, 6, 1>& q) {
  // principal-axis azimuth of the quadratic part
  const double theta = 0.5 * std::atan2(q(1), q(0) - q(2));
  const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
  const Eigen::Vector2d v(-u(1), u(0));
  const Eigen::RowVector2d mean = pts.colwise().mean();
  double su = 0.0, sv = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::Vector2d p = pts.row(i).transpose() - mean.transpose();
    su += std::pow(p.dot(u), 2);
    sv += std::pow(p.dot(v), 2);
  }
  su = std::sqrt(su / static_cast<double>(pts.rows()));
  sv = std::sqrt(sv / static_cast<double>(pts.rows()));
  return std::min(su, sv);
}

}  // namespace

Conic fit_conic(std::span<const Point2> points, const FitOptions& opts) {
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (n < 6) {
    throw TooFewPoints("conic fit needs at least 6 points");
  }
  // six *distinct* points are needed to pin a conic; duplicated rows (as in
  // bootstrap resamples) only reweight
  {
    std::vector<std::pair<double, double>> uniq;
    for (const auto& p : points) {
      uniq.emplace_back(p.x(), p.y());
    }
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 6) {
      throw TooFewPoints("conic fit needs at least 6 distinct points");
    }
  }

  Eigen::MatrixXd raw(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) raw.row(i) = points[i].transpose();

  // Collinearity guard: smallest singular value of the centered data.
  Eigen::MatrixXd centered = raw.rowwise() - raw.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  if (svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0)) {
    throw DegenerateConic("points are collinear; the ellipse has collapsed");
  }

  // Center and scale to unit RMS radius per coordinate.
  Normalization nrm;
  nrm.mx = raw.col(0).mean();
  nrm.my = raw.col(1).mean();
  nrm.s = std::sqrt(centered.squaredNorm() / (2.0 * static_cast<double>(n)));
  if (nrm.s <= 0.0) {
    throw DegenerateConic("all points coincide");
  }
  Eigen::MatrixXd pts = centered / nrm.s;

  Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
  Eigen::Matrix<double, 6, 1> q = solve_direct(pts, weights);

  if (opts.refine) {
    for (int it = 0; it < opts.refine_iterations; ++it) {
      // Sampson weights 1/||grad Q||^2 from the current solution.
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x = pts(i, 0), y = pts(i, 1);
        const double gx = 2.0 * q(0) * x + q(1) * y + q(3);
        const double gy = q(1) * x + 2.0 * q(2) * y + q(4);
        weights(i) = 1.0 / std::max(gx * gx + gy * gy, 1e-12);
      }
      const Eigen::Matrix<double, 6, 1> next = solve_direct(pts, weights);
      const double change = (next.normalized() - q.normalized()).norm();
      q = next;
      if (change < 1e-12) break;
    }
  }

  if (opts.noise_floor > 0.0 &&
      minor_axis_spread(pts, q) * nrm.s < 3.0 * opts.noise_floor) {
    throw DegenerateConic(
        "point spread along the minor axis is below 3x the noise floor");
  }

  Eigen::Matrix<double, 6, 1> coeffs = denormalize(q, nrm).normalized();
  // Sign convention: conic positive at the ellipse center (a + c < 0), which
  // makes cos(dphi) = b/(2 sqrt(ac)) hold without an extra sign.
  if (coeffs(0) + coeffs(2) > 0.0) coeffs = -coeffs;

  Conic conic;
  for (int k = 0; k < 6; ++k) conic.coeff[k] = coeffs(k);
  const double a = conic.a(), b = conic.b(), c = conic.c();
  conic.is_ellipse = (b * b - 4.0 * a * c) < 0.0;
  conic.condition =
      (a * c > 0.0) ? std::abs(b) / (2.0 * std::sqrt(a * c)) : 1.0;
  if (!conic.is_ellipse) {
    throw DegenerateConic("constrained solution is not an ellipse");
  }
  if (conic.condition > 1.0 - opts.degeneracy_margin) {
    throw DegenerateConic("ellipse collapsed: |cos dphi| at the unit bound");
  }
  return conic;
}

PhaseEstimate relative_phase(const Conic& conic) {
  const double a = conic.a(), b = conic.b(), c = conic.c();
  if (!conic.is_ellipse || a * c <= 0.0) {
    throw NotAnEllipse("relative phase is defined only for an ellipse");
  }
  const double raw = b / (2.0 * std::sqrt(a * c));
  PhaseEstimate est;
  est.clamped = std::abs(raw) > 1.0;
  est.abs_dphi = std::acos(std::clamp(raw, -1.0, 1.0));
  return est;
}

BootstrapResult phase_uncertainty(std::span<const Point2> points,
                                  int n_resamples, std::uint64_t seed,
                                  const FitOptions& opts) {
  // The full set must fit; propagate its failure unchanged.
  (void)relative_phase(fit_conic(points, opts));

  const std::size_t n = points.size();
  std::vector<double> phases;
  phases.reserve(static_cast<std::size_t>(n_resamples));
  BootstrapResult result;
  result.n_resamples = n_resamples;
  std::vector<Point2> sample(n);
  for (int k = 0; k < n_resamples; ++k) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) sample[i] = points[pick(rng)];
    try {
      phases.push_back(relative_phase(fit_conic(sample, opts)).abs_dphi);
    } catch (const DegenerateConic&) {
      ++result.n_discarded;
    } catch (const TooFewPoints&) {
      ++result.n_discarded;
    }
  }
  if (phases.size() < 2) {
    throw DegenerateConic("bootstrap: nearly all resamples were degenerate");
  }
  double mean = 0.0;
  for (double p : phases) mean += p;
  mean /= static_cast<double>(phases.size());
  double ss = 0.0;
  for (double p : phases) ss += (p - mean) * (p - mean);
  result.sigma = std::sqrt(ss / static_cast<double>(phases.size() - 1));
  return result;
}

std::array<double, 2> ellipse_extents(const Conic& conic) {
  const double a = conic.a(), b = conic.b(), c = conic.c();
  const double d = conic.d(), e = conic.e(), f = conic.f();
  const auto extent = [](double aa, double bb, double cc, double dd,
                         double ee, double ff) {
    // X extremes satisfy 2cY + bX + e = 0; eliminate Y.
    const double alpha = aa - bb * bb / (4.0 * cc);
    const double beta = dd - bb * ee / (2.0 * cc);
    const double gamma = ff - ee * ee / (4.0 * cc);
    const double disc = std::max(0.0, beta * beta - 4.0 * alpha * gamma);
    return std::sqrt(disc) / (2.0 * std::abs(alpha));
  };
  return {extent(a, b, c, d, e, f), extent(c, b, a, e, d, f)};
}

}  // namespace gradiometer
