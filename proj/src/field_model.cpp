#include "gradiometer/field_model.hpp"

#include <cmath>
#include <stdexcept>

#include "gradiometer/constants.hpp"
#include "gradiometer/errors.hpp"

namespace gradiometer {

namespace {

constexpr double kSingularDistance = 1e-9;  // m

// Exact field (and, on request, its analytic gradient) of a straight finite
// segment carrying current I from A to B. With a = A - r and b = B - r:
//   B(r) = k (a x b) (|a| + |b|) / (|a||b| (|a||b| + a.b)),  k = mu0 I / 4pi.
// Differentiating this form directly keeps the summed loop tensor
// divergence-free to rounding, which a finite-difference tensor cannot do.
void segment_eval(const Vec3& ra, const Vec3& rb, double current, Vec3* field,
                  Mat3* grad) {
  const double na = ra.norm();
  const double nb = rb.norm();
  const Vec3 cross = ra.cross(rb);
  const double dot = ra.dot(rb);
  const double m = na * nb + dot;
  const double denom = na * nb * m;
  if (denom <= 0.0 || na < kSingularDistance || nb < kSingularDistance) {
    throw SingularPoint("field evaluation point on or touching a coil wire");
  }
  const double k = constants::mu0 * current / (4.0 * std::numbers::pi);
  const double s = (na + nb) / denom;
  if (field) *field += k * s * cross;
  if (grad) {
    const Vec3 lvec = rb - ra;  // B - A
    for (int j = 0; j < 3; ++j) {
      const Vec3 ej = Vec3::Unit(j);
      const Vec3 dcross = -ej.cross(lvec);
      const double dna = -ra(j) / na;
      const double dnb = -rb(j) / nb;
      const double dnanb = dna * nb + na * dnb;
      const double dm = dnanb - ra(j) - rb(j);
      const double ddenom = dnanb * m + na * nb * dm;
      const double ds = ((dna + dnb) * denom - (na + nb) * ddenom) /
                        (denom * denom);
      grad->col(j) += k * (s * dcross + ds * cross);
    }
  }
}

void loop_eval(const CoilLoop& loop, const Vec3& r, Vec3* field, Mat3* grad) {
  if (loop.n_segments < 12) {
    throw std::invalid_argument("coil loop needs n_segments >= 12");
  }
  const Vec3 n = loop.normal.normalized();
  // distance to the wire circle (torus centerline)
  const Vec3 d = r - loop.center;
  const double axial = d.dot(n);
  const double in_plane = (d - axial * n).norm();
  const double wire_dist = std::hypot(in_plane - loop.radius, axial);
  if (wire_dist < kSingularDistance) {
    throw SingularPoint("field evaluation point within 1e-9 m of coil wire");
  }

  Vec3 u = n.unitOrthogonal();
  Vec3 v = n.cross(u);
  const int nseg = loop.n_segments;
  Vec3 prev = loop.center + loop.radius * u;
  for (int k = 1; k <= nseg; ++k) {
    const double th = 2.0 * std::numbers::pi * k / nseg;
    const Vec3 next =
        loop.center + loop.radius * (std::cos(th) * u + std::sin(th) * v);
    segment_eval(prev - r, next - r, loop.current, field, grad);
    prev = next;
  }
}

Vec3 loop_field(const CoilLoop& loop, const Vec3& r) {
  Vec3 b = Vec3::Zero();
  loop_eval(loop, r, &b, nullptr);
  return b;
}

Mat3 loop_gradient(const CoilLoop& loop, const Vec3& r) {
  Mat3 g = Mat3::Zero();
  loop_eval(loop, r, nullptr, &g);
  return g;
}

Vec3 dipole_vector(const DipoleField& dip, const Vec3& r) {
  const Vec3 d = r - dip.position;
  const double dist = d.norm();
  if (dist < kSingularDistance) {
    throw SingularPoint("field evaluation point at a dipole position");
  }
  const Vec3 n = d / dist;
  return constants::mu0 / (4.0 * std::numbers::pi * dist * dist * dist) *
         (3.0 * n.dot(dip.moment) * n - dip.moment);
}

Mat3 dipole_gradient(const DipoleField& dip, const Vec3& r) {
  const Vec3 d = r - dip.position;
  const double dist = d.norm();
  if (dist < kSingularDistance) {
    throw SingularPoint("gradient evaluation point at a dipole position");
  }
  const double k =
      3.0 * constants::mu0 / (4.0 * std::numbers::pi * std::pow(dist, 5));
  const double md = dip.moment.dot(d);
  Mat3 g;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double kron = (i == j) ? 1.0 : 0.0;
      g(i, j) = k * (dip.moment(i) * d(j) + d(i) * dip.moment(j) +
                     md * (kron - 5.0 * d(i) * d(j) / (dist * dist)));
    }
  }
  return g;
}

}  // namespace

LinearGradientField LinearGradientField::make(const Vec3& b0, const Mat3& g,
                                              const Vec3& origin,
                                              bool maxwell_valid) {
  if (maxwell_valid) {
    const double scale = g.norm();
    if (scale > 0.0) {
      if (std::abs(g.trace()) > 1e-12 * scale) {
        throw std::invalid_argument(
            "linear gradient flagged maxwell_valid has nonzero trace");
      }
      if ((g - g.transpose()).norm() > 1e-12 * scale) {
        throw std::invalid_argument(
            "linear gradient flagged maxwell_valid is not symmetric");
      }
    }
  }
  return LinearGradientField{b0, g, origin, maxwell_valid};
}

CoilPair make_coil_pair(const Vec3& center, const Vec3& axis, double radius,
                        double separation, double current,
                        bool opposite_currents, int n_segments) {
  const Vec3 n = axis.normalized();
  CoilLoop a{center - 0.5 * separation * n, n, radius, current, n_segments};
  CoilLoop b{center + 0.5 * separation * n, n,
             radius, opposite_currents ? -current : current, n_segments};
  return CoilPair{a, b, opposite_currents};
}

Vec3 source_field(const FieldSource& src, const Vec3& r) {
  return std::visit(
      [&](const auto& s) -> Vec3 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformField>) {
          return s.b0;
        } else if constexpr (std::is_same_v<T, LinearGradientField>) {
          return s.b0 + s.g * (r - s.origin);
        } else if constexpr (std::is_same_v<T, DipoleField>) {
          return dipole_vector(s, r);
        } else if constexpr (std::is_same_v<T, CoilLoop>) {
          return loop_field(s, r);
        } else {
          return loop_field(s.first, r) + loop_field(s.second, r);
        }
      },
      src);
}

Mat3 source_gradient(const FieldSource& src, const Vec3& r) {
  return std::visit(
      [&](const auto& s) -> Mat3 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformField>) {
          return Mat3::Zero();
        } else if constexpr (std::is_same_v<T, LinearGradientField>) {
          return s.g;
        } else if constexpr (std::is_same_v<T, DipoleField>) {
          return dipole_gradient(s, r);
        } else if constexpr (std::is_same_v<T, CoilLoop>) {
          return loop_gradient(s, r);
        } else {
          return loop_gradient(s.first, r) + loop_gradient(s.second, r);
        }
      },
      src);
}

Vec3 field_at(const FieldScene& scene, const Vec3& r) {
  Vec3 b = Vec3::Zero();
  for (const auto& src : scene.sources) b += source_field(src, r);
  return b;
}

Mat3 gradient_tensor_at(const FieldScene& scene, const Vec3& r) {
  Mat3 g = Mat3::Zero();
  for (const auto& src : scene.sources) g += source_gradient(src, r);
  return g;
}

Vec3 grad_magnitude_at(const FieldScene& scene, const Vec3& r) {
  const Vec3 b = field_at(scene, r);
  const double mag = b.norm();
  if (mag < 1e-15) {
    throw ZeroField("|B| below 1e-15 T; field magnitude gradient undefined");
  }
  const Mat3 g = gradient_tensor_at(scene, r);
  return g.transpose() * (b / mag);
}

MaxwellResiduals maxwell_residuals(const Mat3& g) {
  const double scale = g.norm();
  if (scale == 0.0) return {0.0, 0.0};
  return {std::abs(g.trace()) / scale, (g - g.transpose()).norm() / scale};
}

}  // namespace gradiometer
