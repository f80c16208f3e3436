#pragma once

#include <cmath>

#include "gradiometer/field_model.hpp"

namespace gradiometer {

struct EigenDecomposition3 {
  Vec3 values = Vec3::Zero();   // unordered
  Mat3 vectors = Mat3::Zero();  // columns match values
};

// Cyclic Jacobi rotations for a symmetric 3x3 matrix; unconditionally stable
// at this size. Input is symmetrized before sweeping.
inline EigenDecomposition3 jacobi_eigen3(const Mat3& m) {
  Mat3 a = 0.5 * (m + m.transpose());
  Mat3 v = Mat3::Identity();
  const double scale = a.norm();

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * (scale > 0.0 ? scale : 1.0)) break;

    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 rot = Mat3::Identity();
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
        a(p, q) = a(q, p) = 0.0;
        v = v * rot;
      }
    }
  }

  EigenDecomposition3 out;
  out.values = a.diagonal();
  out.vectors = v;
  return out;
}

}  // namespace gradiometer
