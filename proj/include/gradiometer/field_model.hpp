#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

namespace gradiometer {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// ---------------------------------------------------------------------------
// Field sources. All values SI (tesla, meter, ampere). Every source is
// evaluable to the field vector B(r) and the gradient tensor
// G_ij = dB_i/dx_j at any nonsingular point.
// ---------------------------------------------------------------------------

struct UniformField {
  Vec3 b0 = Vec3::Zero();
};

// B(r) = b0 + g * (r - origin). A physical (current-free) gradient must be
// symmetric and traceless; pass maxwell_valid=false to build deliberately
// non-Maxwellian tensors for testing the consistency checks.
struct LinearGradientField {
  Vec3 b0 = Vec3::Zero();
  Mat3 g = Mat3::Zero();
  Vec3 origin = Vec3::Zero();
  bool maxwell_valid = true;

  // Validates the Maxwell constraints when maxwell_valid is set
  // (relative tolerance 1e-12); throws std::invalid_argument otherwise.
  static LinearGradientField make(const Vec3& b0, const Mat3& g,
                                  const Vec3& origin = Vec3::Zero(),
                                  bool maxwell_valid = true);
};

struct DipoleField {
  Vec3 moment = Vec3::Zero();    // A m^2
  Vec3 position = Vec3::Zero();  // m
};

// Circular loop evaluated as a closed polygon of straight Biot-Savart
// segments (n_segments chords inscribed in the circle). Accuracy at the
// center is ~(pi/n)^2/3 relative; 360 segments keep it below 1e-4.
struct CoilLoop {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // unit vector
  double radius = 0.1;          // m
  double current = 1.0;         // A
  int n_segments = 360;         // >= 12
};

// Coaxial pair; opposite_currents selects anti-Helmholtz wiring.
struct CoilPair {
  CoilLoop first;
  CoilLoop second;
  bool opposite_currents = false;
};

CoilPair make_coil_pair(const Vec3& center, const Vec3& axis, double radius,
                        double separation, double current,
                        bool opposite_currents, int n_segments = 360);

using FieldSource = std::variant<UniformField, LinearGradientField,
                                 DipoleField, CoilLoop, CoilPair>;

// A scene is the vector sum of its sources plus a shot-to-shot, spatially
// uniform, zero-mean Gaussian fluctuation of |B| with standard deviation
// common_noise_sigma (baseband common-mode noise).
struct FieldScene {
  std::vector<FieldSource> sources;
  double common_noise_sigma = 0.0;  // tesla, >= 0
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// Field of a single source. Throws SingularPoint within 1e-9 m of a dipole
// position or of the loop wire.
Vec3 source_field(const FieldSource& src, const Vec3& r);

// Gradient tensor of a single source; analytic for every source type (coil
// segments are differentiated in closed form, keeping the summed tensor
// traceless to rounding).
Mat3 source_gradient(const FieldSource& src, const Vec3& r);

Vec3 field_at(const FieldScene& scene, const Vec3& r);
Mat3 gradient_tensor_at(const FieldScene& scene, const Vec3& r);

// grad |B| = G^T B/|B| (exact chain rule). Throws ZeroField when
// |B| < 1e-15 T.
Vec3 grad_magnitude_at(const FieldScene& scene, const Vec3& r);

struct MaxwellResiduals {
  double trace_rel;      // |tr G| / ||G||
  double asymmetry_rel;  // ||G - G^T|| / ||G||
};

MaxwellResiduals maxwell_residuals(const Mat3& g);

}  // namespace gradiometer
