#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>

#include "gradiometer/field_model.hpp"

namespace gradiometer {

// ---------------------------------------------------------------------------
// Spin-1 state and rotations. Amplitude index 0,1,2 <-> m = -1, 0, +1.
// ---------------------------------------------------------------------------

struct SpinState {
  std::array<std::complex<double>, 3> c{};

  static SpinState m_minus1() { return SpinState{{1.0, 0.0, 0.0}}; }

  double norm_sq() const;
  std::array<double, 3> populations() const;  // |c_m|^2, m = -1, 0, +1
  double fz() const;                          // <F_z> = |c_+1|^2 - |c_-1|^2
};

// Rotation by `angle` about the equatorial axis at azimuth `axis_phase`,
// exp(-i angle F_n) with F_n = cos(phase) F_x + sin(phase) F_y, evaluated
// through the closed form 1 - i sin(angle) F_n + (cos(angle)-1) F_n^2.
SpinState pulse(const SpinState& s, double axis_phase, double angle);

// Free evolution by relative Larmor phase delta about z:
// c_m -> exp(-i m delta) c_m.
SpinState evolve_phase(const SpinState& s, double delta);

// ---------------------------------------------------------------------------
// Ballistic trajectory
// ---------------------------------------------------------------------------

struct CloudTrajectory {
  Vec3 r0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  Vec3 g = Vec3(0.0, -9.81, 0.0);

  Vec3 position(double t) const { return r0 + v0 * t + 0.5 * t * t * g; }

  // Same ballistic path, re-parameterized to start at time dt.
  CloudTrajectory advanced(double dt) const {
    return CloudTrajectory{position(dt), v0 + g * dt, g};
  }
};

// ---------------------------------------------------------------------------
// Measurement noise
// ---------------------------------------------------------------------------

struct NoiseModel {
  long n_atoms = 50000;          // atoms per cloud, >= 1
  bool projection_noise = true;  // multinomial atom-shot noise
  double kappa = 3.0;            // total F_z noise relative to 1/sqrt(2N)
  std::uint64_t seed = 0;        // master seed for derived streams
};

// One experimental realization.
struct CloudShot {
  std::array<double, 3> counts{};  // N_{-1}, N_0, N_{+1}
  double fz = 0.0;
};

struct Shot {
  double T = 0.0;            // interrogation time, s
  double phi = 0.0;          // second-pulse phase, rad
  CloudShot cloud1, cloud2;
  double common_draw = 0.0;  // tesla, shared |B| offset this shot
};

// ---------------------------------------------------------------------------
// Ramsey sequence
// ---------------------------------------------------------------------------

// Accumulated Larmor phase gamma * Int_0^T |B(r(t))| dt along the ballistic
// path, by adaptive Gauss-Kronrod quadrature (absolute tolerance well below
// 1e-9 rad for smooth fields). The common draw enters as a uniform offset of
// |B|, added analytically so it cancels exactly in phase differences.
double larmor_phase(const FieldScene& scene, const CloudTrajectory& traj,
                    double T, double common_draw = 0.0);

// gamma * |B| at the midpoint of the two clouds at t = 0; default rotating
// frame reference for ramsey_shot.
double default_reference_frequency(const FieldScene& scene,
                                   const CloudTrajectory& t1,
                                   const CloudTrajectory& t2);

// Population measurement. With projection noise on, counts are drawn from a
// multinomial over |c_m|^2 and then perturbed by zero-mean Gaussians sized so
// the total F_z noise at the equator is kappa/sqrt(2N); counts clip at zero.
// With noise off, returns the expected counts N |c_m|^2.
std::array<double, 3> measure_populations(const SpinState& s,
                                          const NoiseModel& noise,
                                          std::mt19937_64& rng);

// Full two-cloud Ramsey shot: pi/2 pulse, free evolution accruing
// delta_a = larmor_phase - omega_ref*T, second pi/2 pulse at azimuth phi,
// population readout. Both clouds start in m = -1 and share one common-mode
// field draw. pulse_area_error e scales both pulse angles by (1+e).
Shot ramsey_shot(const FieldScene& scene, const CloudTrajectory& traj1,
                 const CloudTrajectory& traj2, double T, double phi,
                 const NoiseModel& noise, std::mt19937_64& rng,
                 double omega_ref, double pulse_area_error = 0.0);

}  // namespace gradiometer
