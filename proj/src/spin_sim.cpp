#include "gradiometer/spin_sim.hpp"

#include <cmath>

#include "gradiometer/constants.hpp"
#include "gradiometer/quadrature.hpp"

namespace gradiometer {

namespace {

using Mat3c = Eigen::Matrix3cd;
using Vec3c = Eigen::Vector3cd;
using namespace std::complex_literals;

// F_n = cos(phase) F_x + sin(phase) F_y in the (m=-1, 0, +1) basis.
Mat3c spin1_axis_operator(double axis_phase) {
  const std::complex<double> e = std::exp(1i * axis_phase);
  const double s = 1.0 / std::sqrt(2.0);
  Mat3c f = Mat3c::Zero();
  f(0, 1) = s * e;
  f(1, 0) = s * std::conj(e);
  f(1, 2) = s * e;
  f(2, 1) = s * std::conj(e);
  return f;
}

Vec3c to_eigen(const SpinState& s) { return Vec3c(s.c[0], s.c[1], s.c[2]); }

SpinState from_eigen(const Vec3c& v) { return SpinState{{v(0), v(1), v(2)}}; }

}  // namespace

double SpinState::norm_sq() const {
  return std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
}

std::array<double, 3> SpinState::populations() const {
  return {std::norm(c[0]), std::norm(c[1]), std::norm(c[2])};
}

double SpinState::fz() const { return std::norm(c[2]) - std::norm(c[0]); }

SpinState pulse(const SpinState& s, double axis_phase, double angle) {
  const Mat3c fn = spin1_axis_operator(axis_phase);
  // exp(-i a F_n) = 1 - i sin(a) F_n + (cos(a)-1) F_n^2 since F_n^3 = F_n.
  const Mat3c u = Mat3c::Identity() - 1i * std::sin(angle) * fn +
                  (std::cos(angle) - 1.0) * (fn * fn);
  return from_eigen(u * to_eigen(s));
}

SpinState evolve_phase(const SpinState& s, double delta) {
  // F_z = diag(-1, 0, +1); exp(-i delta F_z)
  SpinState out = s;
  out.c[0] *= std::exp(1i * delta);
  out.c[2] *= std::exp(-1i * delta);
  return out;
}

double larmor_phase(const FieldScene& scene, const CloudTrajectory& traj,
                    double T, double common_draw) {
  if (T == 0.0) return 0.0;
  const auto magnitude = [&](double t) {
    return field_at(scene, traj.position(t)).norm();
  };
  // phase budget 1e-10 rad, an order below the documented 1e-9 tolerance
  const double abs_tol = 1e-10 / constants::gamma_rb87;
  const double integral = integrate_abs_tol(magnitude, 0.0, T, abs_tol);
  return constants::gamma_rb87 * (integral + common_draw * T);
}

double default_reference_frequency(const FieldScene& scene,
                                   const CloudTrajectory& t1,
                                   const CloudTrajectory& t2) {
  const Vec3 midpoint = 0.5 * (t1.r0 + t2.r0);
  return constants::gamma_rb87 * field_at(scene, midpoint).norm();
}

std::array<double, 3> measure_populations(const SpinState& s,
                                          const NoiseModel& noise,
                                          std::mt19937_64& rng) {
  if (noise.n_atoms < 1) {
    throw std::invalid_argument("noise model needs at least one atom");
  }
  const auto p = s.populations();
  const double n = static_cast<double>(noise.n_atoms);
  if (!noise.projection_noise) {
    return {n * p[0], n * p[1], n * p[2]};
  }
  if (noise.kappa < 1.0) {
    throw std::invalid_argument(
        "detection noise factor kappa must be >= 1 with projection noise on");
  }

  // Multinomial draw via sequential binomials; this alone reproduces the
  // 1/sqrt(2N) projection noise of an equatorial state.
  std::array<double, 3> counts{};
  long remaining = noise.n_atoms;
  double p_left = 1.0;
  for (int m = 0; m < 2 && remaining > 0; ++m) {
    const double pm = std::clamp(p[m] / p_left, 0.0, 1.0);
    std::binomial_distribution<long> binom(remaining, pm);
    const long k = binom(rng);
    counts[m] = static_cast<double>(k);
    remaining -= k;
    p_left -= p[m];
  }
  counts[2] = static_cast<double>(remaining);

  // Detection-noise inflation: independent Gaussian count perturbations
  // sized so the equatorial F_z noise totals kappa/sqrt(2N).
  if (noise.kappa > 1.0) {
    const double sigma_c = 0.5 * std::sqrt(n * (noise.kappa * noise.kappa - 1.0));
    std::normal_distribution<double> gauss(0.0, sigma_c);
    for (auto& c : counts) c = std::max(0.0, c + gauss(rng));
  }
  return counts;
}

namespace {

CloudShot read_out(const SpinState& s, const NoiseModel& noise,
                   std::mt19937_64& rng) {
  CloudShot shot;
  shot.counts = measure_populations(s, noise, rng);
  const double total = shot.counts[0] + shot.counts[1] + shot.counts[2];
  shot.fz = total > 0.0 ? (shot.counts[2] - shot.counts[0]) / total : 0.0;
  return shot;
}

}  // namespace

Shot ramsey_shot(const FieldScene& scene, const CloudTrajectory& traj1,
                 const CloudTrajectory& traj2, double T, double phi,
                 const NoiseModel& noise, std::mt19937_64& rng,
                 double omega_ref, double pulse_area_error) {
  if (scene.common_noise_sigma < 0.0) {
    throw std::invalid_argument("common-mode noise sigma must be >= 0");
  }
  Shot shot;
  shot.T = T;
  shot.phi = phi;
  if (scene.common_noise_sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, scene.common_noise_sigma);
    shot.common_draw = gauss(rng);
  }

  const double half_pi = 0.5 * std::numbers::pi * (1.0 + pulse_area_error);
  const auto run_interferometer = [&](const CloudTrajectory& traj) {
    const double delta =
        larmor_phase(scene, traj, T, shot.common_draw) - omega_ref * T;
    SpinState s = SpinState::m_minus1();
    s = pulse(s, 0.0, half_pi);
    s = evolve_phase(s, delta);
    s = pulse(s, phi, half_pi);
    return s;
  };

  shot.cloud1 = read_out(run_interferometer(traj1), noise, rng);
  shot.cloud2 = read_out(run_interferometer(traj2), noise, rng);
  return shot;
}

}  // namespace gradiometer
