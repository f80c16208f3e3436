#include "gradiometer/sensitivity.hpp"

#include <cmath>
#include <numbers>

#include "gradiometer/errors.hpp"

namespace gradiometer {

void validate(const SensitivityParams& p) {
  if (p.n_atoms < 1.0) throw ConfigError("n_atoms must be >= 1");
  if (p.T <= 0.0 || p.t_shot <= 0.0) {
    throw ConfigError("T and t_shot must be positive");
  }
  const double d = p.duty();
  if (d <= 0.0 || d > 1.0) throw ConfigError("duty cycle must be in (0, 1]");
  if (p.m_shots < 1) throw ConfigError("m_shots must be >= 1");
  if (p.kappa < 1.0) throw ConfigError("kappa must be >= 1");
  if (p.volume <= 0.0) throw ConfigError("volume must be positive");
}

double sql_sensitivity(const SensitivityParams& p) {
  validate(p);
  return p.kappa / (p.gamma * std::sqrt(p.n_atoms * p.T * p.duty()));
}

double spatiotemporal(double delta_b_rt_hz, double volume_m3) {
  if (volume_m3 <= 0.0) throw ConfigError("volume must be positive");
  return delta_b_rt_hz * std::sqrt(volume_m3 * 1e6);  // m^3 -> cm^3
}

double energy_resolution_hbar(double delta_b_rt_hz, double /*T*/,
                              double volume_m3) {
  if (volume_m3 <= 0.0) throw ConfigError("volume must be positive");
  return delta_b_rt_hz * delta_b_rt_hz * volume_m3 /
         (2.0 * constants::mu0 * constants::hbar);
}

double freefall_sensor_volume(double initial_radius_m,
                              double expansion_rate_mps,
                              double interrogation_s, double drop_m) {
  if (initial_radius_m < 0.0 || expansion_rate_mps < 0.0 ||
      interrogation_s < 0.0 || drop_m < 0.0) {
    throw ConfigError("sensor volume inputs must be nonnegative");
  }
  const double r =
      initial_radius_m + 0.5 * expansion_rate_mps * interrogation_s;
  return (4.0 / 3.0) * std::numbers::pi * r * r * r +
         std::numbers::pi * r * r * drop_m;
}

double cmrr_db(double single_phase_sigma, double diff_phase_sigma) {
  if (diff_phase_sigma <= 0.0) {
    throw ZeroDenominator("differential phase sigma must be positive");
  }
  return 20.0 * std::log10(single_phase_sigma / diff_phase_sigma);
}

double larmor_frequency_noise(double phase_sigma, double T) {
  if (T <= 0.0) throw ConfigError("T must be positive");
  return phase_sigma / T;
}

}  // namespace gradiometer
