#pragma once

#include "gradiometer/constants.hpp"

namespace gradiometer {

// Figure-of-merit inputs. N is the TOTAL atom number (both clouds); duty
// cycle D = T / T_shot and integration time T_int = M * T_shot.
struct SensitivityParams {
  double n_atoms = 1e5;
  double T = 3e-3;        // interrogation, s
  double t_shot = 25.0;   // single-shot duration, s
  int m_shots = 24;       // points per ellipse
  double kappa = 3.0;     // spin-projection noise relative to SQL
  double volume = 2e-14;  // sensor volume, m^3
  double gamma = constants::gamma_rb87;

  double duty() const { return T / t_shot; }
  double t_int() const { return m_shots * t_shot; }
};

// Validates D in (0,1], positive inputs; throws ConfigError.
void validate(const SensitivityParams& p);

// Field sensitivity per unit bandwidth, tesla Hz^-1/2:
// delta_B sqrt(T_int) = kappa / (gamma sqrt(N T D)).
double sql_sensitivity(const SensitivityParams& p);

// Spatiotemporal sensitivity delta_B sqrt(T_int) sqrt(V), reported in
// tesla cm^(3/2) Hz^-1/2 (volume input in m^3).
double spatiotemporal(double delta_b_rt_hz, double volume_m3);

// Energy resolution per unit bandwidth in units of hbar:
// eps = (delta_B sqrt(T_int))^2 V / (2 mu0 hbar). The bandwidth
// normalization already carries the interrogation-time factor, so T is
// echoed in reports but does not multiply.
double energy_resolution_hbar(double delta_b_rt_hz, double T,
                              double volume_m3);

// Volume swept by a falling, expanding condensate: a capsule of mean radius
// r = r0 + expansion_rate*T/2 whose axis is the drop distance,
// V = (4/3) pi r^3 + pi r^2 * drop.
double freefall_sensor_volume(double initial_radius_m,
                              double expansion_rate_mps,
                              double interrogation_s, double drop_m);

// Common-mode rejection in dB, 20 log10(single/diff). Throws ZeroDenominator.
double cmrr_db(double single_phase_sigma, double diff_phase_sigma);

// Equivalent Larmor angular-frequency noise of a phase spread at time T.
double larmor_frequency_noise(double phase_sigma, double T);

}  // namespace gradiometer
