#pragma once

#include <numbers>

namespace gradiometer::constants {

// CODATA 2018 values.
inline constexpr double mu0 = 1.25663706212e-6;   // vacuum permeability, N A^-2
inline constexpr double hbar = 1.054571817e-34;   // reduced Planck constant, J s

// Gyromagnetic ratio of the 87Rb F=1 ground state, rad s^-1 T^-1.
// |g_F| mu_B / hbar to four significant figures: 2*pi * 6.996 kHz/uT.
inline constexpr double gamma_rb87 = 2.0 * std::numbers::pi * 6.996e9;

inline constexpr double g_standard = 9.81;        // m s^-2

}  // namespace gradiometer::constants
