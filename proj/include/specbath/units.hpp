// units.hpp - unit conventions shared by every module.
//
// Energies are wavenumbers (cm^-1), times are femtoseconds. A frequency nu in
// cm^-1 corresponds to an angular frequency 2*pi*c*nu; with c in cm/fs this is
// kCmToRadPerFs * nu rad/fs.
#pragma once

#include <numbers>

namespace specbath::units {

inline constexpr double kSpeedOfLightCmPerFs = 2.99792458e-5;
inline constexpr double kCmToRadPerFs = 2.0 * std::numbers::pi * kSpeedOfLightCmPerFs;
inline constexpr double kBoltzmannCmPerK = 0.695034;
inline constexpr double kFsPerPs = 1000.0;

inline constexpr double wavelength_nm_from_wavenumber(double nu_cm) { return 1.0e7 / nu_cm; }
inline constexpr double wavenumber_from_wavelength_nm(double lambda_nm) { return 1.0e7 / lambda_nm; }

// beta = 1/(k_B T) in cm.
inline constexpr double inverse_temperature(double temperature_k) {
    return 1.0 / (kBoltzmannCmPerK * temperature_k);
}

}  // namespace specbath::units
