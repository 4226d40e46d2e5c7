// illumination.hpp - solar spectra, OPV transmission and light-derived
// excitation inputs. All wavelengths are in nm.
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "specbath/bath.hpp"
#include "specbath/exciton_system.hpp"

namespace specbath {

/// Spectral irradiance in W m^-2 nm^-1 on a strictly increasing grid inside
/// [280, 4000] nm.
class SolarSpectrum {
public:
    SolarSpectrum(std::vector<double> wavelengths, std::vector<double> irradiance);

    const std::vector<double>& wavelengths() const { return wavelengths_; }
    const std::vector<double>& irradiance() const { return irradiance_; }
    std::size_t size() const { return wavelengths_.size(); }

    /// Trapezoidal integral over the full grid, W m^-2.
    double integral() const;
    /// Trapezoidal integral over [lo, hi], interpolating at the band edges.
    double band_integral(double lo_nm, double hi_nm) const;
    /// Linear interpolation; zero outside the grid.
    double at(double lambda_nm) const;

private:
    std::vector<double> wavelengths_;
    std::vector<double> irradiance_;
};

SolarSpectrum load_solar_spectrum(const std::filesystem::path& path);
SolarSpectrum load_solar_spectrum(std::istream& in);
/// The bundled ASTM G173-03 AM1.5G table.
SolarSpectrum default_solar_spectrum();
std::filesystem::path data_directory();

struct TransmissionBand {
    double center_nm;
    double fwhm_nm;
    double weight;

    double sigma_nm() const;
};

/// T(lambda) = T_peak sum_i w_i exp(-(lambda - c_i)^2 / 2 sigma_i^2), clipped to [0, 1].
struct TransmissionProfile {
    double peak = 1.0;
    std::vector<TransmissionBand> bands;

    /// Throws unless peak is in [0,1], fwhm > 0, and weights are non-negative
    /// and sum to 1 within 1e-9.
    void validate() const;
    double operator()(double lambda_nm) const;

    std::string to_json() const;
    static TransmissionProfile from_json(const std::string& text);
};

double transmission_eval(double lambda_nm, const TransmissionProfile& profile);

/// Dual-band profile centred on the 750 and 820 nm vibronic windows.
TransmissionProfile resonant_dual_band_profile(double peak = 0.7, double fwhm_nm = 80.0);

/// J_plant = T x J_solar on the solar grid.
SolarSpectrum filtered_spectrum(const TransmissionProfile& profile, const SolarSpectrum& solar);

class PVEfficiencyCurve {
public:
    PVEfficiencyCurve(std::vector<double> wavelengths, std::vector<double> efficiency);

    const std::vector<double>& wavelengths() const { return wavelengths_; }
    const std::vector<double>& efficiency() const { return efficiency_; }
    /// Linear interpolation; throws outside the tabulated range.
    double at(double lambda_nm) const;
    bool covers(double lo_nm, double hi_nm) const;

private:
    std::vector<double> wavelengths_;
    std::vector<double> efficiency_;
};

/// Constant `value` on [lo, hi] and zero elsewhere in [280, 4000], with
/// 0.5 nm edges.
PVEfficiencyCurve flat_pv_curve(double value, double lo_nm = 300.0, double hi_nm = 900.0);
/// Default OPV response: flat 0.40 over 300-900 nm.
PVEfficiencyCurve default_pv_curve();
PVEfficiencyCurve load_pv_curve(const std::filesystem::path& path);
PVEfficiencyCurve load_pv_curve(std::istream& in);

inline constexpr double kDefaultPvEfficiency = 0.40;
inline constexpr double kParLowNm = 400.0;
inline constexpr double kParHighNm = 700.0;

/// Absorbed fraction converted to power:
/// int (1 - T) J_solar eta_PV / int J_solar, trapezoidal.
double pce(const TransmissionProfile& profile, const SolarSpectrum& solar, const PVEfficiencyCurve& pv);

/// Fraction of the integral inside 400-700 nm.
double par_fraction(const SolarSpectrum& spectrum);

struct Lineshape {
    double center_nm;
    double width_nm;  // Gaussian standard deviation
    double cross_section = 1.0;
};

/// Per-exciton absorption lineshapes and the rate per unit spectral overlap
/// (ps^-1 per W m^-2).
struct PumpingModel {
    std::vector<Lineshape> lineshapes;
    double scale = 1.0e-3;

    void validate(std::size_t n_excitons) const;
};

/// Lineshapes centred on the exciton transitions of `system`.
PumpingModel default_pumping_model(const ExcitonSystem& system, double width_nm = 5.0);

/// rate_n = scale * int A_n(lambda) J_plant(lambda) dlambda with unit-area
/// Gaussians A_n (ps^-1), indexed like ExcitonSystem::exciton_basis().
Eigen::VectorXd pumping_rates(const SolarSpectrum& plant, const ExcitonSystem& system, const PumpingModel& model);

/// Closest match of each filter band to the vibronic resonance condition
/// |nu_filter - E_mu| = omega_k +/- |J_nm| over excitons mu, modes k and
/// coupled pairs (n, m). Frequencies in cm^-1.
struct ResonanceMatch {
    std::size_t band;
    double filter_cm;
    std::size_t exciton;
    std::size_t mode;
    std::size_t site_n;
    std::size_t site_m;
    int sign;
    double target_offset_cm;
    double detuning_cm;
};

std::vector<ResonanceMatch> resonance_detuning(const TransmissionProfile& profile, const ExcitonSystem& system,
                                               const BathSpec& bath);

}  // namespace specbath
