// environment.hpp - sun geometry, atmosphere, sky state, panel soiling and
// the year-long degradation ledger.
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "specbath/illumination.hpp"
#include "specbath/optimizer.hpp"

namespace specbath {

/// Multiplies accumulated dust by (1 - wash_fraction_per_day) per day inside
/// [start_day, end_day).
struct CleaningEvent {
    double start_day = 270.0;
    double end_day = 300.0;
    double wash_fraction_per_day = 0.03;
};

struct SiteClimate {
    std::string name;
    std::string label;
    double latitude_deg = 0.0;
    double turbidity_beta = 0.125;
    double angstrom_alpha = 1.25;
    double water_vapor_cm = 1.5;
    double dust_deposition_mg_cm2_day = 0.1;
    double cleaning_fraction = 0.999;
    double initial_dust_mg_cm2 = 0.023;
    double gamma_dust_m2_g = 0.1;
    double clean_transmission = 1.0;
    std::vector<CleaningEvent> cleaning_events{CleaningEvent{}};
    double temperature_mean_k = 293.0;
    double temperature_annual_amplitude_k = 7.0;
    double temperature_diurnal_amplitude_k = 3.0;
    double temperature_peak_day = 91.0;
    double temperature_peak_hour = 15.0;
    double humidity_mean = 0.5;
    double humidity_amplitude = 0.2;
    double humidity_peak_day = 45.0;
    double clearness_mean = 0.5;

    /// Hard physical limits; throws std::invalid_argument.
    void validate() const;
    /// Human-readable notes for parameters outside the usual ranges
    /// (beta in [0.05, 0.2], alpha in [1.0, 1.5]). Empty when all are typical.
    std::vector<std::string> range_notes() const;
};

/// Bundled nine-site database (data/sites.json).
std::vector<SiteClimate> load_sites(const std::filesystem::path& path);
std::vector<SiteClimate> default_sites();
/// Throws std::out_of_range for an unknown name.
SiteClimate find_site(const std::vector<SiteClimate>& sites, const std::string& name);
/// The temperate site used by default simulations.
SiteClimate default_site();

inline constexpr double kMaxAirMass = 38.0;
inline constexpr double kNoSun = std::numeric_limits<double>::infinity();

struct SunGeometry {
    double declination_deg;
    double zenith_deg;
    double air_mass;  // kNoSun below the horizon
};

double solar_declination_deg(double day_of_year);
/// Throws std::invalid_argument unless day is in [0, 365] and |lat| <= 90.
SunGeometry sun_geometry(double latitude_deg, double day_of_year, double hour_angle_deg);
/// 1 / cos(zenith), capped at kMaxAirMass; kNoSun at or below the horizon.
double air_mass_from_zenith(double zenith_deg);

/// k_H2O(lambda) in cm^-1 per cm of precipitable water, linearly interpolated,
/// zero outside the table.
class WaterVaporTable {
public:
    WaterVaporTable(std::vector<double> wavelengths, std::vector<double> k);
    double operator()(double lambda_nm) const;

private:
    std::vector<double> wavelengths_;
    std::vector<double> k_;
};

WaterVaporTable load_water_vapor_table(const std::filesystem::path& path);
/// The bundled table (data/h2o_absorption.csv), loaded once.
const WaterVaporTable& default_water_vapor_table();

/// Aerosol optical depth beta (lambda / 1000 nm)^-alpha.
double aerosol_optical_depth(double lambda_nm, const SiteClimate& site);
/// exp(-tau_aer AM) exp(-k_H2O w AM); throws unless AM >= 1.
double atmospheric_transmission(double lambda_nm, double air_mass, const SiteClimate& site,
                                const WaterVaporTable& h2o = default_water_vapor_table());

enum class SkyCategory { clear, partly_cloudy, overcast };
std::string to_string(SkyCategory c);

struct SkyState {
    double clearness_index;
    SkyCategory category;
    double diffuse_fraction;
};

/// clear above 0.65, overcast below 0.35. The diffuse fraction is 0.95 for
/// overcast skies, 0.15 for clear ones, and linear in between.
SkyState classify_sky(double k_t);

struct SoilingState {
    double mass_mg_cm2 = 0.0;
    double gamma_dust_m2_g = 0.1;
    double clean_transmission = 1.0;
    /// Simulation clock in days, advanced by dust_step.
    double day = 0.0;

    /// Throws unless mass >= 0, gamma in [0.05, 0.15], T_0 in [0, 1].
    void validate() const;
    /// Equivalent layer thickness at 2.0 g cm^-3.
    double thickness_um() const;
};

inline constexpr double kDustDensityGPerCm3 = 2.0;

SoilingState initial_soiling(const SiteClimate& site);
/// Deposits r_dep (1 - r_clean) dt, then applies the washing of any cleaning
/// event overlapping [day, day + dt). Throws for dt < 0.
SoilingState dust_step(const SoilingState& state, const SiteClimate& site, double dt_days);
/// T_0 exp(-gamma m) with m converted from mg cm^-2 to g m^-2.
double dust_transmission(const SoilingState& state);

/// mean + A_y cos(2 pi (d - d_peak) / 365) + A_d cos(2 pi (h - h_peak) / 24).
double temperature_profile(const SiteClimate& site, double day, double hour);
/// Annual sinusoid mean + A cos(2 pi (d - d_peak) / 365), clamped to [0, 1].
double humidity_profile(const SiteClimate& site, double day);

struct AnnualOptions {
    std::uint64_t seed = 1;
    bool weather_variation = true;  // false: AM 1.5, constant temperature and humidity
    bool dust = true;
    int days = 365;
    /// Exciton responses are interpolated from temperatures at most this far apart.
    double temperature_step_k = 2.5;
};

/// One daylight hour. rel_pce and rel_etr are per unit incident irradiance,
/// relative to the clean panel under AM1.5G at the context bath temperature.
struct LedgerRow {
    int day;
    int hour;
    double temp_k;
    double humidity;
    double dust_um;
    double rel_pce;
    double rel_etr;
    double pce;
    double air_mass;
};

struct SummaryRow {
    std::string label;
    int day;
    double temp_k;
    double humidity;
    double dust_um;
    double rel_pce;
    double rel_etr;
    double pce;
    SkyCategory sky;
};

struct DegradationLedger {
    std::string site;
    std::uint64_t seed = 0;
    std::vector<LedgerRow> rows;
    std::vector<SummaryRow> summary;  // day 0 and the ends of Q1..Q4
    std::vector<SkyState> daily_sky;
    /// 100 (first-day mean - last-day mean) / first-day mean.
    double pce_degradation_pct = 0.0;
    double etr_degradation_pct = 0.0;

    /// Columns day,hour,temp_K,humidity,dust_um,rel_pce,rel_etr.
    std::string csv() const;
    std::string summary_json() const;
};

/// Comparison values for a temperate-climate year with the balanced design.
struct ReferenceYear {
    double day0_pce = 0.1688;
    double day0_etr = 0.8936;
    double degradation_pct = 0.17;
};

/// Hourly year-long run. The design filters the atmosphere-corrected
/// spectrum, dust attenuates both the panel and the transmitted light, and
/// the trap response follows the hourly temperature.
DegradationLedger annual_simulation(const SiteClimate& site, const TransmissionProfile& design,
                                    const OptimizationContext& context, const AnnualOptions& options = {});

}  // namespace specbath
