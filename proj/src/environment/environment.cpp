#include "specbath/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "specbath/io.hpp"

namespace specbath {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kReferenceAirMass = 1.5;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void SiteClimate::validate() const {
    const std::string p = "SiteClimate '" + name + "': ";
    require(latitude_deg >= -90.0 && latitude_deg <= 90.0, p + "latitude must be in [-90, 90]");
    require(turbidity_beta >= 0.0 && turbidity_beta <= 1.0, p + "turbidity_beta must be in [0, 1]");
    require(angstrom_alpha >= 0.0 && angstrom_alpha <= 4.0, p + "angstrom_alpha must be in [0, 4]");
    require(water_vapor_cm >= 0.0, p + "water_vapor_cm must be >= 0");
    require(dust_deposition_mg_cm2_day >= 0.0, p + "dust deposition must be >= 0");
    require(cleaning_fraction >= 0.0 && cleaning_fraction <= 1.0, p + "cleaning_fraction must be in [0, 1]");
    require(initial_dust_mg_cm2 >= 0.0, p + "initial dust must be >= 0");
    require(gamma_dust_m2_g >= 0.05 && gamma_dust_m2_g <= 0.15, p + "gamma_dust must be in [0.05, 0.15]");
    require(clean_transmission >= 0.0 && clean_transmission <= 1.0, p + "clean_transmission must be in [0, 1]");
    require(temperature_annual_amplitude_k >= 0.0 && temperature_diurnal_amplitude_k >= 0.0,
            p + "temperature amplitudes must be >= 0");
    require(temperature_mean_k - temperature_annual_amplitude_k - temperature_diurnal_amplitude_k > 0.0,
            p + "temperature must stay positive");
    require(humidity_amplitude >= 0.0 && humidity_mean - humidity_amplitude >= 0.0 &&
                humidity_mean + humidity_amplitude <= 1.0,
            p + "humidity must stay in [0, 1]");
    require(clearness_mean >= 0.0 && clearness_mean <= 1.0, p + "clearness_mean must be in [0, 1]");
    for (const auto& e : cleaning_events) {
        require(e.start_day <= e.end_day, p + "cleaning event ends before it starts");
        require(e.wash_fraction_per_day >= 0.0 && e.wash_fraction_per_day <= 1.0,
                p + "wash_fraction_per_day must be in [0, 1]");
    }
}

std::vector<std::string> SiteClimate::range_notes() const {
    std::vector<std::string> notes;
    if (turbidity_beta < 0.05 || turbidity_beta > 0.2)
        notes.push_back("turbidity_beta " + std::to_string(turbidity_beta) + " outside the typical 0.05-0.2");
    if (angstrom_alpha < 1.0 || angstrom_alpha > 1.5)
        notes.push_back("angstrom_alpha " + std::to_string(angstrom_alpha) + " outside the typical 1.0-1.5");
    return notes;
}

std::vector<SiteClimate> load_sites(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open site database " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("site database " + path.string() + ": " + e.what());
    }
    if (!j.contains("sites") || !j["sites"].is_array()) throw DataError("site database has no 'sites' array");
    std::vector<SiteClimate> sites;
    for (const auto& s : j["sites"]) {
        SiteClimate c;
        try {
            c.name = s.at("name").get<std::string>();
            c.latitude_deg = s.at("latitude_deg").get<double>();
            c.label = s.value("label", c.name);
            c.turbidity_beta = s.value("turbidity_beta", c.turbidity_beta);
            c.angstrom_alpha = s.value("angstrom_alpha", c.angstrom_alpha);
            c.water_vapor_cm = s.value("water_vapor_cm", c.water_vapor_cm);
            c.dust_deposition_mg_cm2_day = s.value("dust_deposition_mg_cm2_day", c.dust_deposition_mg_cm2_day);
            c.cleaning_fraction = s.value("cleaning_fraction", c.cleaning_fraction);
            c.initial_dust_mg_cm2 = s.value("initial_dust_mg_cm2", c.initial_dust_mg_cm2);
            c.gamma_dust_m2_g = s.value("gamma_dust_m2_g", c.gamma_dust_m2_g);
            c.clean_transmission = s.value("clean_transmission", c.clean_transmission);
            if (s.contains("cleaning_events")) {
                c.cleaning_events.clear();
                for (const auto& e : s["cleaning_events"])
                    c.cleaning_events.push_back({e.at("start_day").get<double>(), e.at("end_day").get<double>(),
                                                 e.at("wash_fraction_per_day").get<double>()});
            }
            c.temperature_mean_k = s.value("temperature_mean_k", c.temperature_mean_k);
            c.temperature_annual_amplitude_k = s.value("temperature_annual_amplitude_k", c.temperature_annual_amplitude_k);
            c.temperature_diurnal_amplitude_k =
                s.value("temperature_diurnal_amplitude_k", c.temperature_diurnal_amplitude_k);
            c.temperature_peak_day = s.value("temperature_peak_day", c.temperature_peak_day);
            c.temperature_peak_hour = s.value("temperature_peak_hour", c.temperature_peak_hour);
            c.humidity_mean = s.value("humidity_mean", c.humidity_mean);
            c.humidity_amplitude = s.value("humidity_amplitude", c.humidity_amplitude);
            c.humidity_peak_day = s.value("humidity_peak_day", c.humidity_peak_day);
            c.clearness_mean = s.value("clearness_mean", c.clearness_mean);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("site database " + path.string() + ": " + e.what());
        }
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what());
        }
        sites.push_back(std::move(c));
    }
    if (sites.empty()) throw DataError("site database " + path.string() + " lists no sites");
    return sites;
}

std::vector<SiteClimate> default_sites() { return load_sites(data_directory() / "sites.json"); }

SiteClimate find_site(const std::vector<SiteClimate>& sites, const std::string& name) {
    for (const auto& s : sites)
        if (s.name == name) return s;
    throw std::out_of_range("unknown site '" + name + "'");
}

SiteClimate default_site() { return find_site(default_sites(), "temperate"); }

double solar_declination_deg(double day_of_year) {
    return -23.45 * std::cos(2.0 * std::numbers::pi / 365.0 * (day_of_year + 10.0));
}

double air_mass_from_zenith(double zenith_deg) {
    const double c = std::cos(zenith_deg * kDeg);
    if (!(c > 0.0) || zenith_deg >= 90.0) return kNoSun;
    return std::min(1.0 / c, kMaxAirMass);
}

SunGeometry sun_geometry(double latitude_deg, double day_of_year, double hour_angle_deg) {
    require(day_of_year >= 0.0 && day_of_year <= 365.0, "sun_geometry: day must be in [0, 365]");
    require(latitude_deg >= -90.0 && latitude_deg <= 90.0, "sun_geometry: latitude must be in [-90, 90]");
    const double d = solar_declination_deg(day_of_year);
    const double phi = latitude_deg * kDeg, delta = d * kDeg;
    const double c = std::clamp(
        std::sin(phi) * std::sin(delta) + std::cos(phi) * std::cos(delta) * std::cos(hour_angle_deg * kDeg), -1.0, 1.0);
    const double zenith = std::acos(c) / kDeg;
    return {d, zenith, c > 0.0 ? std::min(1.0 / c, kMaxAirMass) : kNoSun};
}

WaterVaporTable::WaterVaporTable(std::vector<double> wavelengths, std::vector<double> k)
    : wavelengths_(std::move(wavelengths)), k_(std::move(k)) {
    require(wavelengths_.size() == k_.size() && wavelengths_.size() >= 2, "WaterVaporTable: need >= 2 matching points");
    for (std::size_t i = 0; i < k_.size(); ++i) {
        require(k_[i] >= 0.0, "WaterVaporTable: negative absorption coefficient");
        if (i > 0) require(wavelengths_[i] > wavelengths_[i - 1], "WaterVaporTable: wavelengths must increase");
    }
}

double WaterVaporTable::operator()(double lambda_nm) const {
    if (lambda_nm < wavelengths_.front() || lambda_nm > wavelengths_.back()) return 0.0;
    const auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), lambda_nm);
    if (it == wavelengths_.end()) return k_.back();
    const auto i = static_cast<std::size_t>(it - wavelengths_.begin());
    const double t = (lambda_nm - wavelengths_[i - 1]) / (wavelengths_[i] - wavelengths_[i - 1]);
    return k_[i - 1] + t * (k_[i] - k_[i - 1]);
}

WaterVaporTable load_water_vapor_table(const std::filesystem::path& path) {
    const auto rows = read_numeric_csv(path, 2);
    std::vector<double> w, k;
    for (const auto& r : rows) {
        w.push_back(r[0]);
        k.push_back(r[1]);
    }
    try {
        return WaterVaporTable(std::move(w), std::move(k));
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

const WaterVaporTable& default_water_vapor_table() {
    static const WaterVaporTable table = load_water_vapor_table(data_directory() / "h2o_absorption.csv");
    return table;
}

double aerosol_optical_depth(double lambda_nm, const SiteClimate& site) {
    return site.turbidity_beta * std::pow(lambda_nm / 1000.0, -site.angstrom_alpha);
}

double atmospheric_transmission(double lambda_nm, double air_mass, const SiteClimate& site,
                                const WaterVaporTable& h2o) {
    require(air_mass >= 1.0, "atmospheric_transmission: air mass must be >= 1");
    return std::exp(-aerosol_optical_depth(lambda_nm, site) * air_mass) *
           std::exp(-h2o(lambda_nm) * site.water_vapor_cm * air_mass);
}

std::string to_string(SkyCategory c) {
    switch (c) {
        case SkyCategory::clear: return "clear";
        case SkyCategory::partly_cloudy: return "partly_cloudy";
        case SkyCategory::overcast: return "overcast";
    }
    return "unknown";
}

SkyState classify_sky(double k_t) {
    require(k_t >= 0.0 && k_t <= 1.0, "classify_sky: clearness index must be in [0, 1]");
    if (k_t > 0.65) return {k_t, SkyCategory::clear, 0.15};
    if (k_t < 0.35) return {k_t, SkyCategory::overcast, 0.95};
    return {k_t, SkyCategory::partly_cloudy, 0.95 - 0.8 * (k_t - 0.35) / 0.3};
}

void SoilingState::validate() const {
    require(mass_mg_cm2 >= 0.0, "SoilingState: mass must be >= 0");
    require(gamma_dust_m2_g >= 0.05 && gamma_dust_m2_g <= 0.15, "SoilingState: gamma_dust must be in [0.05, 0.15]");
    require(clean_transmission >= 0.0 && clean_transmission <= 1.0, "SoilingState: T_0 must be in [0, 1]");
}

double SoilingState::thickness_um() const {
    // mg cm^-2 -> g cm^-2 -> cm of layer -> um
    return mass_mg_cm2 * 1.0e-3 / kDustDensityGPerCm3 * 1.0e4;
}

SoilingState initial_soiling(const SiteClimate& site) {
    SoilingState s{site.initial_dust_mg_cm2, site.gamma_dust_m2_g, site.clean_transmission, 0.0};
    s.validate();
    return s;
}

SoilingState dust_step(const SoilingState& state, const SiteClimate& site, double dt_days) {
    require(dt_days >= 0.0, "dust_step: dt must be >= 0");
    SoilingState next = state;
    next.mass_mg_cm2 += site.dust_deposition_mg_cm2_day * (1.0 - site.cleaning_fraction) * dt_days;
    const double lo = state.day, hi = state.day + dt_days;
    for (const auto& e : site.cleaning_events) {
        const double overlap = std::min(hi, e.end_day) - std::max(lo, e.start_day);
        if (overlap > 0.0) next.mass_mg_cm2 *= std::pow(1.0 - e.wash_fraction_per_day, overlap);
    }
    next.day = hi;
    return next;
}

double dust_transmission(const SoilingState& state) {
    return state.clean_transmission * std::exp(-state.gamma_dust_m2_g * state.mass_mg_cm2 * 10.0);
}

double temperature_profile(const SiteClimate& site, double day, double hour) {
    return site.temperature_mean_k +
           site.temperature_annual_amplitude_k *
               std::cos(2.0 * std::numbers::pi * (day - site.temperature_peak_day) / 365.0) +
           site.temperature_diurnal_amplitude_k *
               std::cos(2.0 * std::numbers::pi * (hour - site.temperature_peak_hour) / 24.0);
}

double humidity_profile(const SiteClimate& site, double day) {
    return std::clamp(
        site.humidity_mean + site.humidity_amplitude * std::cos(2.0 * std::numbers::pi * (day - site.humidity_peak_day) / 365.0),
        0.0, 1.0);
}

namespace {

/// Exciton trap responses on a temperature grid, linearly interpolated.
class ResponseTable {
public:
    ResponseTable(const OptimizationContext& ctx, double lo, double hi, double step) {
        require(step > 0.0, "annual_simulation: temperature_step_k must be > 0");
        const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
            OptimizationContext c = ctx;
            c.bath = ctx.bath.with_temperature(t);
            temps_.push_back(t);
            responses_.push_back(DesignEvaluator(std::move(c)).exciton_response());
        }
    }

    Eigen::VectorXd at(double t) const {
        if (temps_.front() == temps_.back() || t <= temps_.front()) return responses_.front();
        if (t >= temps_.back()) return responses_.back();
        const auto it = std::upper_bound(temps_.begin(), temps_.end(), t);
        const auto i = static_cast<std::size_t>(it - temps_.begin());
        const double w = (t - temps_[i - 1]) / (temps_[i] - temps_[i - 1]);
        return (1.0 - w) * responses_[i - 1] + w * responses_[i];
    }

private:
    std::vector<double> temps_;
    std::vector<Eigen::VectorXd> responses_;
};

struct DayMeans {
    double temp = 0, humidity = 0, dust = 0, rel_pce = 0, rel_etr = 0, pce = 0;
    int n = 0;
};

}  // namespace

DegradationLedger annual_simulation(const SiteClimate& site, const TransmissionProfile& design,
                                    const OptimizationContext& context, const AnnualOptions& options) {
    site.validate();
    design.validate();
    require(options.days >= 1 && options.days <= 366, "annual_simulation: days must be in [1, 366]");

    const double t_ref = context.bath.temperature();
    double t_lo = t_ref, t_hi = t_ref;
    if (options.weather_variation) {
        const double swing = site.temperature_annual_amplitude_k + site.temperature_diurnal_amplitude_k;
        t_lo = std::min(t_lo, site.temperature_mean_k - swing);
        t_hi = std::max(t_hi, site.temperature_mean_k + swing);
    } else {
        t_lo = std::min(t_lo, site.temperature_mean_k);
        t_hi = std::max(t_hi, site.temperature_mean_k);
    }
    const ResponseTable response(context, t_lo, t_hi, options.temperature_step_k);

    const auto& wl = context.solar.wavelengths();
    const auto& irr = context.solar.irradiance();
    const auto& h2o = default_water_vapor_table();
    // Total optical depth per unit air mass; the AM1.5G table is rescaled from
    // its own air mass to the hourly one.
    std::vector<double> tau(wl.size());
    for (std::size_t i = 0; i < wl.size(); ++i)
        tau[i] = aerosol_optical_depth(wl[i], site) + h2o(wl[i]) * site.water_vapor_cm;

    const double ref_pce = pce(design, context.solar, context.pv);
    const double ref_etr = pumping_rates(filtered_spectrum(design, context.solar), context.system, context.pumping)
                               .dot(response.at(t_ref)) /
                           context.solar.integral();
    require(ref_pce > 0.0 && ref_etr > 0.0, "annual_simulation: design yields no reference PCE or ETR");

    DegradationLedger ledger;
    ledger.site = site.name;
    ledger.seed = options.seed;
    SoilingState soil = initial_soiling(site);
    if (!options.dust) soil.mass_mg_cm2 = 0.0;

    std::vector<DayMeans> days(static_cast<std::size_t>(options.days));
    std::vector<double> scaled(wl.size());
    for (int d = 0; d < options.days; ++d) {
        std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(d), 0, 0));
        const double kt = std::clamp(site.clearness_mean + std::uniform_real_distribution<double>(-0.2, 0.2)(rng), 0.0, 1.0);
        ledger.daily_sky.push_back(classify_sky(kt));
        for (int h = 0; h < 24; ++h) {
            const double am = options.weather_variation
                                  ? sun_geometry(site.latitude_deg, d, 15.0 * (h - 12)).air_mass
                                  : kReferenceAirMass;
            if (am != kNoSun) {
                const double temp = options.weather_variation ? temperature_profile(site, d, h) : site.temperature_mean_k;
                const double hum = options.weather_variation ? humidity_profile(site, d) : site.humidity_mean;
                for (std::size_t i = 0; i < wl.size(); ++i)
                    scaled[i] = irr[i] * std::exp(-tau[i] * (am - kReferenceAirMass));
                const SolarSpectrum sun(wl, scaled);
                const double dust = options.dust ? dust_transmission(soil) : soil.clean_transmission;
                const double p = dust * pce(design, sun, context.pv);
                const double e = dust *
                                 pumping_rates(filtered_spectrum(design, sun), context.system, context.pumping)
                                     .dot(response.at(temp)) /
                                 sun.integral();
                LedgerRow row{d, h, temp, hum, soil.thickness_um(), p / ref_pce, e / ref_etr, p, am};
                auto& m = days[static_cast<std::size_t>(d)];
                m.temp += row.temp_k;
                m.humidity += row.humidity;
                m.dust += row.dust_um;
                m.rel_pce += row.rel_pce;
                m.rel_etr += row.rel_etr;
                m.pce += row.pce;
                ++m.n;
                ledger.rows.push_back(row);
            }
            if (options.dust) soil = dust_step(soil, site, 1.0 / 24.0);
        }
    }

    auto mean_of = [&](int d) {
        DayMeans m = days[static_cast<std::size_t>(d)];
        if (m.n == 0) throw std::runtime_error("annual_simulation: no daylight on day " + std::to_string(d));
        const double n = m.n;
        return DayMeans{m.temp / n, m.humidity / n, m.dust / n, m.rel_pce / n, m.rel_etr / n, m.pce / n, m.n};
    };
    const int last = options.days - 1;
    const int marks[] = {0, 91, 182, 273, 364};
    const char* labels[] = {"Day 0", "Q1", "Q2", "Q3", "Q4"};
    for (int k = 0; k < 5; ++k) {
        const int d = std::min(marks[k], last);
        if (k > 0 && d == std::min(marks[k - 1], last)) break;
        const auto m = mean_of(d);
        ledger.summary.push_back({labels[k], d, m.temp, m.humidity, m.dust, m.rel_pce, m.rel_etr, m.pce,
                                  ledger.daily_sky[static_cast<std::size_t>(d)].category});
    }
    const auto first = mean_of(0), end = mean_of(last);
    ledger.pce_degradation_pct = 100.0 * (first.rel_pce - end.rel_pce) / first.rel_pce;
    ledger.etr_degradation_pct = 100.0 * (first.rel_etr - end.rel_etr) / first.rel_etr;
    return ledger;
}

std::string DegradationLedger::csv() const {
    std::string out = "day,hour,temp_K,humidity,dust_um,rel_pce,rel_etr\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.3f,%.4f,%.5f,%.8f,%.8f\n", r.day, r.hour, r.temp_k, r.humidity,
                      r.dust_um, r.rel_pce, r.rel_etr);
        out += buf;
    }
    return out;
}

std::string DegradationLedger::summary_json() const {
    nlohmann::ordered_json j;
    j["site"] = site;
    j["seed"] = seed;
    j["hourly_rows"] = rows.size();
    j["annual_degradation_pct"] = {{"pce", pce_degradation_pct}, {"etr", etr_degradation_pct}};
    j["summary"] = nlohmann::ordered_json::array();
    for (const auto& s : summary)
        j["summary"].push_back({{"label", s.label},
                                {"day", s.day},
                                {"temp_K", s.temp_k},
                                {"humidity", s.humidity},
                                {"dust_um", s.dust_um},
                                {"rel_pce", s.rel_pce},
                                {"rel_etr", s.rel_etr},
                                {"pce", s.pce},
                                {"sky", to_string(s.sky)}});
    int counts[3] = {0, 0, 0};
    for (const auto& s : daily_sky) ++counts[static_cast<int>(s.category)];
    j["sky_days"] = {{"clear", counts[0]}, {"partly_cloudy", counts[1]}, {"overcast", counts[2]}};
    const ReferenceYear ref;
    j["reference"] = {{"day0_pce", ref.day0_pce}, {"day0_etr", ref.day0_etr}, {"degradation_pct", ref.degradation_pct}};
    return j.dump(2) + "\n";
}

}  // namespace specbath
