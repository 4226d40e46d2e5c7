#include "specbath/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

#include "specbath/io.hpp"
#include "specbath/units.hpp"

namespace specbath {

namespace {

constexpr double kMinWavelength = 280.0;
constexpr double kMaxWavelength = 4000.0;

double interp(const std::vector<double>& x, const std::vector<double>& y, double v) {
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t k = static_cast<std::size_t>(it - x.begin());
    const double f = (v - x[k - 1]) / (x[k] - x[k - 1]);
    return y[k - 1] + f * (y[k] - y[k - 1]);
}

template <class F>
double trapezoid(const std::vector<double>& x, F&& f) {
    double sum = 0.0;
    double prev = f(x[0], 0);
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double cur = f(x[k], k);
        sum += 0.5 * (x[k] - x[k - 1]) * (prev + cur);
        prev = cur;
    }
    return sum;
}

void check_grid(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
    if (x.size() != y.size()) throw std::invalid_argument(std::string(what) + ": length mismatch");
    if (x.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least two samples");
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k]) || !std::isfinite(y[k]))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
        if (k > 0 && !(x[k] > x[k - 1])) {
            throw std::invalid_argument(std::string(what) + (x[k] == x[k - 1] ? ": duplicate wavelength "
                                                                             : ": wavelengths not increasing at ") +
                                        std::to_string(x[k]));
        }
    }
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

}  // namespace

SolarSpectrum::SolarSpectrum(std::vector<double> wavelengths, std::vector<double> irradiance)
    : wavelengths_(std::move(wavelengths)), irradiance_(std::move(irradiance)) {
    check_grid(wavelengths_, irradiance_, "SolarSpectrum");
    if (wavelengths_.front() < kMinWavelength || wavelengths_.back() > kMaxWavelength)
        throw std::invalid_argument("SolarSpectrum: wavelengths must lie in [280, 4000] nm");
    for (double v : irradiance_)
        if (v < 0.0) throw std::invalid_argument("SolarSpectrum: negative irradiance");
}

double SolarSpectrum::integral() const {
    return trapezoid(wavelengths_, [&](double, std::size_t k) { return irradiance_[k]; });
}

double SolarSpectrum::band_integral(double lo_nm, double hi_nm) const {
    if (hi_nm <= lo_nm) return 0.0;
    std::vector<double> x{std::max(lo_nm, wavelengths_.front())};
    for (double w : wavelengths_)
        if (w > x.front() && w < hi_nm) x.push_back(w);
    const double end = std::min(hi_nm, wavelengths_.back());
    if (end <= x.front()) return 0.0;
    x.push_back(end);
    return trapezoid(x, [&](double w, std::size_t) { return at(w); });
}

double SolarSpectrum::at(double lambda_nm) const {
    if (lambda_nm < wavelengths_.front() || lambda_nm > wavelengths_.back()) return 0.0;
    return interp(wavelengths_, irradiance_, lambda_nm);
}

SolarSpectrum load_solar_spectrum(std::istream& in) {
    const auto rows = read_numeric_csv(in, 2);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (!(rows[k][0] > rows[k - 1][0]))
            throw DataError("wavelengths must be strictly increasing (row " + std::to_string(k + 1) + ")");
    }
    try {
        return SolarSpectrum(column(rows, 0), column(rows, 1));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

SolarSpectrum load_solar_spectrum(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return load_solar_spectrum(in);
}

std::filesystem::path data_directory() {
    if (const char* env = std::getenv("SPECBATH_DATA_DIR"); env && *env) return env;
    return SPECBATH_DATA_DIR;
}

SolarSpectrum default_solar_spectrum() { return load_solar_spectrum(data_directory() / "am15g_astm_g173.csv"); }

double TransmissionBand::sigma_nm() const { return fwhm_nm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

void TransmissionProfile::validate() const {
    if (!(peak >= 0.0 && peak <= 1.0)) throw std::invalid_argument("TransmissionProfile: peak must be in [0, 1]");
    if (bands.empty()) throw std::invalid_argument("TransmissionProfile: at least one band required");
    double total = 0.0;
    for (const auto& b : bands) {
        if (!(b.fwhm_nm > 0.0) || !std::isfinite(b.center_nm))
            throw std::invalid_argument("TransmissionProfile: band needs finite centre and fwhm > 0");
        if (!(b.weight >= 0.0)) throw std::invalid_argument("TransmissionProfile: weights must be non-negative");
        total += b.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("TransmissionProfile: weights must sum to 1");
}

double TransmissionProfile::operator()(double lambda_nm) const {
    double sum = 0.0;
    for (const auto& b : bands) {
        const double s = b.sigma_nm();
        const double d = lambda_nm - b.center_nm;
        sum += b.weight * std::exp(-d * d / (2.0 * s * s));
    }
    return std::clamp(peak * sum, 0.0, 1.0);
}

std::string TransmissionProfile::to_json() const {
    nlohmann::json j;
    j["peak"] = peak;
    j["bands"] = nlohmann::json::array();
    for (const auto& b : bands) j["bands"].push_back({{"center_nm", b.center_nm}, {"fwhm_nm", b.fwhm_nm}, {"weight", b.weight}});
    return j.dump(2);
}

TransmissionProfile TransmissionProfile::from_json(const std::string& text) {
    TransmissionProfile p;
    try {
        const auto j = nlohmann::json::parse(text);
        p.peak = j.at("peak").get<double>();
        for (const auto& b : j.at("bands"))
            p.bands.push_back({b.at("center_nm").get<double>(), b.at("fwhm_nm").get<double>(), b.at("weight").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("transmission profile: ") + e.what());
    }
    p.validate();
    return p;
}

double transmission_eval(double lambda_nm, const TransmissionProfile& profile) {
    if (!(lambda_nm > 0.0)) throw std::invalid_argument("transmission_eval: wavelength must be positive");
    return profile(lambda_nm);
}

TransmissionProfile resonant_dual_band_profile(double peak, double fwhm_nm) {
    return {peak, {{750.0, fwhm_nm, 0.5}, {820.0, fwhm_nm, 0.5}}};
}

SolarSpectrum filtered_spectrum(const TransmissionProfile& profile, const SolarSpectrum& solar) {
    std::vector<double> out(solar.size());
    for (std::size_t k = 0; k < solar.size(); ++k) out[k] = profile(solar.wavelengths()[k]) * solar.irradiance()[k];
    return SolarSpectrum(solar.wavelengths(), std::move(out));
}

PVEfficiencyCurve::PVEfficiencyCurve(std::vector<double> wavelengths, std::vector<double> efficiency)
    : wavelengths_(std::move(wavelengths)), efficiency_(std::move(efficiency)) {
    check_grid(wavelengths_, efficiency_, "PVEfficiencyCurve");
    for (double e : efficiency_)
        if (e < 0.0 || e > 1.0) throw std::invalid_argument("PVEfficiencyCurve: efficiency must be in [0, 1]");
}

double PVEfficiencyCurve::at(double lambda_nm) const {
    if (lambda_nm < wavelengths_.front() || lambda_nm > wavelengths_.back())
        throw std::out_of_range("PVEfficiencyCurve: " + std::to_string(lambda_nm) + " nm outside the tabulated range");
    return interp(wavelengths_, efficiency_, lambda_nm);
}

bool PVEfficiencyCurve::covers(double lo_nm, double hi_nm) const {
    return wavelengths_.front() <= lo_nm && wavelengths_.back() >= hi_nm;
}

PVEfficiencyCurve flat_pv_curve(double value, double lo_nm, double hi_nm) {
    if (!(lo_nm > kMinWavelength + 0.5 && hi_nm < kMaxWavelength - 0.5 && lo_nm < hi_nm))
        throw std::invalid_argument("flat_pv_curve: window must lie inside (280.5, 3999.5) nm");
    return PVEfficiencyCurve({kMinWavelength, lo_nm - 0.5, lo_nm, hi_nm, hi_nm + 0.5, kMaxWavelength},
                             {0.0, 0.0, value, value, 0.0, 0.0});
}

PVEfficiencyCurve default_pv_curve() { return flat_pv_curve(kDefaultPvEfficiency); }

PVEfficiencyCurve load_pv_curve(std::istream& in) {
    const auto rows = read_numeric_csv(in, 2);
    try {
        return PVEfficiencyCurve(column(rows, 0), column(rows, 1));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

PVEfficiencyCurve load_pv_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return load_pv_curve(in);
}

double pce(const TransmissionProfile& profile, const SolarSpectrum& solar, const PVEfficiencyCurve& pv) {
    const double lo = solar.wavelengths().front(), hi = solar.wavelengths().back();
    if (!pv.covers(lo, hi)) throw std::invalid_argument("pce: PV efficiency curve does not cover the solar grid");
    const double total = solar.integral();
    if (!(total > 0.0)) throw std::invalid_argument("pce: solar spectrum integrates to zero");
    // Integrate on the finer of the two grids over the solar range.
    std::size_t pv_inside = 0;
    for (double w : pv.wavelengths()) pv_inside += (w >= lo && w <= hi);
    const auto absorbed = [&](double w) { return (1.0 - profile(w)) * solar.at(w) * pv.at(w); };
    double num = 0.0;
    if (pv_inside <= solar.size()) {
        num = trapezoid(solar.wavelengths(), [&](double w, std::size_t) { return absorbed(w); });
    } else {
        std::vector<double> grid{lo};
        for (double w : pv.wavelengths())
            if (w > lo && w < hi) grid.push_back(w);
        grid.push_back(hi);
        num = trapezoid(grid, [&](double w, std::size_t) { return absorbed(w); });
    }
    return num / total;
}

double par_fraction(const SolarSpectrum& spectrum) {
    const double total = spectrum.integral();
    if (!(total > 0.0)) throw std::invalid_argument("par_fraction: spectrum integrates to zero");
    return spectrum.band_integral(kParLowNm, kParHighNm) / total;
}

void PumpingModel::validate(std::size_t n_excitons) const {
    if (lineshapes.size() != n_excitons)
        throw std::invalid_argument("PumpingModel: need one lineshape per exciton state");
    for (const auto& l : lineshapes) {
        if (!(l.width_nm > 0.0)) throw std::invalid_argument("PumpingModel: lineshape widths must be positive");
        if (!(l.cross_section >= 0.0)) throw std::invalid_argument("PumpingModel: cross sections must be >= 0");
    }
    if (!(scale >= 0.0)) throw std::invalid_argument("PumpingModel: scale must be >= 0");
}

PumpingModel default_pumping_model(const ExcitonSystem& system, double width_nm) {
    PumpingModel m;
    const auto basis = system.exciton_basis();
    for (Eigen::Index k = 0; k < basis.energies.size(); ++k)
        m.lineshapes.push_back({units::wavelength_nm_from_wavenumber(basis.energies(k)), width_nm, 1.0});
    return m;
}

Eigen::VectorXd pumping_rates(const SolarSpectrum& plant, const ExcitonSystem& system, const PumpingModel& model) {
    model.validate(system.n_sites());
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Eigen::VectorXd rates(static_cast<Eigen::Index>(model.lineshapes.size()));
    for (std::size_t n = 0; n < model.lineshapes.size(); ++n) {
        const auto& l = model.lineshapes[n];
        const double overlap = trapezoid(plant.wavelengths(), [&](double w, std::size_t k) {
            const double z = (w - l.center_nm) / l.width_nm;
            return l.cross_section * norm / l.width_nm * std::exp(-0.5 * z * z) * plant.irradiance()[k];
        });
        rates(static_cast<Eigen::Index>(n)) = model.scale * overlap;
    }
    return rates;
}

std::vector<ResonanceMatch> resonance_detuning(const TransmissionProfile& profile, const ExcitonSystem& system,
                                               const BathSpec& bath) {
    const auto basis = system.exciton_basis();
    const auto& modes = bath.vibronic_modes();
    const auto& j = system.couplings();
    std::vector<ResonanceMatch> out;
    for (std::size_t b = 0; b < profile.bands.size(); ++b) {
        const double nu = units::wavenumber_from_wavelength_nm(profile.bands[b].center_nm);
        ResonanceMatch best{b, nu, 0, 0, 0, 0, 0, 0.0, std::numeric_limits<double>::infinity()};
        for (Eigen::Index mu = 0; mu < basis.energies.size(); ++mu) {
            const double offset = std::abs(nu - basis.energies(mu));
            for (std::size_t k = 0; k < modes.size(); ++k) {
                for (Eigen::Index n = 0; n < j.rows(); ++n) {
                    for (Eigen::Index m = n + 1; m < j.cols(); ++m) {
                        if (j(n, m) == 0.0) continue;
                        for (int sign : {+1, -1}) {
                            const double target = modes[k].omega + sign * std::abs(j(n, m));
                            const double det = std::abs(offset - target);
                            if (det < best.detuning_cm) {
                                best = {b,
                                        nu,
                                        static_cast<std::size_t>(mu),
                                        k,
                                        static_cast<std::size_t>(n),
                                        static_cast<std::size_t>(m),
                                        sign,
                                        target,
                                        det};
                            }
                        }
                    }
                }
            }
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace specbath
