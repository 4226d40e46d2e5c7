#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "specbath/illumination.hpp"
#include "specbath/io.hpp"
#include "specbath/units.hpp"

using namespace specbath;

namespace {

SolarSpectrum flat_spectrum(double value, double lo = 280.0, double hi = 4000.0, double step = 0.1) {
    std::vector<double> w, e;
    for (double x = lo; x <= hi + 1e-9; x += step) {
        w.push_back(x);
        e.push_back(value);
    }
    return SolarSpectrum(w, e);
}

TransmissionProfile single_band(double peak, double center, double fwhm) { return {peak, {{center, fwhm, 1.0}}}; }

// Hand-rolled trapezoid over the raw file rows, independent of SolarSpectrum.
std::pair<double, double> raw_file_integrals() {
    std::ifstream in(std::string(SPECBATH_DATA_DIR) + "/am15g_astm_g173.csv");
    std::string line;
    double total = 0.0, par = 0.0, pw = -1.0, pe = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'w') continue;
        const auto comma = line.find(',');
        const double w = std::stod(line.substr(0, comma)), e = std::stod(line.substr(comma + 1));
        if (pw > 0.0) {
            total += 0.5 * (w - pw) * (e + pe);
            if (pw >= 400.0 && w <= 700.0) par += 0.5 * (w - pw) * (e + pe);
        }
        pw = w;
        pe = e;
    }
    return {total, par};
}

}  // namespace

TEST_CASE("bundled AM1.5G spectrum") {
    const auto s = default_solar_spectrum();
    CHECK(s.size() == 2002);
    CHECK(s.wavelengths().front() == 280.0);
    CHECK(s.wavelengths().back() == 4000.0);
    CHECK(std::abs(s.integral() - 1000.0) <= 10.0);
    const auto [total, par] = raw_file_integrals();
    CHECK(s.integral() == doctest::Approx(total).epsilon(1e-12));
    CHECK(par_fraction(s) == doctest::Approx(par / total).epsilon(1e-12));
    // Frozen from the tabulated data: the 400-700 nm band carries 429.83 W m^-2.
    CHECK(s.band_integral(400.0, 700.0) == doctest::Approx(429.8311).epsilon(1e-6));
}

TEST_CASE("spectrum loading rejects malformed input") {
    std::istringstream desc("wavelength_nm,irradiance_w_m2_nm\n500,1\n400,1\n");
    CHECK_THROWS_AS(load_solar_spectrum(desc), DataError);
    std::istringstream dup("500,1\n500,2\n600,1\n");
    CHECK_THROWS_AS(load_solar_spectrum(dup), DataError);
    std::istringstream neg("500,1\n600,-0.1\n");
    CHECK_THROWS_AS(load_solar_spectrum(neg), DataError);
    std::istringstream junk("500,1\n600,abc\n");
    try {
        load_solar_spectrum(junk);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream cols("500,1,2\n");
    CHECK_THROWS_AS(load_solar_spectrum(cols), DataError);
    std::istringstream range("200,1\n300,1\n");
    CHECK_THROWS_AS(load_solar_spectrum(range), DataError);
    std::istringstream ok("# comment\n\n500,1\n600,3\n");
    CHECK(load_solar_spectrum(ok).integral() == doctest::Approx(200.0));
    CHECK_THROWS_AS(load_solar_spectrum(std::filesystem::path("/nonexistent/spectrum.csv")), DataError);
}

TEST_CASE("transmission profile") {
    const auto p = single_band(0.7, 800.0, 80.0);
    CHECK(transmission_eval(800.0, p) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(std::abs(transmission_eval(840.0, p) - 0.35) < 1e-6);
    CHECK(std::abs(transmission_eval(760.0, p) - 0.35) < 1e-6);
    CHECK(p.bands[0].sigma_nm() == doctest::Approx(80.0 / 2.3548200450309493).epsilon(1e-14));

    // 820 nm band contributes 0.35 exp(-70^2 / 2 sigma^2) at 750 nm.
    const auto dual = resonant_dual_band_profile(0.7, 80.0);
    CHECK(transmission_eval(750.0, dual) == doctest::Approx(0.3918951435305626).epsilon(1e-12));

    CHECK_THROWS_AS(transmission_eval(0.0, p), std::invalid_argument);
    TransmissionProfile bad{0.7, {{700.0, 80.0, 0.6}, {800.0, 80.0, 0.6}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {1.2, {{700.0, 80.0, 1.0}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    SUBCASE("stays in [0, 1] for random valid profiles") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 2000; ++trial) {
            const double w = u(rng);
            TransmissionProfile r{u(rng), {{380 + 520 * u(rng), 50 + 150 * u(rng), w}, {380 + 520 * u(rng), 50 + 150 * u(rng), 1 - w}}};
            r.validate();
            for (double l = 280.0; l <= 1200.0; l += 7.3) {
                const double t = r(l);
                REQUIRE(t >= 0.0);
                REQUIRE(t <= 1.0);
            }
        }
    }
    SUBCASE("json round trip") {
        const auto back = TransmissionProfile::from_json(dual.to_json());
        REQUIRE(back.bands.size() == 2);
        CHECK(back.peak == dual.peak);
        CHECK(back.bands[1].center_nm == 820.0);
        CHECK_THROWS_AS(TransmissionProfile::from_json("{\"peak\": 0.5}"), DataError);
    }
}

TEST_CASE("filtered spectrum") {
    const auto s = default_solar_spectrum();
    const auto all = filtered_spectrum(single_band(1.0, 800.0, 1e9), s);
    CHECK(all.integral() == doctest::Approx(s.integral()).epsilon(1e-9));
    const auto none = filtered_spectrum(single_band(0.0, 800.0, 100.0), s);
    CHECK(none.integral() == 0.0);
    const auto dual = resonant_dual_band_profile();
    const auto f = filtered_spectrum(dual, s);
    for (std::size_t k = 0; k < s.size(); k += 37)
        CHECK(f.irradiance()[k] == transmission_eval(s.wavelengths()[k], dual) * s.irradiance()[k]);
    CHECK(f.integral() < s.integral());
}

TEST_CASE("power conversion efficiency") {
    const auto s = default_solar_spectrum();
    const auto flat20 = PVEfficiencyCurve({280.0, 4000.0}, {0.2, 0.2});
    CHECK(pce(single_band(0.0, 800.0, 100.0), s, flat20) == doctest::Approx(0.20).epsilon(1e-12));
    CHECK(pce(single_band(1.0, 800.0, 1e12), s, flat20) == doctest::Approx(0.0).epsilon(1e-12));
    const TransmissionProfile half = single_band(0.5, 800.0, 1e12);
    CHECK(pce(half, s, flat20) == doctest::Approx(0.10).epsilon(1e-9));
    // Integration runs on whichever grid is finer.
    const auto fine_pv = flat_pv_curve(0.3, 300.0, 900.0);
    const auto opaque = single_band(0.0, 800.0, 100.0);
    CHECK(pce(opaque, flat_spectrum(1.0, 280.0, 4000.0, 10.0), fine_pv) ==
          doctest::Approx(0.3 * 610.0 / 3720.0).epsilon(1e-12));
    CHECK(pce(opaque, SolarSpectrum({280.0, 4000.0}, {1.0, 1.0}), fine_pv) ==
          doctest::Approx(0.3 * 600.5 / 3720.0).epsilon(1e-12));
    const auto gap = PVEfficiencyCurve({300.0, 1000.0}, {0.2, 0.2});
    CHECK_THROWS_AS(pce(half, s, gap), std::invalid_argument);
    CHECK_THROWS_AS(PVEfficiencyCurve({300.0, 1000.0}, {0.2, 1.2}), std::invalid_argument);

    SUBCASE("default curve and the full-absorption bound") {
        const auto pv = default_pv_curve();
        CHECK(pv.at(600.0) == kDefaultPvEfficiency);
        CHECK(pv.at(1000.0) == 0.0);
        const double full = pce(single_band(0.0, 800.0, 100.0), s, pv);
        CHECK(full > 0.15);
        CHECK(full < 0.30);
    }
    SUBCASE("PCE and transmitted PAR move oppositely with peak transmission") {
        double last_pce = 1.0, last_par = -1.0;
        for (int k = 1; k <= 9; ++k) {
            const auto p = resonant_dual_band_profile(0.1 * k);
            const double eff = pce(p, s, default_pv_curve());
            const double par = filtered_spectrum(p, s).band_integral(400, 700) / s.band_integral(400, 700);
            CHECK(eff < last_pce);
            CHECK(par > last_par);
            last_pce = eff;
            last_par = par;
        }
    }
}

TEST_CASE("PAR fraction") {
    CHECK(par_fraction(flat_spectrum(1.0, 450.0, 650.0)) == doctest::Approx(1.0));
    CHECK(par_fraction(SolarSpectrum({750.0, 800.0, 900.0}, {1.0, 2.0, 1.0})) == 0.0);
    CHECK(par_fraction(flat_spectrum(1.0, 300.0, 900.0, 1.0)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(par_fraction(flat_spectrum(0.0, 300.0, 400.0)), std::invalid_argument);
}

TEST_CASE("pumping rates") {
    const auto fmo = build_fmo_system();
    const auto model = default_pumping_model(fmo);
    REQUIRE(model.lineshapes.size() == 7);

    CHECK(pumping_rates(flat_spectrum(0.0), fmo, model).isZero());

    const auto flat = pumping_rates(flat_spectrum(2.0), fmo, model);
    for (int k = 0; k < 7; ++k) CHECK(flat(k) == doctest::Approx(2.0 * model.scale).epsilon(1e-9));

    SUBCASE("narrow filter at 806 nm favours the site-1 exciton") {
        // Analytic Gaussian overlap on a flat unit spectrum.
        const double sf = 3.0;
        const TransmissionProfile filt = single_band(1.0, 806.0, sf * 2.3548200450309493);
        const auto rates = pumping_rates(filtered_spectrum(filt, flat_spectrum(1.0)), fmo, model);
        const auto basis = fmo.exciton_basis();
        Eigen::Index site1_exciton = 0;
        basis.vectors.row(0).cwiseAbs().maxCoeff(&site1_exciton);
        Eigen::Index top = 0;
        rates.maxCoeff(&top);
        CHECK(top == site1_exciton);
        for (int k = 0; k < 7; ++k) {
            const auto& l = model.lineshapes[k];
            const double v = sf * sf + l.width_nm * l.width_nm;
            const double oracle =
                model.scale * sf / std::sqrt(v) * std::exp(-std::pow(806.0 - l.center_nm, 2) / (2.0 * v));
            CHECK(rates(k) == doctest::Approx(oracle).epsilon(1e-6));
        }
    }
    SUBCASE("linear in the spectrum") {
        const auto s1 = default_solar_spectrum();
        const auto s2 = filtered_spectrum(resonant_dual_band_profile(), s1);
        std::vector<double> mix(s1.size());
        for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = 0.3 * s1.irradiance()[k] + 1.7 * s2.irradiance()[k];
        const auto r = pumping_rates(SolarSpectrum(s1.wavelengths(), mix), fmo, model);
        const auto expected = 0.3 * pumping_rates(s1, fmo, model) + 1.7 * pumping_rates(s2, fmo, model);
        CHECK((r - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("invalid models") {
        PumpingModel m = model;
        m.lineshapes.pop_back();
        CHECK_THROWS_AS(pumping_rates(flat_spectrum(1.0), fmo, m), std::invalid_argument);
        m = model;
        m.lineshapes[0].width_nm = 0.0;
        CHECK_THROWS_AS(pumping_rates(flat_spectrum(1.0), fmo, m), std::invalid_argument);
    }
}

TEST_CASE("resonance detuning diagnostic") {
    const auto fmo = build_fmo_system();
    const auto bath = default_fmo_bath();
    const auto matches = resonance_detuning(resonant_dual_band_profile(), fmo, bath);
    REQUIRE(matches.size() == 2);
    const auto basis = fmo.exciton_basis();
    for (const auto& m : matches) {
        CHECK(m.filter_cm == doctest::Approx(units::wavenumber_from_wavelength_nm(m.band == 0 ? 750.0 : 820.0)));
        const double offset = std::abs(m.filter_cm - basis.energies(static_cast<Eigen::Index>(m.exciton)));
        const double target = bath.vibronic_modes()[m.mode].omega + m.sign * std::abs(fmo.couplings()(m.site_n, m.site_m));
        CHECK(m.target_offset_cm == doctest::Approx(target));
        CHECK(m.detuning_cm == doctest::Approx(std::abs(offset - target)));
        CHECK(m.detuning_cm >= 0.0);
    }
}
