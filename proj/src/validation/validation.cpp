#include "specbath/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "specbath/illumination.hpp"
#include "specbath/metrics.hpp"
#include "specbath/optimizer.hpp"

namespace specbath {

namespace {

struct Spec {
    const char* name;
    TestCategory category;
};

const Spec kSpecs[12] = {
    {"HEOM benchmark", TestCategory::convergence},      {"Matsubara cutoff", TestCategory::convergence},
    {"Time step", TestCategory::convergence},           {"Hierarchy truncation", TestCategory::convergence},
    {"Trace preservation", TestCategory::physical},     {"Positivity", TestCategory::physical},
    {"Energy conservation", TestCategory::physical},    {"Detailed balance", TestCategory::physical},
    {"Temperature (+/-10 K)", TestCategory::robustness}, {"Static disorder", TestCategory::robustness},
    {"Bath parameters", TestCategory::robustness},      {"Markovian limit", TestCategory::robustness},
};

std::string pct(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g%%", 100.0 * x);
    return buf;
}

std::string num(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

BathSpec drude_only(const BathSpec& b) { return BathSpec(b.drude_lambda(), b.drude_gamma(), {}, b.temperature()); }

/// Runs the tests and caches trajectories that several of them share.
class Suite {
public:
    explicit Suite(const ValidationConfig& cfg)
        : cfg_(cfg), fmo_(build_fmo_system()), bath_(default_fmo_bath(295.0)) {
        if (!cfg_.propagator)
            cfg_.propagator = [](const ExcitonSystem& s, const BathSpec& b, const DensityMatrix& r, double t,
                                 const HierarchyConfig& h, Method m) { return propagate(s, b, r, t, h, m); };
    }

    TestResult run(int index) {
        TestResult r;
        r.index = index;
        r.name = kSpecs[index - 1].name;
        r.category = kSpecs[index - 1].category;
        if (!cfg_.selected.count(index)) {
            r.skipped = true;
            r.detail = "not selected";
            return r;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
            switch (index) {
                case 1: heom_benchmark(r); break;
                case 2: matsubara(r); break;
                case 3: timestep(r); break;
                case 4: truncation(r); break;
                case 5: trace(r); break;
                case 6: positivity(r); break;
                case 7: energy(r); break;
                case 8: detailed_balance(r); break;
                case 9: temperature(r); break;
                case 10: disorder(r); break;
                case 11: bath_parameters(r); break;
                case 12: markov(r); break;
                default: throw std::logic_error("unknown test");
            }
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

private:
    const ValidationThresholds& th() const { return cfg_.thresholds; }

    Trajectory run_heom(const ExcitonSystem& s, const BathSpec& b, const DensityMatrix& rho, double t,
                        const HierarchyConfig& h) {
        auto traj = cfg_.propagator(s, b, rho, t, h, Method::heom);
        pool_.push_back(traj);
        return traj;
    }

    DensityMatrix fmo_start() const { return DensityMatrix::site(fmo_.n_sites(), cfg_.initial_site); }

    const Trajectory& baseline() {
        if (!baseline_) baseline_ = run_heom(fmo_, bath_, fmo_start(), cfg_.convergence_window_fs, cfg_.vibronic);
        return *baseline_;
    }

    void less_than(TestResult& r, double measured, double threshold, bool as_percent = true) {
        r.measured = measured;
        r.threshold = threshold;
        r.criterion = "< " + (as_percent ? pct(threshold) : num(threshold));
        r.passed = measured < threshold;
    }

    void heom_benchmark(TestResult& r) {
        // Three sites 100 cm^-1 apart with nearest-neighbour coupling.
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3);
        j(0, 1) = j(1, 0) = 50.0;
        j(1, 2) = j(2, 1) = 50.0;
        const ExcitonSystem s({12000.0, 12100.0, 12200.0}, j, 0);
        const BathSpec b(35.0, 50.0, {}, 295.0);
        HierarchyConfig fast = cfg_.production;
        HierarchyConfig ref = cfg_.production;
        ref.depth = 10;
        ref.truncation_threshold = 1e-14;
        ref.dt = 0.5;
        const auto rho = DensityMatrix::site(3, 2);
        const auto a = run_heom(s, b, rho, cfg_.benchmark_window_fs, fast);
        const auto c = run_heom(s, b, rho, cfg_.benchmark_window_fs, ref);
        less_than(r, max_population_deviation(a, c), th().heom_benchmark);
        r.detail = "depth " + std::to_string(fast.depth) + " vs depth 10 at dt 0.5 fs without truncation";
    }

    void matsubara(TestResult& r) {
        HierarchyConfig h = cfg_.vibronic;
        h.n_matsubara = 10;
        const auto a = run_heom(fmo_, bath_, fmo_start(), cfg_.convergence_window_fs, h);
        less_than(r, max_population_deviation(a, baseline()), th().matsubara_change);
        r.detail = "N_Mat 10 vs " + std::to_string(cfg_.vibronic.n_matsubara);
    }

    void timestep(TestResult& r) {
        HierarchyConfig h = cfg_.vibronic;
        h.dt = 0.5 * cfg_.vibronic.dt;
        const auto a = run_heom(fmo_, bath_, fmo_start(), cfg_.convergence_window_fs, h);
        less_than(r, max_population_deviation(a, baseline()), th().timestep_change);
        r.detail = "dt " + num(h.dt) + " vs " + num(cfg_.vibronic.dt) + " fs";
    }

    void truncation(TestResult& r) {
        HierarchyConfig lo = cfg_.vibronic, hi = cfg_.vibronic;
        lo.truncation_threshold = 1e-7;
        hi.truncation_threshold = 1e-9;
        const auto a = run_heom(fmo_, bath_, fmo_start(), cfg_.convergence_window_fs, lo);
        const auto b = run_heom(fmo_, bath_, fmo_start(), cfg_.convergence_window_fs, hi);
        less_than(r, max_population_deviation(a, b), th().truncation_change);
        r.detail = "threshold 1e-7 vs 1e-9";
    }

    void ensure_pool() {
        if (pool_.empty()) baseline();
    }

    void trace(TestResult& r) {
        ensure_pool();
        double worst = 0.0;
        for (const auto& t : pool_)
            for (const auto& s : t.states()) worst = std::max(worst, std::abs(s.matrix().trace().real() - 1.0));
        r.measured = worst;
        r.threshold = th().trace_deviation;
        r.criterion = "<= " + num(r.threshold);
        r.passed = worst <= r.threshold;
        r.detail = "max |Tr rho - 1| over " + std::to_string(pool_.size()) + " HEOM trajectories";
    }

    void positivity(TestResult& r) {
        ensure_pool();
        double lowest = 1.0;
        for (const auto& t : pool_)
            for (const auto& s : t.states()) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (s.matrix() + s.matrix().adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                lowest = std::min(lowest, es.eigenvalues()(0));
            }
        r.measured = lowest;
        r.threshold = th().min_eigenvalue;
        r.criterion = "> " + num(r.threshold);
        r.passed = lowest > r.threshold;
        r.detail = "min eigenvalue over " + std::to_string(pool_.size()) + " HEOM trajectories";
    }

    void energy(TestResult& r) {
        const BathSpec free(0.0, bath_.drude_gamma(), {}, 295.0);
        const auto t = run_heom(fmo_, free, fmo_start(), cfg_.energy_window_fs, cfg_.vibronic);
        const Eigen::MatrixXcd h = fmo_.hamiltonian().cast<std::complex<double>>();
        const double e0 = (t.states().front().matrix() * h).trace().real();
        double drift = 0.0;
        for (const auto& s : t.states()) drift = std::max(drift, std::abs((s.matrix() * h).trace().real() - e0));
        less_than(r, drift / std::abs(e0), th().energy_drift);
        r.detail = "lambda = 0 over " + num(cfg_.energy_window_fs) + " fs";
    }

    void detailed_balance(TestResult& r) {
        HierarchyConfig h = cfg_.production;
        h.depth = cfg_.boltzmann_depth;
        h.store_interval_fs = 100.0;
        double worst = 0.0;
        std::string detail;
        for (double temp : cfg_.boltzmann_temperatures) {
            const auto t = run_heom(fmo_, drude_only(bath_.with_temperature(temp)), fmo_start(),
                                    cfg_.boltzmann_window_fs, h);
            const auto eq = thermal_state(fmo_, temp);
            double dev = 0.0;
            for (Eigen::Index i = 0; i < eq.dim(); ++i)
                dev = std::max(dev, std::abs(t.states().back().matrix()(i, i).real() - eq.matrix()(i, i).real()));
            worst = std::max(worst, dev);
            detail += (detail.empty() ? "" : ", ") + num(temp) + " K: " + pct(dev);
        }
        less_than(r, worst, th().boltzmann_deviation);
        r.detail = "site populations at " + num(cfg_.boltzmann_window_fs) + " fs vs exp(-H_S/kT), Drude bath; " + detail;
    }

    /// eta = ETR_HEOM / ETR_Redfield - 1 from the open-sky excitation mixture.
    double eta(const ExcitonSystem& s, const BathSpec& b) {
        const auto rates = pumping_rates(solar(), s, default_pumping_model(s));
        const auto rho = exciton_mixture(s, rates);
        ETRConfig e;
        e.t_max_fs = cfg_.etr_window_fs;
        e.trap_site = s.trap_site();
        const auto heom = run_heom(s, b, rho, cfg_.etr_window_fs, cfg_.vibronic);
        const auto red = cfg_.propagator(s, b, rho, cfg_.etr_window_fs, cfg_.vibronic, Method::redfield);
        return quantum_advantage(etr(heom, e).normalized, etr(red, e).normalized);
    }

    double eta_at(double temp) {
        auto it = eta_cache_.find(temp);
        if (it == eta_cache_.end()) it = eta_cache_.emplace(temp, eta(fmo_, bath_.with_temperature(temp))).first;
        return it->second;
    }

    void temperature(TestResult& r) {
        const double ref = eta_at(295.0);
        double worst = 0.0;
        std::string detail = "eta(295 K) = " + num(ref);
        for (double t : cfg_.temperatures) {
            if (t == 295.0) continue;
            const double e = eta_at(t);
            worst = std::max(worst, std::abs(e - ref) / std::abs(ref));
            detail += ", eta(" + num(t) + " K) = " + num(e);
            r.values["eta_" + num(t) + "K"] = e;
        }
        r.values["eta_295K"] = ref;
        less_than(r, worst, th().temperature_variation);
        r.detail = detail;
    }

    void disorder(TestResult& r) {
        std::vector<double> etas;
        for (std::size_t k = 0; k < cfg_.disorder_ensemble; ++k) {
            const auto s = apply_static_disorder(fmo_, cfg_.disorder_sigma, derive_seed(cfg_.seed, 10, k, 0));
            etas.push_back(eta(s, bath_));
        }
        const double mean = std::accumulate(etas.begin(), etas.end(), 0.0) / static_cast<double>(etas.size());
        const auto [lo, hi] = bootstrap_mean_ci(etas, cfg_.bootstrap_samples, derive_seed(cfg_.seed, 10, 1, 1));
        r.measured = lo;
        r.threshold = th().disorder_ci_lower;
        r.criterion = "95% CI lower bound of mean eta > " + num(r.threshold);
        r.passed = std::isfinite(lo) && std::isfinite(hi) && lo > r.threshold;
        const double clean = eta_at(295.0);
        r.values = {{"mean_eta", mean}, {"ci_low", lo}, {"ci_high", hi}, {"eta_disorder_free", clean}};
        r.detail = "n = " + std::to_string(etas.size()) + ", mean eta " + num(mean) + " [" + num(lo) + ", " + num(hi) +
                   "], disorder-free " + num(clean) + " (change " + pct(mean / clean - 1.0) + ")";
    }

    void bath_parameters(TestResult& r) {
        auto peak = [&](const BathSpec& b) {
            auto ctx = default_optimization_context();
            ctx.bath = b;
            const DesignEvaluator ev(std::move(ctx));
            double best = -1.0, at = 0.0;
            for (double c = 380.0; c <= 900.0; c += 0.5) {
                const double e = ev.evaluate(DesignVector{1.0, {{c, 50.0, 1.0}}}).etr;
                if (e > best) best = e, at = c;
            }
            return at;
        };
        const double base = peak(bath_);
        const double v = cfg_.bath_variation;
        double worst = 0.0;
        for (double f : {1.0 - v, 1.0 + v}) {
            std::vector<VibronicMode> modes = bath_.vibronic_modes();
            for (auto& m : modes) m.omega *= f;
            const BathSpec variants[] = {bath_.scaled(f, 1.0), bath_.scaled(1.0, f),
                                         BathSpec(bath_.drude_lambda(), bath_.drude_gamma(), modes, 295.0)};
            for (const auto& b : variants) worst = std::max(worst, std::abs(peak(b) - base));
        }
        r.measured = worst;
        r.threshold = th().bath_peak_shift_nm;
        r.criterion = "< " + num(r.threshold) + " nm";
        r.passed = worst < r.threshold;
        r.detail = "ETR-optimal single-band centre " + num(base) + " nm (Redfield); lambda, gamma, omega_k scaled by " +
                   num(1 - v) + " and " + num(1 + v);
    }

    void markov(TestResult& r) {
        const BathSpec b = drude_only(bath_.with_temperature(cfg_.markov_temperature));
        HierarchyConfig h = cfg_.production;
        h.depth = cfg_.markov_depth;
        h.redfield_secular = false;
        const auto heom = run_heom(fmo_, b, fmo_start(), cfg_.benchmark_window_fs, h);
        const auto red = cfg_.propagator(fmo_, b, fmo_start(), cfg_.benchmark_window_fs, h, Method::redfield);
        less_than(r, max_population_deviation(heom, red), th().markov_deviation);
        ETRConfig e;
        e.t_max_fs = cfg_.benchmark_window_fs;
        e.trap_site = fmo_.trap_site();
        r.values["eta"] = quantum_advantage(etr(heom, e).normalized, etr(red, e).normalized);
        r.detail = "HEOM depth " + std::to_string(h.depth) + " vs full Redfield at " + num(cfg_.markov_temperature) +
                   " K, Drude bath";
    }

    const SolarSpectrum& solar() {
        if (!solar_) solar_ = default_solar_spectrum();
        return *solar_;
    }

    ValidationConfig cfg_;
    ExcitonSystem fmo_;
    BathSpec bath_;
    std::optional<Trajectory> baseline_;
    std::vector<Trajectory> pool_;
    std::map<double, double> eta_cache_;
    std::optional<SolarSpectrum> solar_;
};

}  // namespace

std::string to_string(TestCategory c) {
    switch (c) {
        case TestCategory::convergence: return "convergence";
        case TestCategory::physical: return "physical";
        case TestCategory::robustness: return "robustness";
    }
    return "unknown";
}

const std::vector<std::string>& validation_test_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& s : kSpecs) n.push_back(s.name);
        return n;
    }();
    return names;
}

double max_population_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || a.dim() != b.dim())
        throw std::invalid_argument("max_population_deviation: trajectories differ in shape");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a.times()[k] - b.times()[k]) > 1e-9)
            throw std::invalid_argument("max_population_deviation: time grids differ");
        const auto& x = a.states()[k].matrix();
        const auto& y = b.states()[k].matrix();
        for (Eigen::Index i = 0; i < x.rows(); ++i) worst = std::max(worst, std::abs(x(i, i).real() - y(i, i).real()));
    }
    return worst;
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& samples, std::size_t resamples,
                                            std::uint64_t seed, double level) {
    if (samples.empty() || resamples == 0) throw std::invalid_argument("bootstrap_mean_ci: empty input");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t k = 0; k < samples.size(); ++k) s += samples[pick(rng)];
        m = s / static_cast<double>(samples.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = 0.5 * (1.0 - level);
    auto at = [&](double q) {
        const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1) + 0.5));
        return means[std::min(i, resamples - 1)];
    };
    return {at(tail), at(1.0 - tail)};
}

ValidationReport run_suite(const ValidationConfig& config) {
    Suite suite(config);
    ValidationReport report;
    for (int k = 1; k <= 12; ++k) report.tests.push_back(suite.run(k));
    return report;
}

std::size_t ValidationReport::passed_count() const {
    return static_cast<std::size_t>(std::count_if(tests.begin(), tests.end(), [](const TestResult& t) { return t.passed; }));
}

bool ValidationReport::all_passed() const { return tests.size() == 12 && passed_count() == 12; }

std::string ValidationReport::to_json(bool with_runtime) const {
    nlohmann::ordered_json j;
    j["passed"] = passed_count();
    j["total"] = tests.size();
    j["all_passed"] = all_passed();
    j["tests"] = nlohmann::ordered_json::array();
    for (const auto& t : tests) {
        nlohmann::ordered_json e{{"index", t.index},         {"name", t.name},          {"category", to_string(t.category)},
                                 {"measured", t.measured},   {"threshold", t.threshold}, {"criterion", t.criterion},
                                 {"passed", t.passed},       {"skipped", t.skipped},     {"detail", t.detail}};
        if (!t.values.empty()) e["values"] = t.values;
        if (with_runtime) e["runtime_s"] = t.runtime_s;
        j["tests"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string ValidationReport::to_table(bool with_runtime) const {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-3s %-12s %-22s %-14s %-36s %-6s", "#", "category", "test", "measured",
                  "criterion", "result");
    out += buf;
    out += with_runtime ? "   time_s\n" : "\n";
    for (const auto& t : tests) {
        std::snprintf(buf, sizeof buf, "%-3d %-12s %-22s %-14.6g %-36s %-6s", t.index, to_string(t.category).c_str(),
                      t.name.c_str(), t.measured, t.criterion.c_str(), t.skipped ? "SKIP" : (t.passed ? "PASS" : "FAIL"));
        out += buf;
        if (with_runtime) {
            std::snprintf(buf, sizeof buf, " %8.1f", t.runtime_s);
            out += buf;
        }
        out += '\n';
    }
    std::snprintf(buf, sizeof buf, "overall: %zu/%zu passed\n", passed_count(), tests.size());
    out += buf;
    return out;
}

}  // namespace specbath
