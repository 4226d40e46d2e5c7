#include "specbath/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>

#include "specbath/hash.hpp"
#include "specbath/io.hpp"
#include "specbath/validation.hpp"

#ifndef SPECBATH_VERSION
#define SPECBATH_VERSION "0.0.0"
#endif

namespace specbath::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"simulate", "metrics",  "optimize", "environment",
                                                "ecodesign", "validate", "spectrum"};
    return names;
}

std::string tool_version() { return SPECBATH_VERSION; }

namespace {

// ---------------------------------------------------------------- config

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void allow(const json& j, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

/// Loads referenced files, records them as inputs and swaps the reference in
/// the document for the content hash.
struct Resolver {
    fs::path base;
    std::vector<InputFile>& inputs;

    fs::path locate(const std::string& name) const {
        const fs::path p(name);
        return p.is_absolute() ? p : base / p;
    }

    fs::path file(json& node, const std::string& role) {
        const auto path = locate(node.get<std::string>());
        if (!fs::is_regular_file(path)) throw ConfigError(role + ": file not found: " + path.string());
        const auto hash = hash_hex(read_all(path));
        inputs.push_back({role, path, hash});
        node = json{{"file_hash", hash}};
        return path;
    }

    json json_file(json& node, const std::string& role) {
        const auto path = file(node, role);
        try {
            return json::parse(read_all(path), nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw ConfigError(role + ": " + path.string() + " is not valid JSON: " + e.what());
        }
    }
};

ExcitonSystem parse_system(const json& spec) {
    allow(spec, "system", {"site_energies", "couplings", "trap_site"});
    const auto trap = spec.value("trap_site", std::size_t{0});
    if (!spec.contains("site_energies")) return build_fmo_system(trap);
    const auto energies = spec.at("site_energies").get<std::vector<double>>();
    const auto rows = spec.at("couplings").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(energies.size());
    if (static_cast<Eigen::Index>(rows.size()) != n) throw ConfigError("system: couplings must be n x n");
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        if (static_cast<Eigen::Index>(rows[a].size()) != n) throw ConfigError("system: couplings must be n x n");
        for (Eigen::Index b = 0; b < n; ++b) j(a, b) = rows[a][b];
    }
    return ExcitonSystem(energies, j, trap);
}

BathSpec parse_bath(const json& spec) {
    allow(spec, "bath", {"drude_lambda", "drude_gamma", "temperature", "modes"});
    const auto d = default_fmo_bath();
    auto modes = d.vibronic_modes();
    if (spec.contains("modes")) {
        modes.clear();
        for (const auto& m : spec.at("modes")) {
            allow(m, "bath.modes", {"omega", "huang_rhys", "gamma"});
            modes.push_back({m.at("omega").get<double>(), m.at("huang_rhys").get<double>(), m.at("gamma").get<double>()});
        }
    }
    return BathSpec(spec.value("drude_lambda", d.drude_lambda()), spec.value("drude_gamma", d.drude_gamma()), modes,
                    spec.value("temperature", d.temperature()));
}

RunConfig build(json doc, const fs::path& base) {
    RunConfig c;
    Resolver files{base, c.inputs};
    allow(doc, "config",
          {"scenario", "seed", "output_dir", "system", "bath", "transmission", "solar", "pv_curve", "dynamics",
           "optimizer", "metrics", "environment", "ecodesign", "validation"});
    get_to(doc, "scenario", c.scenario);
    get_to(doc, "seed", c.seed);
    if (doc.contains("output_dir")) {
        c.output_dir = files.locate(doc.at("output_dir").get<std::string>());
        doc.erase("output_dir");
    }

    if (doc.contains("system")) {
        auto& node = doc["system"];
        if (node.is_string() && node.get<std::string>() == "fmo")
            c.system = build_fmo_system();
        else
            c.system = parse_system(node.is_string() ? files.json_file(node, "system") : node);
    }
    if (doc.contains("bath")) {
        auto& node = doc["bath"];
        c.bath = parse_bath(node.is_string() ? files.json_file(node, "bath") : node);
    }
    if (doc.contains("transmission")) {
        auto& node = doc["transmission"];
        const std::string name = node.is_string() ? node.get<std::string>() : "";
        if (name == "balanced")
            c.transmission = reference_balanced_design().profile();
        else if (name == "resonant")
            c.transmission = resonant_dual_band_profile();
        else
            c.transmission =
                TransmissionProfile::from_json((node.is_string() ? files.json_file(node, "transmission") : node).dump());
    }
    if (doc.contains("solar")) c.solar = load_solar_spectrum(files.file(doc["solar"], "solar"));
    if (doc.contains("pv_curve")) {
        auto& node = doc["pv_curve"];
        if (node.is_string()) {
            c.pv = load_pv_curve(files.file(node, "pv_curve"));
        } else {
            allow(node, "pv_curve", {"flat", "lo_nm", "hi_nm"});
            c.pv = flat_pv_curve(node.at("flat").get<double>(), node.value("lo_nm", 300.0), node.value("hi_nm", 900.0));
        }
    }

    if (doc.contains("dynamics")) {
        const auto& d = doc["dynamics"];
        allow(d, "dynamics",
              {"method", "t_max_fs", "depth", "n_matsubara", "truncation_threshold", "dt_fs", "mode_depth",
               "explicit_matsubara", "store_interval_fs", "redfield_secular", "initial", "initial_site"});
        if (d.contains("method")) c.method = method_from_string(d.at("method").get<std::string>());
        get_to(d, "t_max_fs", c.t_max_fs);
        get_to(d, "depth", c.dynamics.depth);
        get_to(d, "n_matsubara", c.dynamics.n_matsubara);
        get_to(d, "truncation_threshold", c.dynamics.truncation_threshold);
        get_to(d, "dt_fs", c.dynamics.dt);
        get_to(d, "mode_depth", c.dynamics.mode_depth);
        get_to(d, "explicit_matsubara", c.dynamics.explicit_matsubara);
        get_to(d, "store_interval_fs", c.dynamics.store_interval_fs);
        get_to(d, "redfield_secular", c.dynamics.redfield_secular);
        get_to(d, "initial", c.initial);
        get_to(d, "initial_site", c.initial_site);
    }
    c.dynamics.validate();
    if (!(c.t_max_fs > 0.0)) throw ConfigError("dynamics.t_max_fs must be positive");
    if (c.initial != "site" && c.initial != "filtered")
        throw ConfigError("dynamics.initial must be \"site\" or \"filtered\"");
    if (c.initial_site >= c.system.n_sites()) throw ConfigError("dynamics.initial_site out of range");

    c.optimizer.seed = c.seed;
    if (doc.contains("optimizer")) {
        const auto& o = doc["optimizer"];
        allow(o, "optimizer", {"population", "generations", "n_bands", "f", "cr", "sweep", "pce_min", "method"});
        get_to(o, "population", c.optimizer.population);
        get_to(o, "generations", c.optimizer.generations);
        get_to(o, "n_bands", c.optimizer.n_bands);
        get_to(o, "f", c.optimizer.f);
        get_to(o, "cr", c.optimizer.cr);
        get_to(o, "sweep", c.optimizer.sweep);
        get_to(o, "pce_min", c.pce_min);
        if (o.contains("method")) c.optimizer_method = method_from_string(o.at("method").get<std::string>());
    }
    c.optimizer.validate();
    if (!(c.pce_min >= 0.0 && c.pce_min < 1.0)) throw ConfigError("optimizer.pce_min must be in [0, 1)");

    c.etr.trap_site = c.system.trap_site();
    c.metric_options.generator = c.system.hamiltonian().cast<std::complex<double>>();
    if (doc.contains("metrics")) {
        auto& m = doc["metrics"];
        allow(m, "metrics", {"names", "site_i", "site_j", "k_rc_per_ps", "etr_window_fs", "trajectory"});
        get_to(m, "names", c.metrics);
        get_to(m, "site_i", c.metric_options.site_i);
        get_to(m, "site_j", c.metric_options.site_j);
        get_to(m, "k_rc_per_ps", c.etr.k_rc_per_ps);
        get_to(m, "etr_window_fs", c.etr.t_max_fs);
        if (m.contains("trajectory")) c.trajectory_file = files.file(m["trajectory"], "trajectory");
    }
    for (const auto& name : c.metrics)
        if (std::find(metric_names().begin(), metric_names().end(), name) == metric_names().end())
            throw ConfigError("metrics: unknown metric '" + name + "'");
    const auto n = c.system.n_sites();
    if (c.metric_options.site_i >= n || c.metric_options.site_j >= n || c.metric_options.site_i == c.metric_options.site_j)
        throw ConfigError("metrics: site_i and site_j must be distinct sites");
    c.etr.validate();

    c.annual.seed = c.seed;
    if (doc.contains("environment")) {
        auto& e = doc["environment"];
        allow(e, "environment", {"site_file", "sites", "days", "dust", "weather_variation", "temperature_step_k"});
        if (e.contains("site_file")) c.sites = load_sites(files.file(e["site_file"], "sites"));
        get_to(e, "sites", c.environment_sites);
        get_to(e, "days", c.annual.days);
        get_to(e, "dust", c.annual.dust);
        get_to(e, "weather_variation", c.annual.weather_variation);
        get_to(e, "temperature_step_k", c.annual.temperature_step_k);
    }
    for (const auto& name : c.environment_sites) {
        try {
            (void)find_site(c.sites, name);
        } catch (const std::out_of_range&) {
            throw ConfigError("environment: unknown site '" + name + "'");
        }
    }
    if (c.annual.days < 1 || c.annual.days > 365) throw ConfigError("environment.days must be in [1, 365]");
    if (!(c.annual.temperature_step_k > 0.0)) throw ConfigError("environment.temperature_step_k must be positive");

    if (doc.contains("ecodesign")) {
        auto& e = doc["ecodesign"];
        allow(e, "ecodesign",
              {"molecule_file", "molecules", "homo_reference_ev", "b_index_scale", "pce_scale", "lca_efficiency"});
        if (e.contains("molecule_file")) c.molecules = load_molecules(files.file(e["molecule_file"], "molecules"));
        get_to(e, "molecules", c.molecule_names);
        if (e.contains("homo_reference_ev")) c.eco.homo_reference_ev = e.at("homo_reference_ev").get<double>();
        if (e.contains("b_index_scale")) c.eco.normalization.b_index_scale = e.at("b_index_scale").get<double>();
        if (e.contains("pce_scale")) c.eco.normalization.pce_scale = e.at("pce_scale").get<double>();
        if (e.contains("lca_efficiency")) c.lca_efficiency = e.at("lca_efficiency").get<double>();
    }
    for (const auto& name : c.molecule_names)
        if (std::none_of(c.molecules.begin(), c.molecules.end(), [&](const auto& m) { return m.name == name; }))
            throw ConfigError("ecodesign: unknown molecule '" + name + "'");

    if (doc.contains("validation")) {
        const auto& v = doc["validation"];
        allow(v, "validation", {"tests"});
        const auto tests = v.at("tests").get<std::vector<int>>();
        c.validation_tests = {tests.begin(), tests.end()};
    }
    for (int t : c.validation_tests)
        if (t < 1 || t > 12) throw ConfigError("validation.tests: test numbers run from 1 to 12");

    c.canonical = doc.dump();
    return c;
}

RunConfig build_checked(json doc, const fs::path& base) {
    try {
        return build(std::move(doc), base);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

json parse_document(const std::string& text, const std::string& where) {
    try {
        auto doc = text.empty() ? json::object() : json::parse(text, nullptr, true, true);
        if (!doc.is_object()) throw ConfigError(where + ": top level must be an object");
        return doc;
    } catch (const json::parse_error& e) {
        throw ConfigError(where + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- output

class Artifacts {
public:
    Artifacts(fs::path dir, std::string command, const RunConfig& cfg)
        : dir_(std::move(dir)), command_(std::move(command)), cfg_(cfg), hash_(cfg.hash()) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            throw std::runtime_error("cannot create output directory " + dir_.string() +
                                     (ec ? ": " + ec.message() : std::string()));
    }

    const fs::path& dir() const { return dir_; }

    /// CSV or text with `# ` header lines.
    void text(const std::string& name, const std::string& body) {
        put(name, "# specbath " + tool_version() + " config_hash=" + hash_ + "\n# command=" + command_ +
                      " scenario=" + cfg_.scenario + " seed=" + std::to_string(cfg_.seed) + "\n" + body);
    }

    /// JSON has no comments, so the header is the first member.
    void json_doc(const std::string& name, const ojson& body) {
        ojson j;
        j["header"] = header();
        for (const auto& [k, v] : body.items()) j[k] = v;
        put(name, j.dump(2) + "\n");
    }

    void manifest(const std::vector<std::string>& args, double wall_s, const ojson& extra) {
        ojson m;
        m["header"] = header();
        m["command"] = command_;
        m["arguments"] = args;
        m["config"] = json::parse(cfg_.canonical);
        m["seeds"] = {{"master", cfg_.seed}};
        m["inputs"] = ojson::array();
        for (const auto& in : cfg_.inputs)
            m["inputs"].push_back({{"role", in.role}, {"path", in.path.string()}, {"hash", in.hash}});
        m["outputs"] = ojson::array();
        for (const auto& [name, hash] : outputs_) m["outputs"].push_back({{"file", name}, {"hash", hash}});
        m["versions"] = {{"specbath", tool_version()},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"compiler", __VERSION__},
                         {"cplusplus", __cplusplus}};
        m["wall_time_s"] = wall_s;
        for (const auto& [k, v] : extra.items()) m[k] = v;
        write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    ojson header() const {
        return {{"tool", "specbath"}, {"version", tool_version()}, {"config_hash", hash_}, {"command", command_},
                {"scenario", cfg_.scenario}, {"seed", cfg_.seed}};
    }

    void put(const std::string& name, const std::string& contents) {
        write_file_atomic(dir_ / name, contents);
        outputs_.emplace_back(name, hash_hex(contents));
    }

    fs::path dir_;
    std::string command_;
    const RunConfig& cfg_;
    std::string hash_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

struct Outcome {
    std::string summary;
    int code = kExitOk;
    ojson extra = ojson::object();
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

ojson profile_json(const TransmissionProfile& p) { return ojson::parse(p.to_json()); }

// ---------------------------------------------------------------- commands

Outcome run_simulate(const RunConfig& cfg, Artifacts& art) {
    const auto traj = propagate(cfg.system, cfg.bath, cfg.initial_state(), cfg.t_max_fs, cfg.dynamics, cfg.method);
    std::ostringstream csv;
    traj.write_csv(csv);
    art.text("trajectory.csv", csv.str());

    const auto n = cfg.system.n_sites();
    std::ostringstream pops;
    pops << "time_fs";
    for (std::size_t i = 0; i < n; ++i) pops << ",p" << i;
    pops << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        pops << traj.times()[k];
        for (std::size_t i = 0; i < n; ++i) pops << ',' << traj.states()[k].matrix()(i, i).real();
        pops << '\n';
    }
    art.text("populations.csv", pops.str());

    const auto [i, j] = std::pair{cfg.metric_options.site_i, cfg.metric_options.site_j};
    std::ostringstream coh;
    coh << "time_fs,l1_coherence,abs_rho_" << i << '_' << j << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& rho = traj.states()[k].matrix();
        coh << traj.times()[k] << ',' << l1_coherence(rho) << ',' << std::abs(rho(i, j)) << '\n';
    }
    art.text("coherence.csv", coh.str());

    const auto& meta = traj.metadata();
    ojson env;
    env["method"] = to_string(traj.method());
    env["n_sites"] = n;
    env["n_states"] = traj.size();
    env["t_max_fs"] = traj.horizon();
    env["initial"] = cfg.initial == "site" ? "site " + std::to_string(cfg.initial_site) : "filtered exciton mixture";
    env["data"] = "trajectory.csv";
    env["metadata"] = {{"excitation_mode", meta.excitation_mode},
                       {"dynamics_hash", meta.config_hash},
                       {"depth", meta.depth},
                       {"mode_depth", meta.mode_depth},
                       {"n_matsubara", meta.n_matsubara},
                       {"explicit_matsubara", meta.explicit_matsubara},
                       {"truncation_threshold", meta.truncation_threshold},
                       {"dt_fs", meta.dt_fs},
                       {"n_auxiliary", meta.n_auxiliary},
                       {"max_trace_deviation", meta.max_trace_deviation},
                       {"max_hermiticity_deviation", meta.max_hermiticity_deviation},
                       {"min_eigenvalue", meta.min_eigenvalue}};
    std::vector<double> final_pops;
    for (std::size_t s = 0; s < n; ++s) final_pops.push_back(traj.states().back().matrix()(s, s).real());
    env["final_populations"] = final_pops;
    art.json_doc("trajectory.json", env);

    return {"simulate: " + to_string(cfg.method) + ", " + std::to_string(n) + " sites, " + std::to_string(traj.size()) +
            " states to " + fmt("%g", traj.horizon()) + " fs, max trace deviation " +
            fmt("%.2g", meta.max_trace_deviation) + " -> " + art.dir().string()};
}

Outcome run_metrics(const RunConfig& cfg, Artifacts& art) {
    const auto traj = [&] {
        if (!cfg.trajectory_file)
            return propagate(cfg.system, cfg.bath, cfg.initial_state(), cfg.t_max_fs, cfg.dynamics, cfg.method);
        std::ifstream in(*cfg.trajectory_file);
        return Trajectory::read_csv(in, cfg.method);
    }();
    if (static_cast<std::size_t>(traj.dim()) != cfg.system.n_sites())
        throw std::runtime_error("trajectory dimension does not match the system");

    const auto& names = cfg.metrics.empty() ? metric_names() : cfg.metrics;
    for (const auto& name : names) {
        std::ostringstream os;
        metric_series(traj, cfg.system, name, cfg.metric_options).write_csv(os);
        art.text("metric_" + name + ".csv", os.str());
    }

    auto etr_cfg = cfg.etr;
    etr_cfg.t_max_fs = std::min(etr_cfg.t_max_fs, traj.horizon());
    const auto e = etr(traj, etr_cfg);
    ojson j;
    j["source"] = cfg.trajectory_file ? "trajectory file" : "propagated";
    j["method"] = to_string(traj.method());
    j["metrics"] = names;
    j["etr"] = {{"trap_site", etr_cfg.trap_site},
                {"k_rc_per_ps", e.k_rc_per_ps},
                {"window_fs", e.t_max_fs},
                {"absolute", e.absolute},
                {"time_averaged_trap_population", e.normalized}};
    const auto [i, jj] = std::pair{cfg.metric_options.site_i, cfg.metric_options.site_j};
    try {
        const auto fit = coherence_lifetime(traj, i, jj);
        j["coherence_lifetime"] = {{"sites", {i, jj}},
                                   {"tau_fs", std::isfinite(fit.tau_fs) ? ojson(fit.tau_fs) : ojson()},
                                   {"residual", fit.residual},
                                   {"points", fit.points}};
    } catch (const std::exception& ex) {
        j["coherence_lifetime"] = {{"sites", {i, jj}}, {"note", ex.what()}};
    }
    art.json_doc("metrics.json", j);
    return {"metrics: " + std::to_string(names.size()) + " series, time-averaged trap population " +
            fmt("%.4g", e.normalized) + " -> " + art.dir().string()};
}

ojson member_json(const ParetoMember& m) {
    return {{"pce", m.objectives.pce},
            {"etr", m.objectives.etr},
            {"etr_time_averaged", m.objectives.etr_time_averaged},
            {"design", profile_json(m.design.profile())}};
}

Outcome run_optimize(const RunConfig& cfg, Artifacts& art) {
    auto ctx = cfg.context(cfg.optimizer_method);
    const DesignEvaluator evaluator(std::move(ctx));
    const auto front = optimize_pareto(evaluator, cfg.optimizer);

    std::ostringstream csv;
    csv << "pce,etr,etr_time_averaged,t_peak";
    for (std::size_t b = 1; b <= cfg.optimizer.n_bands; ++b)
        csv << ",center" << b << "_nm,fwhm" << b << "_nm,weight" << b;
    csv << '\n' << std::setprecision(17);
    std::vector<std::pair<double, double>> points;
    for (const auto& m : front.members) {
        csv << m.objectives.pce << ',' << m.objectives.etr << ',' << m.objectives.etr_time_averaged << ','
            << m.design.t_peak;
        for (const auto& b : m.design.bands) csv << ',' << b.center_nm << ',' << b.fwhm_nm << ',' << b.weight;
        csv << '\n';
        points.emplace_back(m.objectives.pce, m.objectives.etr);
    }
    art.text("front.csv", csv.str());

    ojson j;
    j["method"] = to_string(cfg.optimizer_method);
    j["pce_min"] = cfg.pce_min;
    j["population"] = cfg.optimizer.population;
    j["generations"] = cfg.optimizer.generations;
    j["n_bands"] = cfg.optimizer.n_bands;
    j["evaluations"] = front.evaluations;
    j["feasible_evaluations"] = front.feasible_evaluations;
    j["hypervolume"] = hypervolume_2d(points);
    j["members"] = ojson::array();
    for (const auto& m : front.members) j["members"].push_back(member_json(m));
    if (!front.members.empty()) {
        const auto named = select_named_configs(front);
        j["named"] = {{"balanced", member_json(named.balanced)},
                      {"energy_focused", member_json(named.energy_focused)},
                      {"agriculture_focused", member_json(named.agriculture_focused)}};
    }
    art.json_doc("front.json", j);
    return {"optimize: " + std::to_string(front.members.size()) + " front members from " +
            std::to_string(front.evaluations) + " evaluations (" + std::to_string(front.feasible_evaluations) +
            " feasible), hypervolume " + fmt("%.4g", j["hypervolume"].get<double>()) + " -> " + art.dir().string()};
}

/// Month (1-12) of a 0-based day in a 365-day year.
int month_of(int day) {
    static constexpr int ends[12] = {31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365};
    int m = 0;
    while (m < 11 && day >= ends[m]) ++m;
    return m + 1;
}

Outcome run_environment(const RunConfig& cfg, Artifacts& art) {
    std::vector<SiteClimate> sites;
    if (cfg.environment_sites.empty())
        sites = cfg.sites;
    else
        for (const auto& name : cfg.environment_sites) sites.push_back(find_site(cfg.sites, name));

    const auto ctx = cfg.context(cfg.method);
    ojson summary;
    summary["design"] = profile_json(cfg.transmission);
    summary["days"] = cfg.annual.days;
    summary["dust"] = cfg.annual.dust;
    summary["weather_variation"] = cfg.annual.weather_variation;
    summary["sites"] = ojson::array();
    std::ostringstream monthly;
    monthly << "site,month,daylight_hours,rel_pce,rel_etr\n" << std::setprecision(10);
    double worst = -1.0;
    std::string worst_site;
    for (const auto& site : sites) {
        const auto ledger = annual_simulation(site, cfg.transmission, ctx, cfg.annual);
        art.text("ledger_" + site.name + ".csv", ledger.csv());
        summary["sites"].push_back(ojson::parse(ledger.summary_json()));

        std::map<int, std::array<double, 3>> acc;  // hours, sum rel_pce, sum rel_etr
        for (const auto& r : ledger.rows) {
            auto& a = acc[month_of(r.day)];
            a[0] += 1.0;
            a[1] += r.rel_pce;
            a[2] += r.rel_etr;
        }
        for (const auto& [month, a] : acc)
            monthly << site.name << ',' << month << ',' << a[0] << ',' << a[1] / a[0] << ',' << a[2] / a[0] << '\n';
        const double loss = std::max(ledger.pce_degradation_pct, ledger.etr_degradation_pct);
        if (loss > worst) {
            worst = loss;
            worst_site = site.name;
        }
    }
    art.text("monthly.csv", monthly.str());
    art.json_doc("summary.json", summary);
    return {"environment: " + std::to_string(sites.size()) + " site ledgers, largest first-to-last-day loss " +
            fmt("%.3g", worst) + " % (" + worst_site + ") -> " + art.dir().string()};
}

Outcome run_ecodesign(const RunConfig& cfg, Artifacts& art) {
    std::vector<MoleculeDescriptors> mols;
    for (const auto& m : cfg.molecules)
        if (cfg.molecule_names.empty() ||
            std::find(cfg.molecule_names.begin(), cfg.molecule_names.end(), m.name) != cfg.molecule_names.end())
            mols.push_back(m);

    auto opt = [](const std::optional<double>& v) {
        std::ostringstream s;
        if (v) s << std::setprecision(10) << *v;
        return s.str();
    };
    std::ostringstream csv;
    csv << "molecule,mu_ev,hardness_ev,softness_per_ev,electrophilicity_ev,mean_f_minus,b_index,class,eco_score,"
           "reported_b_index\n";
    ojson j;
    j["molecules"] = ojson::array();
    std::size_t unreconciled = 0;
    for (auto m : mols) {
        if (cfg.lca_efficiency) m.lca_efficiency = cfg.lca_efficiency;
        const auto r = analyze_molecule(m, cfg.eco);
        j["molecules"].push_back(ojson::parse(r.to_json()));
        const auto rep = r.reported.find("b_index");
        csv << r.molecule << ',' << opt(r.global.mu_ev) << ',' << opt(r.global.hardness_ev) << ','
            << opt(r.global.softness) << ',' << opt(r.global.electrophilicity_ev) << ',' << opt(r.mean_f_minus) << ','
            << opt(r.b_index) << ',' << (r.classification ? to_string(*r.classification) : "") << ','
            << opt(r.eco_score) << ',' << (rep != r.reported.end() ? opt(rep->second) : "") << '\n';
        if (std::any_of(r.notes.begin(), r.notes.end(),
                        [](const std::string& n) { return n.find("unreconciled") != std::string::npos; }))
            ++unreconciled;
    }
    art.text("ecodesign.csv", csv.str());
    art.json_doc("ecodesign.json", j);
    return {"ecodesign: " + std::to_string(mols.size()) + " molecules, " + std::to_string(unreconciled) +
            " with unreconciled reported values -> " + art.dir().string()};
}

Outcome run_validate(const RunConfig& cfg, Artifacts& art) {
    ValidationConfig v;
    v.seed = cfg.seed;
    v.selected = cfg.validation_tests;
    const auto report = run_suite(v);
    art.text("report.txt", report.to_table(false));
    art.json_doc("report.json", ojson::parse(report.to_json(false)));

    Outcome o;
    std::string failed;
    std::size_t ran = 0, passed = 0;
    o.extra["test_runtime_s"] = ojson::object();
    for (const auto& t : report.tests) {
        if (t.skipped) continue;
        ++ran;
        o.extra["test_runtime_s"][std::to_string(t.index)] = t.runtime_s;
        if (t.passed)
            ++passed;
        else
            failed += (failed.empty() ? "" : ", ") + std::to_string(t.index);
    }
    o.code = passed == ran ? kExitOk : kExitFailure;
    o.summary = "validate: " + std::to_string(passed) + "/" + std::to_string(ran) + " passed" +
                (failed.empty() ? "" : " (failed: " + failed + ")") + " -> " + art.dir().string();
    return o;
}

Outcome run_spectrum(const RunConfig& cfg, Artifacts& art) {
    const auto plant = filtered_spectrum(cfg.transmission, cfg.solar);
    const auto& pv = cfg.pv;
    const double pv_lo = pv.wavelengths().front(), pv_hi = pv.wavelengths().back();
    std::ostringstream csv;
    csv << "wavelength_nm,solar_w_m2_nm,transmission,plant_w_m2_nm,pv_efficiency\n" << std::setprecision(10);
    for (std::size_t k = 0; k < cfg.solar.size(); ++k) {
        const double l = cfg.solar.wavelengths()[k];
        csv << l << ',' << cfg.solar.irradiance()[k] << ',' << cfg.transmission(l) << ',' << plant.irradiance()[k] << ','
            << (l >= pv_lo && l <= pv_hi ? pv.at(l) : 0.0) << '\n';
    }
    art.text("spectrum.csv", csv.str());

    const auto model = default_pumping_model(cfg.system);
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    ojson j;
    j["design"] = profile_json(cfg.transmission);
    j["solar"] = {{"integral_w_m2", cfg.solar.integral()},
                  {"par_w_m2", cfg.solar.band_integral(kParLowNm, kParHighNm)},
                  {"par_fraction", par_fraction(cfg.solar)}};
    j["plant"] = {{"integral_w_m2", plant.integral()},
                  {"par_w_m2", plant.band_integral(kParLowNm, kParHighNm)},
                  {"par_fraction", par_fraction(plant)}};
    j["pce"] = pce(cfg.transmission, cfg.solar, cfg.pv);
    j["pumping_rates_per_ps"] = {{"open_sky", vec(pumping_rates(cfg.solar, cfg.system, model))},
                                 {"filtered", vec(pumping_rates(plant, cfg.system, model))}};
    j["resonance"] = ojson::array();
    for (const auto& r : resonance_detuning(cfg.transmission, cfg.system, cfg.bath))
        j["resonance"].push_back({{"band", r.band},
                                  {"filter_cm", r.filter_cm},
                                  {"exciton", r.exciton},
                                  {"mode", r.mode},
                                  {"sites", {r.site_n, r.site_m}},
                                  {"sign", r.sign},
                                  {"target_offset_cm", r.target_offset_cm},
                                  {"detuning_cm", r.detuning_cm}});
    art.json_doc("spectrum.json", j);
    return {"spectrum: solar " + fmt("%.1f", cfg.solar.integral()) + " W/m2 (PAR fraction " +
            fmt("%.4f", par_fraction(cfg.solar)) + "), plant " + fmt("%.1f", plant.integral()) + " W/m2, PCE " +
            fmt("%.4f", j["pce"].get<double>()) + " -> " + art.dir().string()};
}

Outcome run(const std::string& cmd, const RunConfig& cfg, Artifacts& art) {
    if (cmd == "simulate") return run_simulate(cfg, art);
    if (cmd == "metrics") return run_metrics(cfg, art);
    if (cmd == "optimize") return run_optimize(cfg, art);
    if (cmd == "environment") return run_environment(cfg, art);
    if (cmd == "ecodesign") return run_ecodesign(cfg, art);
    if (cmd == "validate") return run_validate(cfg, art);
    return run_spectrum(cfg, art);
}

// ---------------------------------------------------------------- flags

/// Collects flags and writes the ones given into the config document, so
/// flags and config files share one parser and one hash.
class Flags {
public:
    explicit Flags(CLI::App& app) : app_(app) {}

    template <class T>
    void value(const std::string& name, const std::string& pointer, const std::string& help) {
        auto v = std::make_shared<T>();
        auto* o = app_.add_option(name, *v, help);
        apply_.push_back([o, v, pointer](json& doc) {
            if (o->count()) doc[json::json_pointer(pointer)] = *v;
        });
    }

    /// A path flag resolves against the working directory, not the config file.
    void path(const std::string& name, const std::string& pointer, const std::string& help) {
        auto v = std::make_shared<std::string>();
        auto* o = app_.add_option(name, *v, help);
        apply_.push_back([o, v, pointer](json& doc) {
            if (o->count()) doc[json::json_pointer(pointer)] = fs::absolute(*v).string();
        });
    }

    template <class T>
    void list(const std::string& name, const std::string& pointer, const std::string& help) {
        auto v = std::make_shared<std::vector<T>>();
        auto* o = app_.add_option(name, *v, help)->delimiter(',');
        apply_.push_back([o, v, pointer](json& doc) {
            if (o->count()) doc[json::json_pointer(pointer)] = *v;
        });
    }

    void flag(const std::string& name, const std::string& pointer, bool value, const std::string& help) {
        auto* o = app_.add_flag(name, help);
        apply_.push_back([o, pointer, value](json& doc) {
            if (o->count()) doc[json::json_pointer(pointer)] = value;
        });
    }

    void apply(json& doc) const {
        for (const auto& f : apply_) f(doc);
    }

private:
    CLI::App& app_;
    std::vector<std::function<void(json&)>> apply_;
};

void add_dynamics_flags(Flags& f) {
    f.value<std::string>("--method", "/dynamics/method", "redfield, heom or sbd");
    f.value<double>("--t-max", "/dynamics/t_max_fs", "propagation window (fs)");
    f.value<std::string>("--initial", "/dynamics/initial", "site or filtered");
    f.value<std::size_t>("--initial-site", "/dynamics/initial_site", "initially excited site (0-based)");
    f.value<int>("--depth", "/dynamics/depth", "HEOM hierarchy depth");
}

std::string usage() {
    std::string s = "usage: specbath <subcommand> [options]\n\nsubcommands:\n";
    for (const auto& c : subcommands()) s += "  " + c + "\n";
    s += "\nRun `specbath <subcommand> --help` for options.\n"
         "Exit codes: 0 ok, 1 run failure (validate: a test failed), 2 validate harness error,\n"
         "64 usage error, 65 bad config.\n";
    return s;
}

}  // namespace

// ---------------------------------------------------------------- public

std::string RunConfig::hash() const { return hash_hex(canonical); }

OptimizationContext RunConfig::context(Method m) const {
    auto ctx = default_optimization_context(m);
    ctx.solar = solar;
    ctx.pv = pv;
    ctx.system = system;
    ctx.bath = bath;
    ctx.pumping = default_pumping_model(system);
    ctx.method = m;
    ctx.dynamics = dynamics;
    ctx.etr = etr;
    ctx.pce_min = pce_min;
    return ctx;
}

DensityMatrix RunConfig::initial_state() const {
    if (initial == "filtered")
        return exciton_mixture(system,
                               pumping_rates(filtered_spectrum(transmission, solar), system, default_pumping_model(system)));
    return DensityMatrix::site(system.n_sites(), initial_site);
}

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
    return build_checked(parse_document(json_text, "config"), base_dir);
}

RunConfig load_run_config(const fs::path& path) {
    return parse_run_config(read_all(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

fs::path resolve_output_dir(const std::string& command, const std::optional<fs::path>& flag, const RunConfig& config) {
    if (flag) return *flag;
    if (config.output_dir) return *config.output_dir;
    if (const char* env = std::getenv("SPECBATH_OUTPUT_DIR"); env && *env) return fs::path(env) / command;
    return fs::path("specbath_out") / command;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << usage();
        return kExitUsage;
    }
    const std::string& cmd = args[0];
    if (cmd == "--help" || cmd == "-h") {
        out << usage();
        return kExitOk;
    }
    if (cmd == "--version") {
        out << "specbath " << tool_version() << '\n';
        return kExitOk;
    }
    if (std::find(subcommands().begin(), subcommands().end(), cmd) == subcommands().end()) {
        err << "specbath: unknown subcommand '" << cmd << "'\n" << usage();
        return kExitUsage;
    }

    CLI::App app("specbath " + cmd, "specbath " + cmd);
    std::string config_path, out_dir;
    auto* config_opt = app.add_option("--config", config_path, "JSON run configuration");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");
    Flags flags(app);
    flags.value<std::uint64_t>("--seed", "/seed", "master seed");
    if (cmd == "simulate") {
        add_dynamics_flags(flags);
    } else if (cmd == "metrics") {
        add_dynamics_flags(flags);
        flags.list<std::string>("--metric", "/metrics/names", "metric to emit (repeatable; default all)");
        flags.path("--trajectory", "/metrics/trajectory", "read this trajectory CSV instead of propagating");
    } else if (cmd == "optimize") {
        flags.value<std::size_t>("--population", "/optimizer/population", "DE population size");
        flags.value<std::size_t>("--generations", "/optimizer/generations", "DE generations per sweep weight");
        flags.value<double>("--pce-min", "/optimizer/pce_min", "minimum PCE constraint");
        flags.value<std::string>("--method", "/optimizer/method", "dynamics for ETR: redfield, heom or sbd");
        flags.value<std::size_t>("--bands", "/optimizer/n_bands", "Gaussian bands per design (1 or 2)");
    } else if (cmd == "environment") {
        flags.list<std::string>("--site", "/environment/sites", "site to simulate (repeatable; default all)");
        flags.value<int>("--days", "/environment/days", "days to simulate (1-365)");
        flags.flag("--no-dust", "/environment/dust", false, "disable soiling");
        flags.flag("--static", "/environment/weather_variation", false, "AM 1.5, constant temperature and humidity");
    } else if (cmd == "ecodesign") {
        flags.path("--molecules", "/ecodesign/molecule_file", "molecule descriptor JSON");
        flags.list<std::string>("--molecule", "/ecodesign/molecules", "molecule to analyse (repeatable)");
        flags.value<double>("--homo-ref", "/ecodesign/homo_reference_ev", "reference HOMO for nucleophilicity (eV)");
        flags.value<double>("--lca", "/ecodesign/lca_efficiency", "life-cycle efficiency for the eco score");
    } else if (cmd == "validate") {
        flags.list<int>("--tests", "/validation/tests", "comma-separated test numbers (default 1-12)");
    } else if (cmd == "spectrum") {
        flags.path("--transmission", "/transmission", "transmission profile JSON");
    }

    std::vector<const char*> argv{"specbath"};
    for (std::size_t k = 1; k < args.size(); ++k) argv.push_back(args[k].c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "specbath " << cmd << ": " << e.what() << '\n';
        return kExitUsage;
    }

    RunConfig cfg;
    try {
        json doc = json::object();
        fs::path base = fs::current_path();
        if (*config_opt) {
            doc = parse_document(read_all(config_path), config_path);
            base = fs::absolute(config_path).parent_path();
        }
        flags.apply(doc);
        cfg = build_checked(std::move(doc), base);
    } catch (const std::exception& e) {
        err << "specbath " << cmd << ": bad config: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto dir = resolve_output_dir(cmd, *out_opt ? std::optional<fs::path>(out_dir) : std::nullopt, cfg);
        Artifacts art(dir, cmd, cfg);
        const auto outcome = run(cmd, cfg, art);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        art.manifest(args, wall, outcome.extra);
        out << outcome.summary << '\n';
        return outcome.code;
    } catch (const std::exception& e) {
        err << "specbath " << cmd << ": " << e.what() << '\n';
        return cmd == "validate" ? kExitHarness : kExitFailure;
    }
}

}  // namespace specbath::cli
