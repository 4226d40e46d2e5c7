#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "specbath/cli.hpp"

using namespace specbath;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("specbath_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string manifest_hash(const fs::path& dir) {
    return nlohmann::json::parse(slurp(dir / "manifest.json"))["header"]["config_hash"].get<std::string>();
}

/// Every emitted file starts with the tool version and the run's config hash.
void check_headers(const fs::path& dir) {
    const auto hash = manifest_hash(dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto text = slurp(e.path());
        if (e.path().extension() == ".json") {
            const auto j = nlohmann::ordered_json::parse(text);
            CHECK(j.begin().key() == "header");
            CHECK(j["header"]["config_hash"] == hash);
            CHECK(j["header"]["version"] == cli::tool_version());
        } else {
            CHECK(text.rfind("# specbath " + cli::tool_version() + " config_hash=" + hash + "\n", 0) == 0);
        }
    }
}

std::vector<std::string> data_lines(const fs::path& csv) {
    std::ifstream in(csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);)
        if (!l.empty() && l[0] != '#') lines.push_back(l);
    return lines;
}

std::vector<double> fields(const std::string& line) {
    std::vector<double> v;
    std::stringstream s(line);
    for (std::string f; std::getline(s, f, ',');) v.push_back(std::stod(f));
    return v;
}

}  // namespace

TEST_CASE("exit codes for usage and config errors") {
    const auto dir = scratch("codes");
    CHECK(run({}).code == cli::kExitUsage);
    const auto unknown = run({"frobnicate"});
    CHECK(unknown.code == cli::kExitUsage);
    CHECK(unknown.err.find("unknown subcommand 'frobnicate'") != std::string::npos);
    CHECK(run({"optimize", "--population", "many"}).code == cli::kExitUsage);
    CHECK(run({"spectrum", "--no-such-flag"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
    CHECK(run({"spectrum", "--help"}).code == cli::kExitOk);

    write(dir / "typo.json", R"({"sed": 3})");
    CHECK(run({"spectrum", "--config", (dir / "typo.json").string()}).code == cli::kExitConfig);
    write(dir / "broken.json", R"({"seed": )");
    CHECK(run({"spectrum", "--config", (dir / "broken.json").string()}).code == cli::kExitConfig);
    write(dir / "missing.json", R"({"solar": "no_such_table.csv"})");
    const auto missing = run({"spectrum", "--config", (dir / "missing.json").string()});
    CHECK(missing.code == cli::kExitConfig);
    CHECK(missing.err.find("file not found") != std::string::npos);
    CHECK(run({"spectrum", "--config", (dir / "absent.json").string()}).code == cli::kExitConfig);
    CHECK(run({"simulate", "--method", "lindblad"}).code == cli::kExitConfig);
    CHECK(run({"environment", "--site", "atlantis"}).code == cli::kExitConfig);
    CHECK(run({"validate", "--tests", "13"}).code == cli::kExitConfig);
    CHECK(run({"optimize", "--pce-min", "1.5"}).code == cli::kExitConfig);

    // Output directory under a regular file cannot be created.
    write(dir / "plain", "x");
    CHECK(run({"ecodesign", "--out", (dir / "plain" / "sub").string()}).code == cli::kExitFailure);
}

TEST_CASE("config parsing resolves references and hashes content") {
    const auto dir = scratch("config");
    write(dir / "profile.json", R"({"peak": 0.6, "bands": [{"center_nm": 700, "fwhm_nm": 80, "weight": 1}]})");
    const auto a = cli::parse_run_config(R"({"transmission": "profile.json", "seed": 4})", dir);
    CHECK(a.transmission.peak == 0.6);
    CHECK(a.seed == 4);
    CHECK(a.optimizer.seed == 4);
    CHECK(a.annual.seed == 4);
    REQUIRE(a.inputs.size() == 1);
    CHECK(a.inputs[0].role == "transmission");
    CHECK(a.canonical.find("profile.json") == std::string::npos);

    // Same content elsewhere gives the same hash; output_dir never enters it.
    const auto other = scratch("config_other");
    fs::copy_file(dir / "profile.json", other / "renamed.json");
    const auto b = cli::parse_run_config(R"({"transmission": "renamed.json", "seed": 4, "output_dir": "x"})", other);
    CHECK(a.hash() == b.hash());
    CHECK(b.output_dir.value() == other / "x");
    CHECK(cli::parse_run_config(R"({"seed": 5})").hash() != cli::parse_run_config(R"({"seed": 4})").hash());

    const auto c = cli::parse_run_config(
        R"({"system": {"site_energies": [100, 0], "couplings": [[0, 20], [20, 0]], "trap_site": 1},
            "bath": {"modes": [], "temperature": 300}, "dynamics": {"method": "heom", "initial_site": 1}})");
    CHECK(c.system.n_sites() == 2);
    CHECK(c.system.trap_site() == 1);
    CHECK(c.etr.trap_site == 1);
    CHECK(c.bath.vibronic_modes().empty());
    CHECK(c.bath.temperature() == 300.0);
    CHECK(c.method == Method::heom);
    CHECK(c.dynamics.depth == 3);
    CHECK(c.initial_state().populations()(1) == doctest::Approx(1.0));

    CHECK_THROWS_AS(cli::parse_run_config(R"({"dynamics": {"initial_site": 7}})"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"system": {"site_energies": [1, 2], "couplings": [[0]]}})"),
                    cli::ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"metrics": {"names": ["beauty"]}})"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"seed": "one"})"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config("[]"), cli::ConfigError);
}

TEST_CASE("output directory resolution") {
    const auto cfg = cli::parse_run_config("{}");
    CHECK(cli::resolve_output_dir("spectrum", fs::path("given"), cfg) == fs::path("given"));
    ::setenv("SPECBATH_OUTPUT_DIR", "/tmp/envbase", 1);
    CHECK(cli::resolve_output_dir("spectrum", std::nullopt, cfg) == fs::path("/tmp/envbase/spectrum"));
    ::unsetenv("SPECBATH_OUTPUT_DIR");
    CHECK(cli::resolve_output_dir("spectrum", std::nullopt, cfg) == fs::path("specbath_out/spectrum"));
    const auto with_dir = cli::parse_run_config(R"({"output_dir": "/tmp/somewhere"})");
    CHECK(cli::resolve_output_dir("spectrum", std::nullopt, with_dir) == fs::path("/tmp/somewhere"));
}

TEST_CASE("simulate writes a trajectory that starts at time 0 with unit trace") {
    const auto dir = scratch("simulate");
    const auto r = run({"simulate", "--method", "heom", "--t-max", "100", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("simulate: heom", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    const auto rows = data_lines(dir / "trajectory.csv");
    REQUIRE(rows.size() > 2);
    const auto first = fields(rows[1]);
    CHECK(first[0] == 0.0);
    double trace = 0.0;
    const std::size_t n = 7;
    for (std::size_t i = 0; i < n; ++i) trace += first[1 + 2 * (i * n + i)];
    CHECK(std::abs(trace - 1.0) <= 1e-12);
    for (const auto* f : {"populations.csv", "coherence.csv", "trajectory.json", "manifest.json"})
        CHECK(fs::exists(dir / f));
    check_headers(dir);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seeds"]["master"] == 1);
    CHECK(manifest["outputs"].size() == 4);
    CHECK(manifest.contains("wall_time_s"));
    CHECK(manifest["versions"]["specbath"] == cli::tool_version());
}

TEST_CASE("metrics emit one series per requested metric") {
    const auto dir = scratch("metrics");
    auto r = run({"metrics", "--metric", "purity,qfi", "--t-max", "200", "--out", (dir / "a").string()});
    REQUIRE(r.code == 0);
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) csvs += e.path().extension() == ".csv";
    CHECK(csvs == 2);
    CHECK(fs::exists(dir / "a" / "metric_purity.csv"));
    CHECK(fs::exists(dir / "a" / "metric_qfi.csv"));
    check_headers(dir / "a");

    // Reading a saved trajectory gives the same series as propagating it.
    REQUIRE(run({"simulate", "--t-max", "200", "--out", (dir / "sim").string()}).code == 0);
    r = run({"metrics", "--metric", "purity", "--trajectory", (dir / "sim" / "trajectory.csv").string(), "--out",
             (dir / "b").string()});
    REQUIRE(r.code == 0);
    const auto a = data_lines(dir / "a" / "metric_purity.csv");
    const auto b = data_lines(dir / "b" / "metric_purity.csv");
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(fields(a[k])[1] == doctest::Approx(fields(b[k])[1]).epsilon(1e-12));
    const auto manifest = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(manifest["inputs"][0]["role"] == "trajectory");
}

TEST_CASE("optimize is byte-identical per seed") {
    const auto dir = scratch("optimize");
    const std::vector<std::string> base{"optimize", "--population", "8", "--generations", "4"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return run(a);
    };
    REQUIRE(with({"--seed", "7", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(with({"--seed", "7", "--out", (dir / "b").string()}).code == 0);
    REQUIRE(with({"--seed", "8", "--out", (dir / "c").string()}).code == 0);
    CHECK(slurp(dir / "a" / "front.csv") == slurp(dir / "b" / "front.csv"));
    CHECK(slurp(dir / "a" / "front.json") == slurp(dir / "b" / "front.json"));
    CHECK(slurp(dir / "a" / "front.csv") != slurp(dir / "c" / "front.csv"));
    CHECK(manifest_hash(dir / "a") != manifest_hash(dir / "c"));
    check_headers(dir / "a");

    const auto rows = data_lines(dir / "a" / "front.csv");
    REQUIRE(rows.size() > 1);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(fields(rows[k])[0] >= 0.15);
}

TEST_CASE("environment writes one ledger per site plus a combined summary") {
    const auto dir = scratch("environment");
    const auto r = run({"environment", "--days", "2", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto sites = default_sites();
    std::size_t ledgers = 0;
    for (const auto& e : fs::directory_iterator(dir)) ledgers += e.path().filename().string().rfind("ledger_", 0) == 0;
    CHECK(ledgers == sites.size());
    for (const auto& s : sites) {
        const auto rows = data_lines(dir / ("ledger_" + s.name + ".csv"));
        REQUIRE(!rows.empty());
        CHECK(rows[0] == "day,hour,temp_K,humidity,dust_um,rel_pce,rel_etr");
    }
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["sites"].size() == sites.size());
    CHECK(fs::exists(dir / "monthly.csv"));
    check_headers(dir);

    const auto one = scratch("environment_one");
    REQUIRE(run({"environment", "--days", "2", "--site", "desert", "--out", one.string()}).code == 0);
    CHECK(data_lines(one / "ledger_desert.csv") == data_lines(dir / "ledger_desert.csv"));  // headers differ by hash
}

TEST_CASE("ecodesign annotates unreconciled reported values") {
    const auto dir = scratch("ecodesign");
    const auto r = run({"ecodesign", "--molecule", "molecule_a", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto text = slurp(dir / "ecodesign.json");
    CHECK(text.find("b_index 24.09 unreconciled vs reported 101.5") != std::string::npos);
    CHECK(data_lines(dir / "ecodesign.csv").size() == 2);
    check_headers(dir);
}

TEST_CASE("spectrum reruns reproduce identical files") {
    const auto dir = scratch("spectrum");
    REQUIRE(run({"spectrum", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run({"spectrum", "--out", (dir / "b").string()}).code == 0);
    for (const auto* f : {"spectrum.csv", "spectrum.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    const auto j = nlohmann::json::parse(slurp(dir / "a" / "spectrum.json"));
    CHECK(j["solar"]["integral_w_m2"].get<double>() == doctest::Approx(1000.37).epsilon(1e-4));
    check_headers(dir / "a");
}

TEST_CASE("validate reports and sets the exit code") {
    const auto dir = scratch("validate");
    const auto r = run({"validate", "--tests", "5,6", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("validate: 2/2 passed") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["tests"].size() == 12);
    CHECK(report["tests"][4]["passed"] == true);
    CHECK(fs::exists(dir / "report.txt"));
    check_headers(dir);
}
