#include "specbath/ecodesign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

#include "specbath/illumination.hpp"
#include "specbath/io.hpp"

namespace specbath {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

std::optional<double> max_over_label(const std::vector<double>& f, const std::vector<std::string>& labels,
                                     const std::string& label) {
    std::optional<double> best;
    for (std::size_t i = 0; i < labels.size() && i < f.size(); ++i)
        if (labels[i] == label) best = best ? std::max(*best, f[i]) : f[i];
    return best;
}

std::string fmt_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

}  // namespace

void MoleculeDescriptors::validate() const {
    const std::string p = "molecule '" + name + "': ";
    if (homo_ev && lumo_ev) require(*lumo_ev > *homo_ev, p + "LUMO must lie above HOMO");
    if (ionization_ev && affinity_ev) require(*ionization_ev > *affinity_ev, p + "I must exceed A");
    require(n_ester >= 0, p + "n_ester must be >= 0");
    require(bde_min_kj_mol > 0.0, p + "bde_min must be > 0");
    require(populations_n.size() == populations_np1.size() && populations_n.size() == populations_nm1.size(),
            p + "population vectors must have equal length");
    require(atom_labels.empty() || atom_labels.size() == populations_n.size(),
            p + "atom_labels must match the population vectors");
    if (pce) require(*pce >= 0.0, p + "pce must be >= 0");
    if (lca_efficiency) require(*lca_efficiency >= 0.0, p + "lca_efficiency must be >= 0");
}

std::vector<MoleculeDescriptors> load_molecules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open molecule file " + path.string());
    std::vector<MoleculeDescriptors> out;
    try {
        const auto j = nlohmann::json::parse(in);
        if (!j.contains("molecules") || !j["molecules"].is_array())
            throw DataError(path.string() + ": no 'molecules' array");
        for (const auto& e : j["molecules"]) {
            MoleculeDescriptors m;
            m.name = e.at("name").get<std::string>();
            m.homo_ev = opt<double>(e, "homo_ev");
            m.lumo_ev = opt<double>(e, "lumo_ev");
            m.ionization_ev = opt<double>(e, "ionization_ev");
            m.affinity_ev = opt<double>(e, "affinity_ev");
            m.populations_n = e.value("populations_n", std::vector<double>{});
            m.populations_np1 = e.value("populations_np1", std::vector<double>{});
            m.populations_nm1 = e.value("populations_nm1", std::vector<double>{});
            m.atom_labels = e.value("atom_labels", std::vector<std::string>{});
            m.n_ester = e.at("n_ester").get<int>();
            m.bde_min_kj_mol = e.at("bde_min_kj_mol").get<double>();
            m.f_minus_carbonyl = opt<double>(e, "f_minus_carbonyl");
            m.f_plus_aromatic_max = opt<double>(e, "f_plus_aromatic_max");
            m.mean_f_minus = opt<double>(e, "mean_f_minus");
            m.pce = opt<double>(e, "pce");
            m.lca_efficiency = opt<double>(e, "lca_efficiency");
            if (e.contains("reported")) m.reported = e["reported"].get<std::map<std::string, double>>();
            try {
                m.validate();
            } catch (const std::invalid_argument& err) {
                throw DataError(path.string() + ": " + err.what());
            }
            out.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return out;
}

std::vector<MoleculeDescriptors> default_molecules() { return load_molecules(data_directory() / "molecules.json"); }

FukuiIndices condensed_fukui(const std::vector<double>& pn, const std::vector<double>& pp, const std::vector<double>& pm) {
    require(pn.size() == pp.size() && pn.size() == pm.size(), "condensed_fukui: population vectors differ in length");
    FukuiIndices f;
    for (std::size_t i = 0; i < pn.size(); ++i) {
        f.f_plus.push_back(pp[i] - pn[i]);
        f.f_minus.push_back(pn[i] - pm[i]);
        f.f_zero.push_back(0.5 * (f.f_plus.back() + f.f_minus.back()));
    }
    return f;
}

GlobalDescriptors global_descriptors(const MoleculeDescriptors& m, std::optional<double> homo_reference_ev) {
    GlobalDescriptors g{};
    if (m.ionization_ev && m.affinity_ev) {
        g.hardness_ev = 0.5 * (*m.ionization_ev - *m.affinity_ev);
        g.mu_ev = -0.5 * (*m.ionization_ev + *m.affinity_ev);
        g.source = "ionization/affinity";
    } else if (m.homo_ev && m.lumo_ev) {
        g.hardness_ev = 0.5 * (*m.lumo_ev - *m.homo_ev);
        g.mu_ev = 0.5 * (*m.homo_ev + *m.lumo_ev);
        g.source = "frontier orbitals";
    } else {
        throw std::invalid_argument("global_descriptors: '" + m.name + "' needs (I, A) or (HOMO, LUMO)");
    }
    require(g.hardness_ev > 0.0, "global_descriptors: hardness must be > 0");
    g.softness = 1.0 / g.hardness_ev;
    g.electrophilicity_ev = g.mu_ev * g.mu_ev / (2.0 * g.hardness_ev);
    if (homo_reference_ev) {
        // Koopmans: HOMO = -I when only the ionization energy is known.
        std::optional<double> homo = m.homo_ev;
        if (!homo && m.ionization_ev) homo = -*m.ionization_ev;
        require(homo.has_value(), "global_descriptors: nucleophilicity needs HOMO or I");
        g.nucleophilicity_ev = *homo - *homo_reference_ev;
    }
    return g;
}

SusceptibilityProxies susceptibility_proxies(const MoleculeDescriptors& m, const GlobalDescriptors& g,
                                             const std::optional<FukuiIndices>& fukui) {
    SusceptibilityProxies p;
    std::optional<double> carbonyl = m.f_minus_carbonyl;
    std::optional<double> aromatic = m.f_plus_aromatic_max;
    if (fukui && !m.atom_labels.empty()) {
        if (!carbonyl) carbonyl = max_over_label(fukui->f_minus, m.atom_labels, "C_carbonyl");
        if (!aromatic) aromatic = max_over_label(fukui->f_plus, m.atom_labels, "C_aromatic");
    }
    if (carbonyl) {
        p.hydrolysis = *carbonyl * g.softness;
        p.rapid_biodegradation = *carbonyl > kRapidHydrolysisFMinus;
    }
    if (aromatic) p.oxidation = *aromatic * g.electrophilicity_ev;
    p.readily_cleaved = m.bde_min_kj_mol < kReadilyCleavedBdeKjMol;
    p.bde_class = p.readily_cleaved ? "readily cleaved" : "resistant";
    return p;
}

std::string to_string(BiodegradabilityClass c) {
    switch (c) {
        case BiodegradabilityClass::highly: return "highly biodegradable (<6 months)";
        case BiodegradabilityClass::moderately: return "moderately biodegradable (6-18 months)";
        case BiodegradabilityClass::slowly: return "slowly biodegradable (1.5-5 years)";
        case BiodegradabilityClass::recalcitrant: return "recalcitrant (>5 years)";
    }
    return "unknown";
}

BiodegradabilityClass classify_b_index(double score) {
    require(!std::isnan(score), "classify_b_index: NaN score");
    if (score >= 70.0) return BiodegradabilityClass::highly;
    if (score >= 50.0) return BiodegradabilityClass::moderately;
    if (score >= 30.0) return BiodegradabilityClass::slowly;
    return BiodegradabilityClass::recalcitrant;
}

double b_index(double softness, double mean_f_minus, int n_ester, double bde_min_kj_mol, const BIndexWeights& w) {
    require(n_ester >= 0 && bde_min_kj_mol > 0.0, "b_index: n_ester >= 0 and bde_min > 0 required");
    return w.softness * softness + w.mean_f_minus * mean_f_minus + w.n_ester * n_ester +
           w.bde * (400.0 - bde_min_kj_mol);
}

double eco_score(double eta_biodeg, double eta_pce, double eta_lca) {
    require(eta_biodeg >= 0.0 && eta_pce >= 0.0 && eta_lca >= 0.0, "eco_score: efficiencies must be >= 0");
    return 0.4 * eta_biodeg + 0.3 * eta_pce + 0.3 * eta_lca;
}

ReactivityReport analyze_molecule(const MoleculeDescriptors& m, const EcoConfig& cfg) {
    m.validate();
    ReactivityReport r;
    r.molecule = m.name;
    r.reported = m.reported;
    r.global = global_descriptors(m, cfg.homo_reference_ev);
    if (!cfg.homo_reference_ev) r.notes.push_back("nucleophilicity omitted: no reference HOMO configured");
    if (!m.populations_n.empty()) r.fukui = condensed_fukui(m.populations_n, m.populations_np1, m.populations_nm1);
    if (m.mean_f_minus) {
        r.mean_f_minus = m.mean_f_minus;
    } else if (r.fukui) {
        const auto& f = r.fukui->f_minus;
        r.mean_f_minus = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    }
    r.proxies = susceptibility_proxies(m, r.global, r.fukui);
    if (!r.proxies.hydrolysis) r.notes.push_back("hydrolysis proxy unavailable: no carbonyl Fukui value");
    if (!r.proxies.oxidation) r.notes.push_back("oxidation proxy unavailable: no aromatic Fukui value");
    if (r.mean_f_minus) {
        r.b_index = b_index(r.global.softness, *r.mean_f_minus, m.n_ester, m.bde_min_kj_mol, cfg.weights);
        r.classification = classify_b_index(*r.b_index);
        r.notes.push_back("B_index sums terms in eV^-1, dimensionless Fukui, ester count and kJ/mol as weighted");
    } else {
        r.notes.push_back("B_index unavailable: no mean f- value");
    }
    if (r.b_index && cfg.normalization.b_index_scale) r.eta_biodeg = *r.b_index / *cfg.normalization.b_index_scale;
    if (m.pce && cfg.normalization.pce_scale) r.eta_pce = *m.pce / *cfg.normalization.pce_scale;
    r.eta_lca = m.lca_efficiency;
    if (r.eta_biodeg && r.eta_pce && r.eta_lca && *r.eta_biodeg >= 0.0)
        r.eco_score = eco_score(*r.eta_biodeg, *r.eta_pce, *r.eta_lca);
    else
        r.notes.push_back("eco score not computed: needs B_index, pce, lca_efficiency and both normalization scales");

    // Flag every reported value the computation does not reproduce within 1%.
    const std::pair<const char*, std::optional<double>> computed[] = {
        {"mu_ev", r.global.mu_ev},
        {"hardness_ev", r.global.hardness_ev},
        {"electrophilicity_ev", r.global.electrophilicity_ev},
        {"b_index", r.b_index},
        {"eta_eco", r.eco_score},
    };
    for (const auto& [key, value] : computed) {
        const auto it = m.reported.find(key);
        if (it == m.reported.end()) continue;
        const double ref = it->second;
        if (!value) {
            r.notes.push_back(std::string(key) + " not computed, unreconciled vs reported " + fmt_number(ref));
        } else if (std::abs(*value - ref) > 0.01 * std::max(1.0, std::abs(ref))) {
            r.notes.push_back(std::string(key) + " " + fmt_number(*value) + " unreconciled vs reported " +
                              fmt_number(ref));
        }
    }
    return r;
}

std::string ReactivityReport::to_json() const {
    nlohmann::ordered_json j;
    j["molecule"] = molecule;
    j["global"] = {{"source", global.source},
                   {"mu_ev", global.mu_ev},
                   {"hardness_ev", global.hardness_ev},
                   {"softness_per_ev", global.softness},
                   {"electrophilicity_ev", global.electrophilicity_ev},
                   {"nucleophilicity_ev", global.nucleophilicity_ev ? nlohmann::ordered_json(*global.nucleophilicity_ev)
                                                                     : nlohmann::ordered_json()}};
    auto num = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    if (fukui) j["fukui"] = {{"f_plus", fukui->f_plus}, {"f_minus", fukui->f_minus}, {"f_zero", fukui->f_zero}};
    j["mean_f_minus"] = num(mean_f_minus);
    j["hydrolysis_proxy"] = num(proxies.hydrolysis);
    j["oxidation_proxy"] = num(proxies.oxidation);
    j["rapid_biodegradation"] = proxies.rapid_biodegradation ? nlohmann::ordered_json(*proxies.rapid_biodegradation)
                                                             : nlohmann::ordered_json();
    j["bde_class"] = proxies.bde_class;
    j["b_index"] = num(b_index);
    j["classification"] = classification ? nlohmann::ordered_json(to_string(*classification)) : nlohmann::ordered_json();
    j["eta_biodeg"] = num(eta_biodeg);
    j["eta_pce"] = num(eta_pce);
    j["eta_lca"] = num(eta_lca);
    j["eco_score"] = num(eco_score);
    j["reported"] = reported;
    j["notes"] = notes;
    return j.dump(2) + "\n";
}

std::string ReactivityReport::to_table() const {
    std::string out;
    char buf[200];
    auto line = [&](const char* key, const std::string& value) {
        std::snprintf(buf, sizeof buf, "%-24s %s\n", key, value.c_str());
        out += buf;
    };
    auto fmt = [&](const std::optional<double>& v, const char* unit = "") {
        if (!v) return std::string("n/a");
        std::snprintf(buf, sizeof buf, "%.4f%s", *v, unit);
        return std::string(buf);
    };
    line("molecule", molecule);
    line("chemical potential", fmt(global.mu_ev, " eV"));
    line("hardness", fmt(global.hardness_ev, " eV"));
    line("softness", fmt(global.softness, " eV^-1"));
    line("electrophilicity", fmt(global.electrophilicity_ev, " eV"));
    line("nucleophilicity", fmt(global.nucleophilicity_ev, " eV"));
    line("mean f-", fmt(mean_f_minus));
    line("hydrolysis proxy", fmt(proxies.hydrolysis));
    line("oxidation proxy", fmt(proxies.oxidation));
    line("weakest bond", proxies.bde_class);
    line("B_index", fmt(b_index));
    line("class", classification ? to_string(*classification) : "n/a");
    line("eco score", fmt(eco_score));
    for (const auto& [k, v] : reported) line(("reported " + k).c_str(), fmt(v));
    for (const auto& n : notes) line("note", n);
    return out;
}

}  // namespace specbath
