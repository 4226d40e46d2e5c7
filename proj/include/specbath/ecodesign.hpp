// ecodesign.hpp - conceptual-DFT reactivity descriptors, biodegradability
// index and the eco-design score. Energies in eV, BDE in kJ/mol.
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace specbath {

struct MoleculeDescriptors {
    std::string name;
    std::optional<double> homo_ev;
    std::optional<double> lumo_ev;
    std::optional<double> ionization_ev;
    std::optional<double> affinity_ev;
    /// Per-atom electron populations of the N, N+1 and N-1 electron species.
    std::vector<double> populations_n;
    std::vector<double> populations_np1;
    std::vector<double> populations_nm1;
    /// Optional per-atom labels; "C_carbonyl" and "C_aromatic" select the
    /// hydrolysis and oxidation sites.
    std::vector<std::string> atom_labels;
    int n_ester = 0;
    double bde_min_kj_mol = 400.0;
    /// Site values supplied directly when populations are unavailable.
    std::optional<double> f_minus_carbonyl;
    std::optional<double> f_plus_aromatic_max;
    std::optional<double> mean_f_minus;
    /// Device-level inputs for the eco-design score.
    std::optional<double> pce;
    std::optional<double> lca_efficiency;
    /// Published values kept for comparison only.
    std::map<std::string, double> reported;

    /// Throws std::invalid_argument on lumo <= homo, I <= A, n_ester < 0,
    /// bde_min <= 0, or population vectors of unequal length.
    void validate() const;
};

std::vector<MoleculeDescriptors> load_molecules(const std::filesystem::path& path);
/// Bundled data/molecules.json.
std::vector<MoleculeDescriptors> default_molecules();

struct FukuiIndices {
    std::vector<double> f_plus;
    std::vector<double> f_minus;
    std::vector<double> f_zero;
};

FukuiIndices condensed_fukui(const std::vector<double>& populations_n, const std::vector<double>& populations_np1,
                             const std::vector<double>& populations_nm1);

struct GlobalDescriptors {
    double mu_ev;
    double hardness_ev;
    double softness;  // eV^-1
    double electrophilicity_ev;
    std::optional<double> nucleophilicity_ev;
    /// "ionization/affinity" or "frontier orbitals".
    std::string source;
};

/// Uses (I, A) when both are present, otherwise (HOMO, LUMO). The
/// nucleophilicity needs the reference HOMO (e.g. of TCNE) and is omitted
/// without it. Throws std::invalid_argument when hardness <= 0 or inputs are missing.
GlobalDescriptors global_descriptors(const MoleculeDescriptors& m, std::optional<double> homo_reference_ev = {});

inline constexpr double kRapidHydrolysisFMinus = 0.05;
inline constexpr double kReadilyCleavedBdeKjMol = 300.0;

struct SusceptibilityProxies {
    /// f-(C_carbonyl) S; empty when no carbonyl site value is known.
    std::optional<double> hydrolysis;
    /// max f+(C_aromatic) omega; empty when no aromatic site value is known.
    std::optional<double> oxidation;
    std::optional<bool> rapid_biodegradation;  // f-(C_carbonyl) > 0.05
    bool readily_cleaved = false;              // BDE_min < 300 kJ/mol
    std::string bde_class;
};

SusceptibilityProxies susceptibility_proxies(const MoleculeDescriptors& m, const GlobalDescriptors& g,
                                             const std::optional<FukuiIndices>& fukui);

enum class BiodegradabilityClass { highly, moderately, slowly, recalcitrant };
std::string to_string(BiodegradabilityClass c);
/// Lower bounds closed: [70, inf), [50, 70), [30, 50), (-inf, 30).
BiodegradabilityClass classify_b_index(double score);

struct BIndexWeights {
    double softness = 0.3;
    double mean_f_minus = 0.3;
    double n_ester = 0.2;
    double bde = 0.2;
};

/// w1 S + w2 <f-> + w3 N_ester + w4 (400 - BDE_min). The terms carry
/// different units and are summed as given.
double b_index(double softness, double mean_f_minus, int n_ester, double bde_min_kj_mol, const BIndexWeights& w = {});

/// 0.4 eta_biodeg + 0.3 eta_pce + 0.3 eta_lca; throws on negative inputs.
double eco_score(double eta_biodeg, double eta_pce, double eta_lca);

/// Normalizations for the eco-design components. eco_score is only
/// reported when both scales are set.
struct EcoNormalization {
    std::optional<double> b_index_scale;  // eta_biodeg = B_index / scale
    std::optional<double> pce_scale;      // eta_pce = pce / scale
};

struct ReactivityReport {
    std::string molecule;
    GlobalDescriptors global;
    std::optional<FukuiIndices> fukui;
    std::optional<double> mean_f_minus;
    SusceptibilityProxies proxies;
    std::optional<double> b_index;
    std::optional<BiodegradabilityClass> classification;
    std::optional<double> eta_biodeg;
    std::optional<double> eta_pce;
    std::optional<double> eta_lca;
    std::optional<double> eco_score;
    std::vector<std::string> notes;
    std::map<std::string, double> reported;

    std::string to_json() const;
    std::string to_table() const;
};

struct EcoConfig {
    std::optional<double> homo_reference_ev;
    BIndexWeights weights;
    EcoNormalization normalization;
};

ReactivityReport analyze_molecule(const MoleculeDescriptors& m, const EcoConfig& cfg = {});

}  // namespace specbath
