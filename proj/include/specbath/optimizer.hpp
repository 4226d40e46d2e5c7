// optimizer.hpp - PCE/ETR design evaluation and Pareto search by
// differential evolution over scalarized objectives.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specbath/dynamics.hpp"
#include "specbath/illumination.hpp"
#include "specbath/metrics.hpp"

namespace specbath {

struct DesignBounds {
    double center_min_nm = 380.0;
    double center_max_nm = 900.0;
    double fwhm_min_nm = 50.0;
    double fwhm_max_nm = 200.0;
};

/// One or two Gaussian bands sharing a global peak transmission.
struct DesignVector {
    double t_peak = 0.7;
    std::vector<TransmissionBand> bands;

    TransmissionProfile profile() const { return {t_peak, bands}; }
    /// Fixed-precision text form; also the final tie-breaker.
    std::string serialize() const;
};

/// Empty when the design satisfies 0 <= T <= 1, the band bounds, and
/// non-negative weights summing to 1; otherwise one message per violation.
std::vector<std::string> bound_violations(const DesignVector& d, const DesignBounds& bounds = {});

struct Objectives {
    double pce = 0.0;
    /// Absorbed-flux-weighted trap occupancy relative to unfiltered sunlight, in [0, 1].
    double etr = 0.0;
    /// Time-averaged trap population of the filtered initial state (flux independent).
    double etr_time_averaged = 0.0;
    bool feasible = false;
    std::vector<std::string> constraint_violations;
    Method method = Method::redfield;
};

struct OptimizationContext {
    SolarSpectrum solar;
    PVEfficiencyCurve pv;
    ExcitonSystem system;
    BathSpec bath;
    PumpingModel pumping;
    Method method = Method::redfield;
    HierarchyConfig dynamics;
    ETRConfig etr;
    double pce_min = 0.15;
    DesignBounds bounds;
};

/// Bundled spectrum, default PV curve, FMO at 295 K, Redfield dynamics.
OptimizationContext default_optimization_context(Method method = Method::redfield);

inline constexpr double kPceNormalization = 0.25;

/// Evaluates designs against one context. Trap occupancy is linear in the
/// initial state, so the time-averaged trap population from each exciton
/// state is propagated once here and reused for every design.
class DesignEvaluator {
public:
    explicit DesignEvaluator(OptimizationContext ctx);

    Objectives evaluate(const DesignVector& d) const;
    const OptimizationContext& context() const { return ctx_; }
    /// Time-averaged trap population after starting in each exciton state.
    const Eigen::VectorXd& exciton_response() const { return response_; }
    /// Pumping rates under unfiltered sunlight.
    const Eigen::VectorXd& open_sky_rates() const { return open_rates_; }

private:
    OptimizationContext ctx_;
    Eigen::VectorXd response_;
    Eigen::VectorXd open_rates_;
    double open_sky_etr_;
};

Objectives evaluate_design(const DesignVector& d, const DesignEvaluator& evaluator);

/// The two-band balanced configuration quoted as a reference design. Its
/// band amplitudes (0.984, 0.998) are normalized into weights with T_peak = 1.
DesignVector reference_balanced_design();

struct ParetoMember {
    DesignVector design;
    Objectives objectives;
};

struct ParetoFront {
    std::vector<ParetoMember> members;  // sorted by pce ascending
    std::size_t evaluations = 0;
    std::size_t feasible_evaluations = 0;
};

struct DEParams {
    std::size_t population = 20;
    std::size_t generations = 40;
    std::uint64_t seed = 1;
    double f = 0.8;
    double cr = 0.9;
    std::size_t n_bands = 2;
    /// Scalarization weights lambda_w on pce_norm; default {0, 0.1, ..., 1}.
    std::vector<double> sweep;

    void validate() const;
};

/// Maximizes (pce, etr). Each sweep runs rand/1/bin DE on
/// lambda_w pce/0.25 + (1 - lambda_w) etr with infeasible trials rejected;
/// every feasible evaluation enters an archive that is reduced to its
/// non-dominated set.
ParetoFront optimize_pareto(const DesignEvaluator& evaluator, const DEParams& params);

/// Generic two-objective search on the unit box, used for surrogate checks.
struct GenericPoint {
    std::vector<double> x;
    double f1;
    double f2;
};
using GenericObjective = std::function<std::optional<std::pair<double, double>>(const std::vector<double>&)>;
std::vector<GenericPoint> optimize_generic(std::size_t dim, const GenericObjective& objective, const DEParams& params,
                                           double f1_scale = 1.0);

/// True iff a is at least as good on both objectives and strictly better on one.
bool dominates(double a1, double a2, double b1, double b2);

/// Area dominated by the points relative to the reference (r1, r2), maximizing both.
double hypervolume_2d(std::vector<std::pair<double, double>> points, double r1 = 0.0, double r2 = 0.0);

struct NamedConfigs {
    ParetoMember balanced;
    ParetoMember energy_focused;
    ParetoMember agriculture_focused;
};

/// energy = max pce, agriculture = max etr, balanced = member maximizing the
/// smaller of its normalized distances to the two extremes.
NamedConfigs select_named_configs(const ParetoFront& front);

/// Deterministic per-(seed, a, b, c) stream seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace specbath
