#include "specbath/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace specbath {

namespace {

constexpr double kWeightTolerance = 1e-9;

std::vector<double> default_sweep() {
    std::vector<double> s;
    for (int k = 0; k <= 10; ++k) s.push_back(0.1 * k);
    return s;
}

std::size_t genome_size(std::size_t n_bands) { return n_bands == 1 ? 3 : 6; }

DesignVector decode(const std::vector<double>& x, std::size_t n_bands, const DesignBounds& b) {
    const auto center = [&](double u) { return b.center_min_nm + u * (b.center_max_nm - b.center_min_nm); };
    const auto fwhm = [&](double u) { return b.fwhm_min_nm + u * (b.fwhm_max_nm - b.fwhm_min_nm); };
    DesignVector d;
    if (n_bands == 1) {
        d.bands = {{center(x[0]), fwhm(x[1]), 1.0}};
        d.t_peak = x[2];
    } else {
        d.bands = {{center(x[0]), fwhm(x[1]), x[4]}, {center(x[2]), fwhm(x[3]), 1.0 - x[4]}};
        d.t_peak = x[5];
    }
    return d;
}

struct Candidate {
    std::vector<double> x;
    double fitness;
    bool feasible;
};

// One DE sweep. `eval` returns the two raw objectives or nullopt when
// infeasible; the scalarized fitness is lambda f1 / f1_scale + (1 - lambda) f2.
template <class Eval>
void run_sweep(std::size_t dim, const DEParams& p, std::size_t sweep_index, double lambda, double f1_scale,
               Eval&& eval) {
    const auto fitness = [&](const std::pair<double, double>& f) {
        return lambda * f.first / f1_scale + (1.0 - lambda) * f.second;
    };
    std::vector<Candidate> pop(p.population);
    for (std::size_t i = 0; i < p.population; ++i) {
        std::mt19937_64 rng(derive_seed(p.seed, sweep_index, 0, i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Candidate c{std::vector<double>(dim), -INFINITY, false};
        // Rejection sampling toward a feasible start; give up after 100 draws.
        for (int attempt = 0; attempt < 100 && !c.feasible; ++attempt) {
            for (auto& v : c.x) v = u(rng);
            if (const auto f = eval(c.x)) {
                c.fitness = fitness(*f);
                c.feasible = true;
            }
        }
        pop[i] = std::move(c);
    }
    for (std::size_t g = 1; g <= p.generations; ++g) {
        std::vector<Candidate> next = pop;
        for (std::size_t i = 0; i < p.population; ++i) {
            std::mt19937_64 rng(derive_seed(p.seed, sweep_index, g, i));
            std::uniform_int_distribution<std::size_t> pick(0, p.population - 1);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::size_t r1, r2, r3;
            do r1 = pick(rng); while (r1 == i);
            do r2 = pick(rng); while (r2 == i || r2 == r1);
            do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
            std::uniform_int_distribution<std::size_t> pick_dim(0, dim - 1);
            const std::size_t jrand = pick_dim(rng);
            std::vector<double> trial = pop[i].x;
            for (std::size_t j = 0; j < dim; ++j) {
                if (j == jrand || u(rng) < p.cr)
                    trial[j] = std::clamp(pop[r1].x[j] + p.f * (pop[r2].x[j] - pop[r3].x[j]), 0.0, 1.0);
            }
            const auto f = eval(trial);
            if (!f) continue;
            const double fit = fitness(*f);
            if (!pop[i].feasible || fit >= pop[i].fitness) next[i] = {std::move(trial), fit, true};
        }
        pop = std::move(next);
    }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix(splitmix(splitmix(splitmix(master) ^ a) ^ b) ^ c);
}

std::string DesignVector::serialize() const {
    std::string s;
    char buf[96];
    std::snprintf(buf, sizeof buf, "T=%.9f", t_peak);
    s += buf;
    for (const auto& b : bands) {
        std::snprintf(buf, sizeof buf, ";c=%.9f,f=%.9f,w=%.9f", b.center_nm, b.fwhm_nm, b.weight);
        s += buf;
    }
    return s;
}

std::vector<std::string> bound_violations(const DesignVector& d, const DesignBounds& b) {
    std::vector<std::string> v;
    if (!(d.t_peak >= 0.0 && d.t_peak <= 1.0)) v.push_back("T_peak outside [0, 1]");
    if (d.bands.empty() || d.bands.size() > 2) v.push_back("band count must be 1 or 2");
    double total = 0.0;
    for (std::size_t k = 0; k < d.bands.size(); ++k) {
        const auto& band = d.bands[k];
        const std::string tag = "band " + std::to_string(k) + ": ";
        if (!(band.center_nm >= b.center_min_nm && band.center_nm <= b.center_max_nm))
            v.push_back(tag + "centre outside [" + std::to_string(b.center_min_nm) + ", " +
                        std::to_string(b.center_max_nm) + "] nm");
        if (!(band.fwhm_nm >= b.fwhm_min_nm && band.fwhm_nm <= b.fwhm_max_nm))
            v.push_back(tag + "fwhm outside [" + std::to_string(b.fwhm_min_nm) + ", " + std::to_string(b.fwhm_max_nm) +
                        "] nm");
        if (!(band.weight >= 0.0)) v.push_back(tag + "negative weight");
        total += band.weight;
    }
    if (!d.bands.empty() && std::abs(total - 1.0) > kWeightTolerance) v.push_back("weights do not sum to 1");
    // With normalized weights the unclipped sum never exceeds T_peak; checked
    // anyway so the clip in TransmissionProfile is never what keeps T <= 1.
    if (v.empty() && d.t_peak * total > 1.0 + kWeightTolerance) v.push_back("transmission exceeds 1");
    return v;
}

OptimizationContext default_optimization_context(Method method) {
    const auto system = build_fmo_system();
    OptimizationContext ctx{default_solar_spectrum(), default_pv_curve(), system, default_fmo_bath(295.0),
                            default_pumping_model(system), method, HierarchyConfig{}, ETRConfig{}, 0.15,
                            DesignBounds{}};
    if (method == Method::heom) {
        ctx.dynamics.depth = 3;
        ctx.dynamics.mode_depth = 1;
    }
    ctx.etr.trap_site = system.trap_site();
    return ctx;
}

DesignEvaluator::DesignEvaluator(OptimizationContext ctx) : ctx_(std::move(ctx)) {
    ctx_.etr.validate();
    const auto n = static_cast<Eigen::Index>(ctx_.system.n_sites());
    ctx_.etr.trap_site = ctx_.system.trap_site();
    response_.resize(n);
    std::optional<SBDConfig> sbd;
    if (ctx_.method == Method::sbd) sbd = default_sbd_config(ctx_.system, ctx_.bath);
    for (Eigen::Index mu = 0; mu < n; ++mu) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        w(mu) = 1.0;
        const auto traj = propagate(ctx_.system, ctx_.bath, exciton_mixture(ctx_.system, w), ctx_.etr.t_max_fs,
                                    ctx_.dynamics, ctx_.method, sbd);
        response_(mu) = etr(traj, ctx_.etr).normalized;
    }
    open_rates_ = pumping_rates(ctx_.solar, ctx_.system, ctx_.pumping);
    open_sky_etr_ = open_rates_.dot(response_);
    if (!(open_sky_etr_ > 0.0)) throw std::invalid_argument("DesignEvaluator: unfiltered sunlight drives no transport");
}

Objectives DesignEvaluator::evaluate(const DesignVector& d) const {
    Objectives o;
    o.method = ctx_.method;
    o.constraint_violations = bound_violations(d, ctx_.bounds);
    const auto profile = d.profile();
    o.pce = pce(profile, ctx_.solar, ctx_.pv);
    const Eigen::VectorXd rates = pumping_rates(filtered_spectrum(profile, ctx_.solar), ctx_.system, ctx_.pumping);
    o.etr = rates.dot(response_) / open_sky_etr_;
    o.etr_time_averaged = rates.sum() > 0.0 ? rates.dot(response_) / rates.sum() : 0.0;
    if (o.pce < ctx_.pce_min) o.constraint_violations.push_back("pce below minimum " + std::to_string(ctx_.pce_min));
    o.feasible = o.constraint_violations.empty();
    return o;
}

Objectives evaluate_design(const DesignVector& d, const DesignEvaluator& evaluator) { return evaluator.evaluate(d); }

DesignVector reference_balanced_design() {
    const double a1 = 0.984, a2 = 0.998;
    return {1.0, {{668.4, 97.9, a1 / (a1 + a2)}, {440.4, 87.6, a2 / (a1 + a2)}}};
}

void DEParams::validate() const {
    if (population < 8) throw std::invalid_argument("DEParams: population must be >= 8");
    if (generations < 1) throw std::invalid_argument("DEParams: generations must be >= 1");
    if (n_bands != 1 && n_bands != 2) throw std::invalid_argument("DEParams: n_bands must be 1 or 2");
    if (!(f > 0.0 && f <= 2.0)) throw std::invalid_argument("DEParams: F must be in (0, 2]");
    if (!(cr >= 0.0 && cr <= 1.0)) throw std::invalid_argument("DEParams: CR must be in [0, 1]");
    for (double w : sweep)
        if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("DEParams: sweep weights must be in [0, 1]");
}

bool dominates(double a1, double a2, double b1, double b2) {
    return a1 >= b1 && a2 >= b2 && (a1 > b1 || a2 > b2);
}

double hypervolume_2d(std::vector<std::pair<double, double>> points, double r1, double r2) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second > b.second);
    });
    double hv = 0.0, level = r2;
    for (const auto& [f1, f2] : points) {
        if (f1 <= r1 || f2 <= level) continue;
        hv += (f1 - r1) * (f2 - level);
        level = f2;
    }
    return hv;
}

ParetoFront optimize_pareto(const DesignEvaluator& evaluator, const DEParams& params) {
    params.validate();
    const auto sweep = params.sweep.empty() ? default_sweep() : params.sweep;
    const std::size_t dim = genome_size(params.n_bands);
    const auto& bounds = evaluator.context().bounds;
    ParetoFront front;
    std::vector<ParetoMember> archive;
    for (std::size_t s = 0; s < sweep.size(); ++s) {
        run_sweep(dim, params, s, sweep[s], kPceNormalization,
                  [&](const std::vector<double>& x) -> std::optional<std::pair<double, double>> {
                      ++front.evaluations;
                      DesignVector d = decode(x, params.n_bands, bounds);
                      Objectives o = evaluator.evaluate(d);
                      if (!o.feasible) return std::nullopt;
                      ++front.feasible_evaluations;
                      const std::pair<double, double> f{o.pce, o.etr};
                      archive.push_back({std::move(d), std::move(o)});
                      return f;
                  });
    }
    // Lexicographic order (pce, etr, design) makes the filter deterministic.
    std::sort(archive.begin(), archive.end(), [](const ParetoMember& a, const ParetoMember& b) {
        if (a.objectives.pce != b.objectives.pce) return a.objectives.pce > b.objectives.pce;
        if (a.objectives.etr != b.objectives.etr) return a.objectives.etr > b.objectives.etr;
        return a.design.serialize() < b.design.serialize();
    });
    double best_etr = -INFINITY;
    for (auto& m : archive) {
        if (m.objectives.etr > best_etr) {
            best_etr = m.objectives.etr;
            front.members.push_back(std::move(m));
        }
    }
    std::reverse(front.members.begin(), front.members.end());
    return front;
}

std::vector<GenericPoint> optimize_generic(std::size_t dim, const GenericObjective& objective, const DEParams& params,
                                           double f1_scale) {
    params.validate();
    if (dim < 1) throw std::invalid_argument("optimize_generic: dim must be >= 1");
    const auto sweep = params.sweep.empty() ? default_sweep() : params.sweep;
    std::vector<GenericPoint> archive;
    for (std::size_t s = 0; s < sweep.size(); ++s) {
        run_sweep(dim, params, s, sweep[s], f1_scale, [&](const std::vector<double>& x) {
            auto f = objective(x);
            if (f) archive.push_back({x, f->first, f->second});
            return f;
        });
    }
    std::sort(archive.begin(), archive.end(), [](const GenericPoint& a, const GenericPoint& b) {
        if (a.f1 != b.f1) return a.f1 > b.f1;
        if (a.f2 != b.f2) return a.f2 > b.f2;
        return a.x < b.x;
    });
    std::vector<GenericPoint> front;
    double best = -INFINITY;
    for (auto& p : archive) {
        if (p.f2 > best) {
            best = p.f2;
            front.push_back(std::move(p));
        }
    }
    std::reverse(front.begin(), front.end());
    return front;
}

NamedConfigs select_named_configs(const ParetoFront& front) {
    if (front.members.empty()) throw std::invalid_argument("select_named_configs: empty front");
    const auto& m = front.members;
    std::size_t e = 0, a = 0;
    for (std::size_t k = 1; k < m.size(); ++k) {
        if (m[k].objectives.pce > m[e].objectives.pce) e = k;
        if (m[k].objectives.etr > m[a].objectives.etr) a = k;
    }
    const double p_span = m[e].objectives.pce - m[a].objectives.pce;
    const double r_span = m[a].objectives.etr - m[e].objectives.etr;
    const auto norm = [](double v, double lo, double span) { return span > 0.0 ? (v - lo) / span : 0.0; };
    std::size_t best = a;
    double best_score = -1.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double p = norm(m[k].objectives.pce, m[a].objectives.pce, p_span);
        const double r = norm(m[k].objectives.etr, m[e].objectives.etr, r_span);
        const double to_energy = std::hypot(1.0 - p, r);
        const double to_agri = std::hypot(p, 1.0 - r);
        const double score = std::min(to_energy, to_agri);
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    return {m[best], m[e], m[a]};
}

}  // namespace specbath
