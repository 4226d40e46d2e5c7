#include "doctest.h"

#include <numbers>
#include <random>

#include "specbath/optimizer.hpp"

using namespace specbath;

namespace {

const DesignEvaluator& evaluator() {
    static const DesignEvaluator ev(default_optimization_context());
    return ev;
}

DEParams small_params(std::uint64_t seed) {
    DEParams p;
    p.population = 10;
    p.generations = 8;
    p.seed = seed;
    p.sweep = {0.0, 0.5, 1.0};
    return p;
}

void check_front(const ParetoFront& front) {
    const auto& m = front.members;
    for (std::size_t a = 0; a < m.size(); ++a) {
        CHECK(m[a].objectives.feasible);
        CHECK(m[a].objectives.pce >= 0.15);
        CHECK(bound_violations(m[a].design).empty());
        for (double l = 280.0; l <= 4000.0; l += 3.7) {
            const double t = m[a].design.profile()(l);
            CHECK((t >= 0.0 && t <= 1.0));
        }
        if (a > 0) {
            CHECK(m[a].objectives.pce > m[a - 1].objectives.pce);
            CHECK(m[a].objectives.etr < m[a - 1].objectives.etr);
        }
        for (std::size_t b = 0; b < m.size(); ++b) {
            if (a == b) continue;
            CHECK_FALSE(dominates(m[a].objectives.pce, m[a].objectives.etr, m[b].objectives.pce, m[b].objectives.etr));
        }
    }
}

}  // namespace

TEST_CASE("exciton response and open-sky normalization") {
    const auto& ev = evaluator();
    const auto& r = ev.exciton_response();
    REQUIRE(r.size() == 7);
    for (int k = 0; k < 7; ++k) CHECK((r(k) > 0.0 && r(k) < 1.0));
    CHECK((ev.open_sky_rates().array() > 0.0).all());
}

TEST_CASE("design evaluation") {
    const auto& ev = evaluator();
    SUBCASE("opaque panel") {
        const DesignVector d{0.0, {{800.0, 100.0, 1.0}}};
        const auto o = evaluate_design(d, ev);
        CHECK(o.etr == 0.0);
        CHECK(o.etr_time_averaged == 0.0);
        CHECK(o.pce == doctest::Approx(pce(d.profile(), ev.context().solar, ev.context().pv)));
        CHECK(o.feasible);
        CHECK(o.method == Method::redfield);
    }
    SUBCASE("fully transparent over PAR is infeasible") {
        // A band this wide is outside the fwhm bounds too; the PCE violation is
        // what matters here.
        const DesignVector d{1.0, {{550.0, 1.0e4, 1.0}}};
        const auto o = evaluate_design(d, ev);
        CHECK(o.pce < 0.15);
        CHECK_FALSE(o.feasible);
        CHECK(std::any_of(o.constraint_violations.begin(), o.constraint_violations.end(),
                          [](const std::string& v) { return v.rfind("pce below minimum", 0) == 0; }));
    }
    SUBCASE("reference balanced design") {
        const auto d = reference_balanced_design();
        CHECK(bound_violations(d).empty());
        const auto o = evaluate_design(d, ev);
        CHECK((o.pce > 0.0 && o.pce < 1.0));
        CHECK((o.etr >= 0.0 && o.etr <= 1.0));
    }
    SUBCASE("ETR equals the trap occupancy of the filtered mixture") {
        // Direct propagation of the rate-weighted initial state.
        const DesignVector d{0.8, {{760.0, 120.0, 0.6}, {830.0, 60.0, 0.4}}};
        const auto& ctx = ev.context();
        const auto rates = pumping_rates(filtered_spectrum(d.profile(), ctx.solar), ctx.system, ctx.pumping);
        const auto traj = propagate(ctx.system, ctx.bath, exciton_mixture(ctx.system, rates), ctx.etr.t_max_fs,
                                    ctx.dynamics, ctx.method);
        CHECK(evaluate_design(d, ev).etr_time_averaged == doctest::Approx(etr(traj, ctx.etr).normalized).epsilon(1e-10));
    }
    SUBCASE("ETR stays in [0, 1]") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 50; ++k) {
            const double w = u(rng);
            const DesignVector d{u(rng), {{380 + 520 * u(rng), 50 + 150 * u(rng), w}, {380 + 520 * u(rng), 50 + 150 * u(rng), 1 - w}}};
            const auto o = evaluate_design(d, ev);
            CHECK((o.etr >= 0.0 && o.etr <= 1.0 + 1e-12));
        }
    }
}

TEST_CASE("bound checker agrees with a brute-force check on 10^4 random designs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    const DesignBounds b;
    for (int trial = 0; trial < 10000; ++trial) {
        DesignVector d;
        d.t_peak = u(rng);
        const std::size_t n = 1 + trial % 2;
        double w1 = u(rng);
        if (trial % 5 == 0) w1 = std::clamp(w1, 0.0, 1.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double w = n == 1 ? (trial % 7 == 0 ? u(rng) : 1.0) : (k == 0 ? w1 : 1.0 - w1 + (trial % 11 == 0 ? 0.01 : 0.0));
            d.bands.push_back({300.0 + 700.0 * u(rng) / 1.4, 30.0 + 200.0 * u(rng) / 1.4, w});
        }
        bool ok = d.t_peak >= 0.0 && d.t_peak <= 1.0;
        double total = 0.0;
        for (const auto& band : d.bands) {
            ok = ok && band.center_nm >= 380.0 && band.center_nm <= 900.0 && band.fwhm_nm >= 50.0 &&
                 band.fwhm_nm <= 200.0 && band.weight >= 0.0;
            total += band.weight;
        }
        ok = ok && std::abs(total - 1.0) <= 1e-9;
        if (ok) {
            double tmax = 0.0;
            for (double l = 280.0; l <= 4000.0; l += 1.0) {
                double s = 0.0;
                for (const auto& band : d.bands)
                    s += band.weight * std::exp(-std::pow(l - band.center_nm, 2) / (2 * std::pow(band.sigma_nm(), 2)));
                tmax = std::max(tmax, d.t_peak * s);
            }
            ok = tmax <= 1.0 + 1e-9;
        }
        REQUIRE(bound_violations(d, b).empty() == ok);
    }
}

TEST_CASE("hypervolume and dominance") {
    CHECK(dominates(1, 1, 0, 1));
    CHECK_FALSE(dominates(1, 1, 1, 1));
    CHECK_FALSE(dominates(1, 0, 0, 1));
    CHECK(hypervolume_2d({{1.0, 1.0}}) == 1.0);
    CHECK(hypervolume_2d({{1.0, 0.5}, {0.5, 1.0}}) == doctest::Approx(0.75));
    CHECK(hypervolume_2d({{1.0, 0.5}, {0.5, 1.0}, {0.4, 0.4}}) == doctest::Approx(0.75));
    CHECK(hypervolume_2d({}) == 0.0);
}

TEST_CASE("surrogate front recovers the analytic Pareto set") {
    // f1 = x0, f2 = sqrt(1 - x0^2) x1: the front is the unit quarter circle,
    // whose dominated area is pi / 4.
    const GenericObjective obj = [](const std::vector<double>& x) -> std::optional<std::pair<double, double>> {
        return std::pair{x[0], std::sqrt(1.0 - x[0] * x[0]) * x[1]};
    };
    DEParams p;
    p.population = 20;
    p.generations = 200;
    p.seed = 3;
    const auto front = optimize_generic(3, obj, p);
    std::vector<std::pair<double, double>> pts;
    for (const auto& q : front) pts.emplace_back(q.f1, q.f2);
    const double hv = hypervolume_2d(pts);
    CHECK(hv <= std::numbers::pi / 4.0);
    CHECK(std::abs(hv - std::numbers::pi / 4.0) / (std::numbers::pi / 4.0) < 0.02);
    // Sorted by f1, strictly decreasing f2 is equivalent to mutual non-domination.
    CHECK(front.size() > 100);
    bool monotone = true;
    for (std::size_t a = 1; a < front.size(); ++a)
        monotone = monotone && front[a].f1 > front[a - 1].f1 && front[a].f2 < front[a - 1].f2;
    CHECK(monotone);
}

TEST_CASE("constrained surrogate rejects infeasible points") {
    const GenericObjective obj = [](const std::vector<double>& x) -> std::optional<std::pair<double, double>> {
        if (x[0] < 0.3) return std::nullopt;
        return std::pair{x[0], (1.0 - x[0]) * x[1]};
    };
    DEParams p;
    p.population = 10;
    p.generations = 20;
    const auto front = optimize_generic(2, obj, p);
    CHECK(front.size() > 10);
    for (const auto& q : front) CHECK(q.f1 >= 0.3);
}

TEST_CASE("Pareto search on the real objectives") {
    const auto front = optimize_pareto(evaluator(), small_params(42));
    REQUIRE_FALSE(front.members.empty());
    check_front(front);
    CHECK(front.evaluations >= front.feasible_evaluations);

    const auto again = optimize_pareto(evaluator(), small_params(42));
    REQUIRE(again.members.size() == front.members.size());
    for (std::size_t k = 0; k < front.members.size(); ++k) {
        CHECK(again.members[k].design.serialize() == front.members[k].design.serialize());
        CHECK(again.members[k].objectives.pce == front.members[k].objectives.pce);
        CHECK(again.members[k].objectives.etr == front.members[k].objectives.etr);
    }

    DEParams one = small_params(7);
    one.n_bands = 1;
    check_front(optimize_pareto(evaluator(), one));

    const auto named = select_named_configs(front);
    CHECK(named.energy_focused.objectives.pce >= named.balanced.objectives.pce);
    CHECK(named.balanced.objectives.pce >= named.agriculture_focused.objectives.pce);
    CHECK(named.agriculture_focused.objectives.etr >= named.balanced.objectives.etr);

    DEParams bad = small_params(1);
    bad.population = 4;
    CHECK_THROWS_AS(optimize_pareto(evaluator(), bad), std::invalid_argument);
}

TEST_CASE("named configurations") {
    ParetoFront single;
    single.members.push_back({DesignVector{0.5, {{700, 100, 1}}}, Objectives{0.2, 0.4, 0.3, true, {}, Method::redfield}});
    const auto n = select_named_configs(single);
    CHECK(n.balanced.design.serialize() == single.members[0].design.serialize());
    CHECK(n.energy_focused.design.serialize() == single.members[0].design.serialize());
    CHECK(n.agriculture_focused.design.serialize() == single.members[0].design.serialize());

    ParetoFront arc;
    for (int k = 0; k <= 10; ++k) {
        const double a = 0.05 * std::numbers::pi * k;
        arc.members.push_back({DesignVector{0.1 * k, {{700, 100, 1}}},
                               Objectives{0.15 + 0.1 * std::sin(a), std::cos(a), 0.0, true, {}, Method::redfield}});
    }
    const auto m = select_named_configs(arc);
    CHECK(m.energy_focused.objectives.pce == doctest::Approx(0.25));
    CHECK(m.agriculture_focused.objectives.etr == doctest::Approx(1.0));
    CHECK(m.balanced.design.t_peak == doctest::Approx(0.5));  // symmetric knee
    CHECK_THROWS_AS(select_named_configs(ParetoFront{}), std::invalid_argument);
}
