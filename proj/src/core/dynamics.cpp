#include "specbath/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "heom.hpp"
#include "specbath/hash.hpp"
#include "specbath/units.hpp"

namespace specbath {

namespace {

using cd = std::complex<double>;
constexpr cd kI(0.0, 1.0);

// ps^-1 -> fs^-1
constexpr double kPerPsToPerFs = 1.0 / units::kFsPerPs;

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Superoperators act on column-major vec(rho): vec(A X B) = (B^T kron A) vec(X).
Eigen::MatrixXcd left(const Eigen::MatrixXcd& a) {
    return kron(Eigen::MatrixXcd::Identity(a.rows(), a.cols()), a);
}
Eigen::MatrixXcd right(const Eigen::MatrixXcd& b) {
    return kron(b.transpose(), Eigen::MatrixXcd::Identity(b.rows(), b.cols()));
}

Eigen::MatrixXcd lindblad(const Eigen::MatrixXcd& l) {
    const Eigen::MatrixXcd ldl = l.adjoint() * l;
    return kron(l.conjugate(), l) - 0.5 * left(ldl) - 0.5 * right(ldl);
}

Eigen::MatrixXcd commutator_super(const Eigen::MatrixXd& h) {
    const Eigen::MatrixXcd hc = h.cast<cd>();
    return -kI * (left(hc) - right(hc));
}

Eigen::MatrixXcd pumping_super(const ExcitonSystem& system, const ContinuousPumping& pump) {
    const auto n = static_cast<Eigen::Index>(system.n_sites());
    if (pump.exciton_rates.size() != n) throw std::invalid_argument("ContinuousPumping: one rate per exciton state");
    if ((pump.exciton_rates.array() < 0.0).any()) throw std::invalid_argument("ContinuousPumping: rates must be >= 0");
    const auto basis = system.exciton_basis();
    Eigen::MatrixXcd sigma = (basis.vectors * pump.exciton_rates.asDiagonal() * basis.vectors.transpose()).cast<cd>();
    Eigen::VectorXcd vec_sigma = Eigen::Map<Eigen::VectorXcd>(sigma.data(), n * n);
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd vec_id = Eigen::Map<Eigen::VectorXcd>(id.data(), n * n);
    const double total = pump.exciton_rates.sum();
    Eigen::MatrixXcd super = vec_sigma * vec_id.transpose() - total * Eigen::MatrixXcd::Identity(n * n, n * n);
    return super * kPerPsToPerFs;
}

// Markovian Redfield generator (fs^-1) built from the same correlation expansion as the hierarchy.
Eigen::MatrixXcd redfield_super(const ExcitonSystem& system, const BathSpec& bath, std::size_t n_matsubara,
                                bool secular) {
    const auto n = static_cast<Eigen::Index>(system.n_sites());
    const auto basis = system.exciton_basis();
    const auto dec = decompose_correlation(bath, n_matsubara);
    const Eigen::MatrixXcd u = basis.vectors.cast<cd>();
    Eigen::MatrixXcd gen = commutator_super(system.hamiltonian());
    for (Eigen::Index m = 0; m < n; ++m) {
        Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
        q(m, m) = 1.0;
        const Eigen::MatrixXcd qe = u.adjoint() * q * u;
        Eigen::MatrixXcd lam_e(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b)
                lam_e(a, b) = qe(a, b) * dec.half_fourier(basis.energies(b) - basis.energies(a));
        const Eigen::MatrixXcd lam = u * lam_e * u.adjoint();
        const Eigen::MatrixXcd lam_dag = lam.adjoint();
        // -[Q, Lambda rho - rho Lambda^+]
        gen += -left(q * lam) + kron(lam_dag.transpose(), q) + kron(q.transpose(), lam) - right(lam_dag * q);
    }
    if (secular) {
        // In the exciton basis keep only couplings between coherences oscillating at the same frequency.
        const Eigen::MatrixXcd s = kron(u.transpose(), u.adjoint());
        Eigen::MatrixXcd ge = s * gen * s.adjoint();
        const double tol = 1e-6 * (1.0 + basis.energies.cwiseAbs().maxCoeff());
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b)
                for (Eigen::Index c = 0; c < n; ++c)
                    for (Eigen::Index d = 0; d < n; ++d) {
                        const double w_ab = basis.energies(a) - basis.energies(b);
                        const double w_cd = basis.energies(c) - basis.energies(d);
                        if (std::abs(w_ab - w_cd) > tol) ge(b * n + a, d * n + c) = 0.0;
                    }
        gen = s.adjoint() * ge * s;
    }
    return gen * units::kCmToRadPerFs;
}

struct StoredState {
    double t;
    Eigen::MatrixXcd rho;
};

void record_diagnostics(TrajectoryMetadata& meta, const Eigen::MatrixXcd& rho) {
    const auto d = diagnose(rho);
    meta.max_trace_deviation = std::max(meta.max_trace_deviation, d.trace_deviation);
    meta.max_hermiticity_deviation = std::max(meta.max_hermiticity_deviation, d.hermiticity_deviation);
    meta.min_eigenvalue = std::min(meta.min_eigenvalue, d.min_eigenvalue);
}

std::size_t store_stride(const HierarchyConfig& cfg) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.store_interval_fs / cfg.dt)));
}

std::size_t step_count(double t_max, double dt) {
    return static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
}

void check_trace(const cd trace, std::size_t step) {
    if (!std::isfinite(trace.real()) || !std::isfinite(trace.imag()))
        throw PropagationError("non-finite density matrix", step);
    if (std::abs(trace - cd(1.0, 0.0)) > 1e-6)
        throw PropagationError("divergent propagation: trace drift " + std::to_string(std::abs(trace - 1.0)), step);
}

// Fixed-step RK4 for rho' = L(t) rho with generators constant over each step.
template <class GeneratorAt>
std::vector<StoredState> integrate_liouvillian(const Eigen::MatrixXcd& rho0, double t_max, const HierarchyConfig& cfg,
                                               GeneratorAt&& generator_at) {
    const Eigen::Index n = rho0.rows();
    Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n * n);
    std::vector<StoredState> out{{0.0, rho0}};
    const std::size_t steps = step_count(t_max, cfg.dt);
    const std::size_t stride = store_stride(cfg);
    double t = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double h = std::min(cfg.dt, t_max - t);
        // Rates switch on step boundaries, so one generator per step suffices.
        const Eigen::MatrixXcd& l = generator_at(t + 0.5 * h);
        const Eigen::VectorXcd k1 = l * x;
        const Eigen::VectorXcd k2 = l * (x + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = l * (x + 0.5 * h * k2);
        const Eigen::VectorXcd k4 = l * (x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (k + 1 == steps) ? t_max : t + h;
        cd trace(0.0, 0.0);
        for (Eigen::Index i = 0; i < n; ++i) trace += x(i * n + i);
        check_trace(trace, k + 1);
        if ((k + 1) % stride == 0 || k + 1 == steps) out.push_back({t, Eigen::Map<Eigen::MatrixXcd>(x.data(), n, n)});
    }
    return out;
}

std::string hash_inputs(const ExcitonSystem& system, const BathSpec& bath, const DensityMatrix& rho0, double t_max,
                        const HierarchyConfig& cfg, Method method, bool has_pump) {
    std::ostringstream s;
    s.precision(17);
    s << to_string(method) << ';' << t_max << ';';
    for (double e : system.site_energies()) s << e << ',';
    for (Eigen::Index k = 0; k < system.couplings().size(); ++k) s << system.couplings().data()[k] << ',';
    s << system.trap_site() << ';' << bath.drude_lambda() << ',' << bath.drude_gamma() << ',' << bath.temperature();
    for (const auto& m : bath.vibronic_modes()) s << ';' << m.omega << ',' << m.huang_rhys << ',' << m.gamma;
    s << ';' << cfg.depth << ',' << cfg.n_matsubara << ',' << cfg.truncation_threshold << ',' << cfg.dt << ','
      << cfg.mode_depth << ',' << cfg.explicit_matsubara << ',' << cfg.store_interval_fs << ','
      << cfg.redfield_secular << ';' << has_pump << ';';
    for (Eigen::Index k = 0; k < rho0.matrix().size(); ++k) s << rho0.matrix().data()[k] << ',';
    return hash_hex(s.str());
}

}  // namespace

void HierarchyConfig::validate() const {
    if (depth < 0) throw std::invalid_argument("HierarchyConfig: depth must be >= 0");
    if (mode_depth < 0) throw std::invalid_argument("HierarchyConfig: mode_depth must be >= 0");
    if (!(dt > 0.0) || dt > 2.0) throw std::invalid_argument("HierarchyConfig: dt must be in (0, 2] fs");
    if (!(truncation_threshold > 0.0) || truncation_threshold > 1e-6)
        throw std::invalid_argument("HierarchyConfig: truncation_threshold must be in (0, 1e-6]");
    if (explicit_matsubara > n_matsubara)
        throw std::invalid_argument("HierarchyConfig: explicit_matsubara exceeds n_matsubara");
    if (!(store_interval_fs > 0.0)) throw std::invalid_argument("HierarchyConfig: store_interval_fs must be > 0");
}

double DissipatorBundle::rate_at(double t_fs) const {
    double rate = 0.0;
    for (const auto& seg : schedule) {
        if (seg.t_start_fs <= t_fs) rate = seg.rate;
        else break;
    }
    return rate;
}

void SBDConfig::validate(std::size_t dim) const {
    if (bundles.empty()) throw std::invalid_argument("SBDConfig: at least one bundle required");
    for (const auto& b : bundles) {
        if (b.operators.empty()) throw std::invalid_argument("SBDConfig: bundle '" + b.label + "' has no operators");
        for (const auto& l : b.operators)
            if (l.rows() != static_cast<Eigen::Index>(dim) || l.cols() != static_cast<Eigen::Index>(dim))
                throw std::invalid_argument("SBDConfig: operator dimension mismatch in bundle '" + b.label + "'");
        if (b.schedule.empty() || b.schedule.front().t_start_fs != 0.0)
            throw std::invalid_argument("SBDConfig: schedule of '" + b.label + "' must start at t = 0");
        for (std::size_t k = 0; k < b.schedule.size(); ++k) {
            if (!(b.schedule[k].rate >= 0.0) || !std::isfinite(b.schedule[k].rate))
                throw std::invalid_argument("SBDConfig: rates must be non-negative");
            if (k > 0 && !(b.schedule[k].t_start_fs > b.schedule[k - 1].t_start_fs))
                throw std::invalid_argument("SBDConfig: schedule must be strictly increasing in time");
        }
    }
}

SBDConfig default_sbd_config(const ExcitonSystem& system, const BathSpec& bath) {
    const auto n = static_cast<Eigen::Index>(system.n_sites());
    const double beta = bath.beta();
    const double to_per_ps = units::kCmToRadPerFs * units::kFsPerPs;
    SBDConfig cfg;
    const double dephasing = 4.0 * bath.drude_lambda() / (beta * bath.drude_gamma()) * to_per_ps;
    if (dephasing > 0.0) {
        for (Eigen::Index m = 0; m < n; ++m) {
            Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
            p(m, m) = 1.0;
            cfg.bundles.push_back({"drude_dephasing_site_" + std::to_string(m + 1), {p}, {{0.0, dephasing}}});
        }
    }
    const auto basis = system.exciton_basis();
    double mean_gap = 0.0;
    int pairs = 0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b, ++pairs) mean_gap += std::abs(basis.energies(a) - basis.energies(b));
    if (pairs > 0) mean_gap /= pairs;
    if (mean_gap > 0.0) {
        const double occupation = 1.0 / std::expm1(beta * mean_gap);
        for (std::size_t k = 0; k < bath.vibronic_modes().size(); ++k) {
            const auto& mode = bath.vibronic_modes()[k];
            const BathSpec single(0.0, 1.0, {mode}, bath.temperature());
            const double rate = 2.0 * dynamical_spectral_density(mean_gap, single) * (occupation + 1.0) * to_per_ps;
            DissipatorBundle bundle{"vibronic_mode_" + std::to_string(k + 1), {}, {{0.0, rate}}};
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b) {
                    if (a == b) continue;
                    // |b><a| with site-overlap weight; uphill channels carry the Boltzmann factor.
                    double weight = 0.0;
                    for (Eigen::Index m = 0; m < n; ++m)
                        weight += std::pow(basis.vectors(m, a), 2) * std::pow(basis.vectors(m, b), 2);
                    const double gap = basis.energies(a) - basis.energies(b);
                    if (gap < 0.0) weight *= std::exp(beta * gap);
                    const Eigen::MatrixXcd op =
                        (std::sqrt(weight) * basis.vectors.col(b) * basis.vectors.col(a).transpose()).cast<cd>();
                    bundle.operators.push_back(op);
                }
            if (!bundle.operators.empty()) cfg.bundles.push_back(std::move(bundle));
        }
    }
    if (cfg.bundles.empty()) {
        cfg.bundles.push_back({"null", {Eigen::MatrixXcd::Zero(n, n)}, {{0.0, 0.0}}});
    }
    return cfg;
}

std::size_t hierarchy_size(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg) {
    cfg.validate();
    return detail::HeomSolver::count(system, bath, cfg);
}

Trajectory propagate(const ExcitonSystem& system, const BathSpec& bath, const DensityMatrix& rho0, double t_max_fs,
                     const HierarchyConfig& cfg, Method method, const std::optional<SBDConfig>& sbd,
                     const std::optional<ContinuousPumping>& pumping) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(system.n_sites());
    if (rho0.dim() != n) throw std::invalid_argument("propagate: rho0 dimension does not match the system");
    {
        const auto d = rho0.diagnostics();
        if (d.hermiticity_deviation > kHermiticityTolerance)
            throw std::invalid_argument("propagate: rho0 is not Hermitian");
        if (!d.valid()) throw std::invalid_argument("propagate: rho0 is not a valid density matrix");
    }
    if (!(t_max_fs > 0.0)) throw std::invalid_argument("propagate: t_max must be > 0");
    if ((method == Method::sbd) != sbd.has_value())
        throw std::invalid_argument("propagate: an SBDConfig is required iff method = sbd");

    TrajectoryMetadata meta;
    meta.config_hash = hash_inputs(system, bath, rho0, t_max_fs, cfg, method, pumping.has_value());
    meta.excitation_mode = pumping ? "continuous_pumping" : "initial_state";
    meta.dt_fs = cfg.dt;
    meta.n_matsubara = cfg.n_matsubara;

    std::vector<StoredState> stored;
    switch (method) {
        case Method::redfield: {
            Eigen::MatrixXcd gen = redfield_super(system, bath, cfg.n_matsubara, cfg.redfield_secular);
            if (pumping) gen += pumping_super(system, *pumping);
            stored = integrate_liouvillian(rho0.matrix(), t_max_fs, cfg, [&](double) -> const Eigen::MatrixXcd& {
                return gen;
            });
            break;
        }
        case Method::sbd: {
            sbd->validate(system.n_sites());
            Eigen::MatrixXcd base = commutator_super(system.hamiltonian()) * units::kCmToRadPerFs;
            if (pumping) base += pumping_super(system, *pumping);
            std::vector<Eigen::MatrixXcd> dissipators;
            for (const auto& b : sbd->bundles) {
                Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n * n, n * n);
                for (const auto& l : b.operators) d += lindblad(l);
                dissipators.push_back(d * kPerPsToPerFs);
            }
            // Generators are cached per distinct rate vector.
            std::vector<double> cached_rates;
            Eigen::MatrixXcd cached;
            stored = integrate_liouvillian(rho0.matrix(), t_max_fs, cfg, [&](double t) -> const Eigen::MatrixXcd& {
                std::vector<double> rates;
                for (const auto& b : sbd->bundles) rates.push_back(b.rate_at(t));
                if (rates != cached_rates || cached.size() == 0) {
                    cached = base;
                    for (std::size_t k = 0; k < rates.size(); ++k) cached += rates[k] * dissipators[k];
                    cached_rates = rates;
                }
                return cached;
            });
            break;
        }
        case Method::heom: {
            detail::HeomSolver solver(system, bath, cfg, pumping);
            meta.depth = cfg.depth;
            meta.mode_depth = cfg.mode_depth;
            meta.explicit_matsubara = cfg.explicit_matsubara;
            meta.truncation_threshold = cfg.truncation_threshold;
            meta.n_auxiliary = solver.size();
            const std::size_t steps = step_count(t_max_fs, cfg.dt);
            const std::size_t stride = store_stride(cfg);
            solver.set_initial(rho0.matrix());
            stored.push_back({0.0, rho0.matrix()});
            double t = 0.0;
            for (std::size_t k = 0; k < steps; ++k) {
                const double h = std::min(cfg.dt, t_max_fs - t);
                solver.step(h);
                t = (k + 1 == steps) ? t_max_fs : t + h;
                const Eigen::MatrixXcd rho = solver.system_state();
                check_trace(rho.trace(), k + 1);
                if ((k + 1) % stride == 0 || k + 1 == steps) stored.push_back({t, rho});
            }
            break;
        }
    }

    std::vector<double> times;
    std::vector<DensityMatrix> states;
    for (auto& s : stored) {
        record_diagnostics(meta, s.rho);
        times.push_back(s.t);
        states.push_back(DensityMatrix::unchecked(std::move(s.rho)));
    }
    return Trajectory(std::move(times), std::move(states), method, std::move(meta));
}

DensityMatrix thermal_state(const ExcitonSystem& system, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("thermal_state: temperature must be > 0");
    const auto basis = system.exciton_basis();
    const double beta = units::inverse_temperature(temperature);
    Eigen::VectorXd w = (-(basis.energies.array() - basis.energies.minCoeff()) * beta).exp();
    w /= w.sum();
    Eigen::MatrixXcd rho = (basis.vectors * w.asDiagonal() * basis.vectors.transpose()).cast<cd>();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    return DensityMatrix(std::move(rho));
}

DensityMatrix exciton_mixture(const ExcitonSystem& system, const Eigen::VectorXd& weights) {
    if (weights.size() != static_cast<Eigen::Index>(system.n_sites()))
        throw std::invalid_argument("exciton_mixture: one weight per exciton state required");
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("exciton_mixture: weights must be >= 0");
    const double total = weights.sum();
    if (!(total > 0.0)) throw std::invalid_argument("exciton_mixture: weights sum to zero");
    const auto basis = system.exciton_basis();
    Eigen::MatrixXcd rho = (basis.vectors * (weights / total).asDiagonal() * basis.vectors.transpose()).cast<cd>();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    return DensityMatrix(std::move(rho));
}

}  // namespace specbath
