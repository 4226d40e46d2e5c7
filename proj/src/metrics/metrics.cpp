#include "specbath/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace specbath {

namespace {

using cd = std::complex<double>;

// Eigenvalues below this are rounding noise of a rank-deficient state.
constexpr double kEigenFloor = 1e-15;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hermitian_eigen(const Eigen::MatrixXcd& rho) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(0.5 * (rho + rho.adjoint()));
}

void require_square(const Eigen::MatrixXcd& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument(std::string(what) + ": matrix must be square");
}

}  // namespace

double l1_coherence(const Eigen::MatrixXcd& rho) {
    require_square(rho, "l1_coherence");
    return rho.cwiseAbs().sum() - rho.diagonal().cwiseAbs().sum();
}

CoherenceFit fit_coherence_decay(const std::vector<double>& times_fs, const std::vector<double>& magnitudes) {
    if (times_fs.size() != magnitudes.size() || times_fs.empty())
        throw std::invalid_argument("fit_coherence_decay: times and magnitudes must be non-empty and equal length");
    const double c0 = magnitudes.front();
    if (!(c0 > 1e-6)) throw std::invalid_argument("fit_coherence_decay: |c(0)| must exceed 1e-6");
    std::vector<double> t, y;
    for (std::size_t k = 0; k < times_fs.size(); ++k) {
        if (magnitudes[k] > 0.05 * c0) {
            t.push_back(times_fs[k]);
            y.push_back(std::log(magnitudes[k]));
        }
    }
    if (t.size() < 5) throw std::invalid_argument("fit_coherence_decay: fewer than 5 points above 5% of |c(0)|");
    const double n = static_cast<double>(t.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        st += t[k];
        sy += y[k];
        stt += t[k] * t[k];
        sty += t[k] * y[k];
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    const double intercept = (sy - slope * st) / n;
    double ss = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) ss += std::pow(y[k] - intercept - slope * t[k], 2);
    // A flat series fits to a slope at rounding level; treat it as no decay.
    const double tau = slope < -1e-12 ? -1.0 / slope : std::numeric_limits<double>::infinity();
    return {tau, std::sqrt(ss / n), t.size()};
}

CoherenceFit coherence_lifetime(const Trajectory& traj, std::size_t i, std::size_t j) {
    if (i == j || i >= static_cast<std::size_t>(traj.dim()) || j >= static_cast<std::size_t>(traj.dim()))
        throw std::invalid_argument("coherence_lifetime: need two distinct valid sites");
    std::vector<double> mags;
    for (const auto& c : traj.element(i, j)) mags.push_back(std::abs(c));
    return fit_coherence_decay(traj.times(), mags);
}

double ipr(const Eigen::VectorXd& p) {
    if (p.size() == 0) throw std::invalid_argument("ipr: empty distribution");
    if ((p.array() < -1e-12).any()) throw std::invalid_argument("ipr: negative probability");
    if (std::abs(p.sum() - 1.0) > 1e-8) throw std::invalid_argument("ipr: probabilities must sum to 1");
    return 1.0 / p.squaredNorm();
}

PurityEntropies purity_entropies(const Eigen::MatrixXcd& rho) {
    require_square(rho, "purity_entropies");
    const auto eig = hermitian_eigen(rho);
    const double d = static_cast<double>(rho.rows());
    double purity = 0.0, s = 0.0;
    for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
        const double l = eig.eigenvalues()(k);
        purity += l * l;
        if (l > kEigenFloor) s -= l * std::log(l);
    }
    const double linear = d > 1 ? d / (d - 1.0) * (1.0 - purity) : 0.0;
    return {purity, std::max(0.0, s), linear};
}

double qfi(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& generator) {
    require_square(rho, "qfi");
    if (generator.rows() != rho.rows() || generator.cols() != rho.cols())
        throw std::invalid_argument("qfi: generator dimension mismatch");
    if ((generator - generator.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, generator.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("qfi: generator must be Hermitian");
    const auto eig = hermitian_eigen(rho);
    const Eigen::VectorXd l = eig.eigenvalues();
    const Eigen::MatrixXcd o = eig.eigenvectors().adjoint() * generator * eig.eigenvectors();
    double f = 0.0;
    for (Eigen::Index k = 0; k < l.size(); ++k) {
        for (Eigen::Index m = 0; m < l.size(); ++m) {
            const double s = l(k) + l(m);
            if (s <= 1e-12) continue;
            f += (l(k) - l(m)) * (l(k) - l(m)) / s * std::norm(o(k, m));
        }
    }
    return 2.0 * f;
}

double wootters_concurrence(const Eigen::Matrix4cd& rho) {
    // lambda_i are the singular values of A^T Y A with rho = A A^dagger and
    // Y = sigma_y (x) sigma_y, equivalently sqrt(eig(rho rho~)).
    Eigen::Matrix4cd y = Eigen::Matrix4cd::Zero();
    y(0, 3) = y(3, 0) = -1.0;
    y(1, 2) = y(2, 1) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(0.5 * (rho + rho.adjoint()));
    Eigen::Matrix4cd a = eig.eigenvectors();
    for (int k = 0; k < 4; ++k) {
        const double l = eig.eigenvalues()(k);
        a.col(k) *= l > kEigenFloor ? std::sqrt(l) : 0.0;
    }
    const Eigen::Matrix4cd tau = a.transpose() * y * a;
    Eigen::Vector4d s = Eigen::JacobiSVD<Eigen::Matrix4cd>(tau).singularValues();
    std::sort(s.data(), s.data() + 4, std::greater<>());
    return std::max(0.0, s(0) - s(1) - s(2) - s(3));
}

double pairwise_concurrence(const Eigen::MatrixXcd& rho, std::size_t i, std::size_t j) {
    require_square(rho, "pairwise_concurrence");
    const auto d = static_cast<std::size_t>(rho.rows());
    if (i >= d || j >= d || i == j) throw std::invalid_argument("pairwise_concurrence: need two distinct valid sites");
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    // Qubit order (i, j): |10> = excitation on i, |01> = excitation on j.
    Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
    const double pi = rho(ii, ii).real(), pj = rho(jj, jj).real();
    r(0, 0) = std::max(0.0, 1.0 - pi - pj);
    r(1, 1) = pj;
    r(2, 2) = pi;
    r(1, 2) = rho(jj, ii);
    r(2, 1) = rho(ii, jj);
    return std::min(1.0, wootters_concurrence(r));
}

void ETRConfig::validate() const {
    if (!(k_rc_per_ps > 0.0)) throw std::invalid_argument("ETRConfig: k_rc must be positive");
    if (!(t_max_fs > 0.0)) throw std::invalid_argument("ETRConfig: t_max must be positive");
}

ETRResult etr(const std::vector<double>& t, const std::vector<double>& p, const ETRConfig& cfg) {
    cfg.validate();
    if (t.size() != p.size() || t.size() < 2) throw std::invalid_argument("etr: need at least two samples");
    if (cfg.t_max_fs > t.back() * (1.0 + 1e-12))
        throw std::invalid_argument("etr: t_max " + std::to_string(cfg.t_max_fs) + " fs exceeds trajectory horizon " +
                                    std::to_string(t.back()) + " fs");
    double integral = 0.0;
    for (std::size_t k = 1; k < t.size() && t[k - 1] < cfg.t_max_fs; ++k) {
        double t1 = t[k], p1 = p[k];
        if (t1 > cfg.t_max_fs) {
            p1 = p[k - 1] + (p[k] - p[k - 1]) * (cfg.t_max_fs - t[k - 1]) / (t[k] - t[k - 1]);
            t1 = cfg.t_max_fs;
        }
        integral += 0.5 * (t1 - t[k - 1]) * (p[k - 1] + p1);
    }
    return {cfg.k_rc_per_ps * integral / 1000.0, integral / cfg.t_max_fs, cfg.k_rc_per_ps, cfg.t_max_fs};
}

ETRResult etr(const Trajectory& traj, const ETRConfig& cfg) {
    if (cfg.trap_site >= static_cast<std::size_t>(traj.dim())) throw std::invalid_argument("etr: trap site out of range");
    return etr(traj.times(), traj.population(cfg.trap_site), cfg);
}

double quantum_advantage(double etr_nonmarkov, double etr_markov) {
    if (etr_markov == 0.0) throw std::invalid_argument("quantum_advantage: Markovian ETR is zero");
    if (!(etr_markov > 0.0)) throw std::invalid_argument("quantum_advantage: Markovian ETR must be positive");
    return etr_nonmarkov / etr_markov - 1.0;
}

void MetricSeries::write_csv(std::ostream& out) const {
    out << "time_fs," << name << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < times.size(); ++k) out << times[k] << ',' << values[k] << '\n';
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"l1_coherence",   "purity", "von_neumann",    "linear_entropy",
                                                "population_ipr", "qfi",    "concurrence", "trap_population"};
    return names;
}

MetricSeries metric_series(const Trajectory& traj, const ExcitonSystem& system, const std::string& name,
                           const MetricOptions& opts) {
    if (std::find(metric_names().begin(), metric_names().end(), name) == metric_names().end())
        throw std::invalid_argument("metric_series: unknown metric '" + name + "'");
    if (static_cast<std::size_t>(traj.dim()) != system.n_sites())
        throw std::invalid_argument("metric_series: trajectory and system dimensions differ");
    MetricSeries s{name, {}, traj.times(), {}};
    s.values.reserve(traj.size());
    Eigen::MatrixXcd gen;
    if (name == "qfi") {
        gen = opts.generator.size() ? opts.generator : Eigen::MatrixXcd(system.hamiltonian().cast<cd>());
        s.parameters["generator"] = opts.generator.size() ? "user" : "H_S (cm^-1)";
    }
    if (name == "concurrence") {
        s.parameters["site_i"] = std::to_string(opts.site_i);
        s.parameters["site_j"] = std::to_string(opts.site_j);
    }
    if (name == "trap_population") s.parameters["trap_site"] = std::to_string(system.trap_site());
    if (name == "population_ipr") s.parameters["input"] = "site populations";
    for (const auto& st : traj.states()) {
        const auto& rho = st.matrix();
        double v = 0.0;
        if (name == "l1_coherence") {
            v = l1_coherence(rho);
        } else if (name == "purity" || name == "von_neumann" || name == "linear_entropy") {
            const auto pe = purity_entropies(rho);
            v = name == "purity" ? pe.purity : name == "von_neumann" ? pe.von_neumann : pe.linear_entropy;
        } else if (name == "population_ipr") {
            Eigen::VectorXd p = st.populations().cwiseMax(0.0);
            v = ipr(p / p.sum());
        } else if (name == "qfi") {
            v = qfi(rho, gen);
        } else if (name == "concurrence") {
            v = pairwise_concurrence(rho, opts.site_i, opts.site_j);
        } else {
            v = rho(static_cast<Eigen::Index>(system.trap_site()), static_cast<Eigen::Index>(system.trap_site())).real();
        }
        s.values.push_back(v);
    }
    return s;
}

}  // namespace specbath
