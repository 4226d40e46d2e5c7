// metrics.hpp - quantum-information and transport figures of merit.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "specbath/density_matrix.hpp"
#include "specbath/exciton_system.hpp"
#include "specbath/trajectory.hpp"

namespace specbath {

/// Sum of |rho_ij| over i != j.
double l1_coherence(const Eigen::MatrixXcd& rho);

struct CoherenceFit {
    double tau_fs;    // +infinity when the magnitude does not decay
    double residual;  // rms residual of the log-linear fit
    std::size_t points;
};

/// Least-squares fit of log|c(t)| = a - t/tau over the samples with
/// |c| > 0.05 |c(0)|. Throws when |c(0)| <= 1e-6 or fewer than five samples
/// qualify.
CoherenceFit fit_coherence_decay(const std::vector<double>& times_fs, const std::vector<double>& magnitudes);
CoherenceFit coherence_lifetime(const Trajectory& traj, std::size_t i, std::size_t j);

/// Inverse participation ratio 1 / sum p_n^2 of a probability vector.
double ipr(const Eigen::VectorXd& populations);

struct PurityEntropies {
    double purity;
    double von_neumann;
    double linear_entropy;
};

PurityEntropies purity_entropies(const Eigen::MatrixXcd& rho);

/// Quantum Fisher information for rotations exp(-i theta O) via the
/// eigendecomposition of rho; pairs with lambda_k + lambda_l <= 1e-12 are skipped.
double qfi(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& generator);

/// Wootters concurrence of the two-qubit state of sites (i, j) carved out of
/// a single-excitation density matrix; |00> carries 1 - p_i - p_j.
double pairwise_concurrence(const Eigen::MatrixXcd& rho, std::size_t i, std::size_t j);

/// Wootters concurrence of a general 4x4 two-qubit density matrix.
double wootters_concurrence(const Eigen::Matrix4cd& rho);

inline constexpr double kDefaultKrcPerPs = 1.0;

struct ETRConfig {
    double k_rc_per_ps = kDefaultKrcPerPs;
    double t_max_fs = 1000.0;
    std::size_t trap_site = 0;

    void validate() const;
};

struct ETRResult {
    double absolute;    // k_RC * int_0^t_max p_trap dt (dimensionless)
    double normalized;  // time-averaged trap population, in [0, 1]
    double k_rc_per_ps;
    double t_max_fs;
};

/// Trapezoidal integral of the trap population; a t_max between samples is
/// handled by linear interpolation.
ETRResult etr(const Trajectory& traj, const ETRConfig& cfg);
ETRResult etr(const std::vector<double>& times_fs, const std::vector<double>& trap_population, const ETRConfig& cfg);

/// eta_quantum = etr_nonmarkov / etr_markov - 1.
double quantum_advantage(double etr_nonmarkov, double etr_markov);

struct MetricSeries {
    std::string name;
    std::map<std::string, std::string> parameters;
    std::vector<double> times;
    std::vector<double> values;

    void write_csv(std::ostream& out) const;
};

/// Names accepted by metric_series: l1_coherence, purity, von_neumann,
/// linear_entropy, population_ipr, qfi, concurrence, trap_population.
const std::vector<std::string>& metric_names();

struct MetricOptions {
    std::size_t site_i = 0;
    std::size_t site_j = 1;
    /// QFI generator; empty means the system Hamiltonian in cm^-1.
    Eigen::MatrixXcd generator;
};

MetricSeries metric_series(const Trajectory& traj, const ExcitonSystem& system, const std::string& name,
                           const MetricOptions& opts = {});

}  // namespace specbath
