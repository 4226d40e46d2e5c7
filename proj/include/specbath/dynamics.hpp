// dynamics.hpp - reduced density matrix propagation (Redfield, HEOM, SBD).
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specbath/bath.hpp"
#include "specbath/density_matrix.hpp"
#include "specbath/exciton_system.hpp"
#include "specbath/trajectory.hpp"

namespace specbath {

struct HierarchyConfig {
    int depth = 5;                        // maximum total tier of an auxiliary density operator
    std::size_t n_matsubara = 12;         // Matsubara terms in the correlation expansion
    double truncation_threshold = 1e-8;   // auxiliaries below this magnitude are dropped each step
    double dt = 1.0;                      // fs
    int mode_depth = 1;                   // maximum summed tier over vibronic-mode terms
    std::size_t explicit_matsubara = 0;   // Matsubara terms resolved in the hierarchy; the rest are folded
                                          // into a Markovian terminator
    double store_interval_fs = 10.0;
    bool redfield_secular = true;         // secular (completely positive) Redfield; false keeps the
                                          // population-coherence couplings

    void validate() const;
};

/// Piecewise-constant rate: `rate` (ps^-1) applies from `t_start_fs` until the next segment.
struct RateSegment {
    double t_start_fs;
    double rate;
};

/// Lindblad channels sharing one time-dependent weight p_a(t):
/// D_a[rho] = p_a(t) sum_L (L rho L^+ - {L^+ L, rho}/2).
struct DissipatorBundle {
    std::string label;
    std::vector<Eigen::MatrixXcd> operators;  // site basis
    std::vector<RateSegment> schedule;        // sorted by t_start_fs, first segment starts at 0

    double rate_at(double t_fs) const;
};

struct SBDConfig {
    std::vector<DissipatorBundle> bundles;
    void validate(std::size_t dim) const;
};

/// One pure-dephasing bundle per site carrying the Drude dephasing rate
/// 4 lambda k_B T / gamma, and one exciton-relaxation bundle per vibronic mode
/// whose rate is the mode's spectral weight at the mean excitonic gap.
SBDConfig default_sbd_config(const ExcitonSystem& system, const BathSpec& bath);

/// Trace-preserving incoherent excitation: rho' += sum_mu r_mu |mu><mu| Tr(rho) - R rho,
/// with |mu> the exciton states and R = sum r_mu (ps^-1).
struct ContinuousPumping {
    Eigen::VectorXd exciton_rates;
};

class PropagationError : public std::runtime_error {
public:
    PropagationError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

Trajectory propagate(const ExcitonSystem& system, const BathSpec& bath, const DensityMatrix& rho0, double t_max_fs,
                     const HierarchyConfig& cfg, Method method, const std::optional<SBDConfig>& sbd = std::nullopt,
                     const std::optional<ContinuousPumping>& pumping = std::nullopt);

/// Number of auxiliary density operators the hierarchy would allocate.
std::size_t hierarchy_size(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg);

/// exp(-H_S / k_B T) / Z in the site basis.
DensityMatrix thermal_state(const ExcitonSystem& system, double temperature);

/// Mixture of exciton states with the given (unnormalized, non-negative) weights.
DensityMatrix exciton_mixture(const ExcitonSystem& system, const Eigen::VectorXd& weights);

}  // namespace specbath
