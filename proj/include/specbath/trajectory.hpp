// trajectory.hpp - time series of density matrices with provenance.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "specbath/density_matrix.hpp"

namespace specbath {

enum class Method { redfield, heom, sbd };

std::string to_string(Method method);
Method method_from_string(std::string_view name);

struct TrajectoryMetadata {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string excitation_mode = "initial_state";
    // Hierarchy settings actually used (zero for non-HEOM methods).
    int depth = 0;
    int mode_depth = 0;
    std::size_t n_matsubara = 0;
    std::size_t explicit_matsubara = 0;
    double truncation_threshold = 0.0;
    double dt_fs = 0.0;
    std::size_t n_auxiliary = 0;
    // Invariant diagnostics over all stored steps.
    double max_trace_deviation = 0.0;
    double max_hermiticity_deviation = 0.0;
    double min_eigenvalue = 1.0;
};

class Trajectory {
public:
    Trajectory(std::vector<double> times, std::vector<DensityMatrix> states, Method method,
               TrajectoryMetadata metadata = {});

    const std::vector<double>& times() const { return times_; }
    const std::vector<DensityMatrix>& states() const { return states_; }
    Method method() const { return method_; }
    const TrajectoryMetadata& metadata() const { return metadata_; }
    std::size_t size() const { return times_.size(); }
    Eigen::Index dim() const { return states_.front().dim(); }
    double horizon() const { return times_.back(); }

    /// Population of `site` at every stored time.
    std::vector<double> population(std::size_t site) const;
    /// rho_ij at every stored time.
    std::vector<std::complex<double>> element(std::size_t i, std::size_t j) const;

    /// True iff every stored state satisfies the density-matrix invariants.
    bool states_valid() const;

    /// CSV: `time_fs` then re_i_j, im_i_j in row-major order, preceded by
    /// `# ` comment lines from `header`.
    void write_csv(std::ostream& out, const std::vector<std::string>& header = {}) const;
    static Trajectory read_csv(std::istream& in, Method method, TrajectoryMetadata metadata = {});

private:
    std::vector<double> times_;
    std::vector<DensityMatrix> states_;
    Method method_;
    TrajectoryMetadata metadata_;
};

}  // namespace specbath
