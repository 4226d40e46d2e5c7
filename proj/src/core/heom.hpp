// heom.hpp - hierarchical equations of motion with site-projector coupling.
//
// Scaled auxiliaries (Shi et al. normalization) rho~_n with
//   d rho~_n/dt = -i[H, rho~_n] - sum_j n_j g_j rho~_n - 2 Delta offdiag(rho~_n)
//                 - i sum_j s_j sqrt(n_j+1) [Q_j, rho~_{n+e_j}]
//                 - i sum_j sqrt(n_j)/s_j (c_j Q_j rho~_{n-e_j} - ct_j rho~_{n-e_j} Q_j)
// where ct_j = conj(c_{partner(j)}), s_j = sqrt|c_j| and Delta collects the
// Matsubara terms folded into the Markovian terminator.
#pragma once

#include <optional>
#include <vector>

#include "specbath/dynamics.hpp"

namespace specbath::detail {

class HeomSolver {
public:
    HeomSolver(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg,
               const std::optional<ContinuousPumping>& pumping);

    static std::size_t count(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg);

    std::size_t size() const { return n_ados_; }
    void set_initial(const Eigen::MatrixXcd& rho0);
    void step(double h_fs);
    Eigen::MatrixXcd system_state() const;
    std::size_t active_count() const;

private:
    using cd = std::complex<double>;

    struct Term {
        int site;
        cd c;
        cd c_tilde;
        cd rate;
        double scale;
        bool is_mode;
    };
    struct Link {
        int neighbor;
        int site;
        cd row_factor;
        cd col_factor;
    };

    void derivative(const cd* x, cd* out) const;
    void refresh_compute_set();

    int d_;
    std::size_t n_ados_ = 0;
    std::size_t block_;
    Eigen::MatrixXd h_;
    double terminator_;
    double threshold_;
    std::vector<Term> terms_;
    std::vector<cd> damping_;
    std::vector<std::size_t> link_offset_;
    std::vector<Link> links_;
    std::vector<char> active_;
    std::vector<int> compute_;
    // Continuous pumping (fs^-1): source sigma and total rate.
    Eigen::MatrixXcd pump_sigma_;
    double pump_total_ = 0.0;

    std::vector<cd> x_, k_, acc_, stage_;
};

}  // namespace specbath::detail
