// exciton_system.hpp - chromophore network Hamiltonians.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace specbath {

struct ExcitonBasis {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
};

/// Site energies (cm^-1), symmetric zero-diagonal couplings (cm^-1) and the
/// trap site whose population feeds the reaction centre.
class ExcitonSystem {
public:
    ExcitonSystem(std::vector<double> site_energies, Eigen::MatrixXd couplings,
                  std::size_t trap_site = 0);

    std::size_t n_sites() const { return site_energies_.size(); }
    const std::vector<double>& site_energies() const { return site_energies_; }
    const Eigen::MatrixXd& couplings() const { return couplings_; }
    std::size_t trap_site() const { return trap_site_; }

    ExcitonSystem with_trap_site(std::size_t trap_site) const;
    ExcitonSystem with_site_energies(std::vector<double> site_energies) const;

    /// H_S in the site basis: diag(site_energies) + couplings.
    Eigen::MatrixXd hamiltonian() const;

    /// Exciton energies (ascending) and eigenvectors as columns.
    ExcitonBasis exciton_basis() const;

private:
    std::vector<double> site_energies_;
    Eigen::MatrixXd couplings_;
    std::size_t trap_site_;
};

/// The seven-site FMO complex with the Adolphs-Renger parameters.
ExcitonSystem build_fmo_system(std::size_t trap_site = 0);

/// Copy of `system` with i.i.d. N(0, sigma^2) offsets on the site energies.
ExcitonSystem apply_static_disorder(const ExcitonSystem& system, double sigma, std::uint64_t seed);

}  // namespace specbath
