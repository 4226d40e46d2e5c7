#include "specbath/exciton_system.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace specbath {

ExcitonSystem::ExcitonSystem(std::vector<double> site_energies, Eigen::MatrixXd couplings,
                             std::size_t trap_site)
    : site_energies_(std::move(site_energies)), couplings_(std::move(couplings)), trap_site_(trap_site) {
    const auto n = static_cast<Eigen::Index>(site_energies_.size());
    if (n == 0) throw std::invalid_argument("ExcitonSystem: no sites");
    if (couplings_.rows() != n || couplings_.cols() != n)
        throw std::invalid_argument("ExcitonSystem: coupling matrix must be " + std::to_string(n) + "x" +
                                    std::to_string(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (couplings_(i, i) != 0.0) throw std::invalid_argument("ExcitonSystem: coupling diagonal must be zero");
        for (Eigen::Index j = 0; j < i; ++j)
            if (couplings_(i, j) != couplings_(j, i))
                throw std::invalid_argument("ExcitonSystem: coupling matrix must be exactly symmetric");
    }
    if (!couplings_.allFinite()) throw std::invalid_argument("ExcitonSystem: non-finite coupling");
    for (double e : site_energies_)
        if (!std::isfinite(e)) throw std::invalid_argument("ExcitonSystem: non-finite site energy");
    if (trap_site_ >= site_energies_.size()) throw std::invalid_argument("ExcitonSystem: trap_site out of range");
}

ExcitonSystem ExcitonSystem::with_trap_site(std::size_t trap_site) const {
    return ExcitonSystem(site_energies_, couplings_, trap_site);
}

ExcitonSystem ExcitonSystem::with_site_energies(std::vector<double> site_energies) const {
    return ExcitonSystem(std::move(site_energies), couplings_, trap_site_);
}

Eigen::MatrixXd ExcitonSystem::hamiltonian() const {
    Eigen::MatrixXd h = couplings_;
    for (std::size_t i = 0; i < site_energies_.size(); ++i)
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = site_energies_[i];
    return h;
}

ExcitonBasis ExcitonSystem::exciton_basis() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian());
    return {solver.eigenvalues(), solver.eigenvectors()};
}

ExcitonSystem build_fmo_system(std::size_t trap_site) {
    std::vector<double> energies{12410, 12530, 12210, 12320, 12480, 12630, 12440};
    Eigen::MatrixXd j(7, 7);
    // clang-format off
    j <<   0.0, -87.7,   5.5,  -5.9,   6.7, -13.7,  -9.9,
         -87.7,   0.0,  30.8,   8.2,   0.7,  11.8,   4.3,
           5.5,  30.8,   0.0, -53.5,  -2.2,  -9.6,   6.0,
          -5.9,   8.2, -53.5,   0.0, -70.7, -17.0, -63.3,
           6.7,   0.7,  -2.2, -70.7,   0.0,  81.1,  -1.3,
         -13.7,  11.8,  -9.6, -17.0,  81.1,   0.0,  39.7,
          -9.9,   4.3,   6.0, -63.3,  -1.3,  39.7,   0.0;
    // clang-format on
    return ExcitonSystem(std::move(energies), std::move(j), trap_site);
}

ExcitonSystem apply_static_disorder(const ExcitonSystem& system, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("apply_static_disorder: sigma must be >= 0");
    if (sigma == 0.0) return system;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> offset(0.0, sigma);
    std::vector<double> energies = system.site_energies();
    for (double& e : energies) e += offset(rng);
    return system.with_site_energies(std::move(energies));
}

}  // namespace specbath
