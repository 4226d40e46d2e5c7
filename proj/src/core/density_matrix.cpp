#include "specbath/density_matrix.hpp"

#include <sstream>
#include <stdexcept>

namespace specbath {

DensityDiagnostics diagnose(const Eigen::MatrixXcd& rho) {
    DensityDiagnostics d{};
    d.hermiticity_deviation = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    d.trace_deviation = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = solver.eigenvalues().minCoeff();
    return d;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
    if (rho_.rows() == 0 || rho_.rows() != rho_.cols())
        throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
    if (!rho_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
    const auto d = diagnose(rho_);
    std::ostringstream msg;
    if (d.hermiticity_deviation > kHermiticityTolerance)
        msg << "not Hermitian (deviation " << d.hermiticity_deviation << ")";
    else if (d.trace_deviation > kTraceTolerance)
        msg << "trace deviates from 1 by " << d.trace_deviation;
    else if (d.min_eigenvalue < kPositivityTolerance)
        msg << "negative eigenvalue " << d.min_eigenvalue;
    if (!msg.str().empty()) throw std::invalid_argument("DensityMatrix: " + msg.str());
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXcd rho) { return DensityMatrix(std::move(rho), Unchecked{}); }

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd v = psi / psi.norm();
    return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::site(std::size_t dim, std::size_t site) {
    if (site >= dim) throw std::invalid_argument("DensityMatrix::site: index out of range");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho(site, site) = 1.0;
    return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
    return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

}  // namespace specbath
