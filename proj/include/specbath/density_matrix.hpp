// density_matrix.hpp - validated reduced density matrices.
#pragma once

#include <Eigen/Dense>

namespace specbath {

inline constexpr double kHermiticityTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPositivityTolerance = -1e-10;

struct DensityDiagnostics {
    double hermiticity_deviation;  // max |rho_ij - conj(rho_ji)|
    double trace_deviation;        // |Tr rho - 1|
    double min_eigenvalue;         // of the Hermitian part

    bool valid() const {
        return hermiticity_deviation <= kHermiticityTolerance && trace_deviation <= kTraceTolerance &&
               min_eigenvalue >= kPositivityTolerance;
    }
};

DensityDiagnostics diagnose(const Eigen::MatrixXcd& rho);

class DensityMatrix {
public:
    /// Throws std::invalid_argument unless rho is Hermitian, unit-trace and positive.
    explicit DensityMatrix(Eigen::MatrixXcd rho);

    /// Wraps without validation; used for propagated states, whose
    /// diagnostics are tracked separately.
    static DensityMatrix unchecked(Eigen::MatrixXcd rho);

    static DensityMatrix pure(const Eigen::VectorXcd& psi);
    static DensityMatrix site(std::size_t dim, std::size_t site);
    static DensityMatrix maximally_mixed(std::size_t dim);

    Eigen::Index dim() const { return rho_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return rho_; }
    std::complex<double> operator()(Eigen::Index i, Eigen::Index j) const { return rho_(i, j); }
    Eigen::VectorXd populations() const { return rho_.diagonal().real(); }
    DensityDiagnostics diagnostics() const { return diagnose(rho_); }

private:
    struct Unchecked {};
    DensityMatrix(Eigen::MatrixXcd rho, Unchecked) : rho_(std::move(rho)) {}
    Eigen::MatrixXcd rho_;
};

}  // namespace specbath
