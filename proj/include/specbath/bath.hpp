// bath.hpp - structured harmonic environments and their correlation functions.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace specbath {

struct VibronicMode {
    double omega;        // cm^-1
    double huang_rhys;   // dimensionless S_k
    double gamma;        // cm^-1
    double reorganization() const { return huang_rhys * omega; }
};

/// Drude-Lorentz background plus underdamped vibronic modes at temperature T.
class BathSpec {
public:
    BathSpec(double drude_lambda, double drude_gamma, std::vector<VibronicMode> modes, double temperature);

    double drude_lambda() const { return drude_lambda_; }
    double drude_gamma() const { return drude_gamma_; }
    const std::vector<VibronicMode>& vibronic_modes() const { return modes_; }
    double temperature() const { return temperature_; }
    double beta() const;  // cm

    /// Total reorganization energy lambda_D + sum S_k omega_k.
    double total_reorganization() const;

    BathSpec with_temperature(double temperature) const;
    BathSpec scaled(double lambda_factor, double gamma_factor) const;

private:
    double drude_lambda_;
    double drude_gamma_;
    std::vector<VibronicMode> modes_;
    double temperature_;
};

/// FMO background (lambda = 35, gamma = 50 cm^-1) with the four tabulated
/// vibronic modes.
BathSpec default_fmo_bath(double temperature = 295.0);

/// Drude term plus the Lorentzian mode peaks exactly as tabulated:
/// 2 lambda gamma w/(w^2+gamma^2) + sum 2 lambda_k w_k^2 gamma_k/((w-w_k)^2+gamma_k^2).
double spectral_density_eval(double omega, const BathSpec& bath);

/// Drude contribution alone.
double drude_spectral_density(double omega, double lambda, double gamma);

/// Spectral density used for dynamics: Drude plus Brownian-oscillator modes
/// 2 lambda_k w_k^2 gamma_k w/((w_k^2-w^2)^2 + gamma_k^2 w^2). Accepts complex w.
std::complex<double> dynamical_spectral_density(std::complex<double> omega, const BathSpec& bath);
double dynamical_spectral_density(double omega, const BathSpec& bath);

enum class TermKind { drude, mode, matsubara };

/// One contribution c exp(-rate * w_to_fs * t) to C(t); c in cm^-2, rate in cm^-1.
struct ExponentialTerm {
    std::complex<double> coefficient;
    std::complex<double> rate;
    TermKind kind;
    std::size_t partner;  // index of the term whose rate is conj(rate)
};

struct CorrelationDecomposition {
    std::vector<ExponentialTerm> terms;
    std::size_t n_matsubara = 0;

    /// C(t) in cm^-2; negative t returns conj(C(-t)).
    std::complex<double> evaluate(double t_fs) const;
    /// One-sided transform int_0^inf C(t) e^{i w t} dt in cm^-1 (w in cm^-1).
    std::complex<double> half_fourier(double omega) const;
};

/// Pole expansion of C(t): exact Drude and mode poles plus n_matsubara
/// Matsubara terms.
CorrelationDecomposition decompose_correlation(const BathSpec& bath, std::size_t n_matsubara);

std::complex<double> bath_correlation(double t_fs, const BathSpec& bath, std::size_t n_matsubara);

}  // namespace specbath
