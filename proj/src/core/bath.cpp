#include "specbath/bath.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "specbath/units.hpp"

namespace specbath {

namespace {

using cd = std::complex<double>;

cd coth(cd z) { return 1.0 / std::tanh(z); }

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("BathSpec: ") + what + " must be > 0");
}

}  // namespace

BathSpec::BathSpec(double drude_lambda, double drude_gamma, std::vector<VibronicMode> modes, double temperature)
    : drude_lambda_(drude_lambda), drude_gamma_(drude_gamma), modes_(std::move(modes)), temperature_(temperature) {
    if (!(drude_lambda_ >= 0.0) || !std::isfinite(drude_lambda_))
        throw std::invalid_argument("BathSpec: drude_lambda must be >= 0");
    require_positive(drude_gamma_, "drude_gamma");
    require_positive(temperature_, "temperature");
    for (const auto& m : modes_) {
        require_positive(m.omega, "mode frequency");
        require_positive(m.gamma, "mode damping");
        if (!(m.huang_rhys >= 0.0) || !std::isfinite(m.huang_rhys))
            throw std::invalid_argument("BathSpec: Huang-Rhys factor must be >= 0");
    }
}

double BathSpec::beta() const { return units::inverse_temperature(temperature_); }

double BathSpec::total_reorganization() const {
    double total = drude_lambda_;
    for (const auto& m : modes_) total += m.reorganization();
    return total;
}

BathSpec BathSpec::with_temperature(double temperature) const {
    return BathSpec(drude_lambda_, drude_gamma_, modes_, temperature);
}

BathSpec BathSpec::scaled(double lambda_factor, double gamma_factor) const {
    std::vector<VibronicMode> modes = modes_;
    for (auto& m : modes) {
        m.huang_rhys *= lambda_factor;
        m.gamma *= gamma_factor;
    }
    return BathSpec(drude_lambda_ * lambda_factor, drude_gamma_ * gamma_factor, std::move(modes), temperature_);
}

BathSpec default_fmo_bath(double temperature) {
    return BathSpec(35.0, 50.0,
                    {{150.0, 0.05, 10.0}, {200.0, 0.02, 10.0}, {575.0, 0.01, 20.0}, {1185.0, 0.005, 30.0}},
                    temperature);
}

double drude_spectral_density(double omega, double lambda, double gamma) {
    return 2.0 * lambda * gamma * omega / (omega * omega + gamma * gamma);
}

double spectral_density_eval(double omega, const BathSpec& bath) {
    if (!(omega >= 0.0)) throw std::invalid_argument("spectral_density_eval: omega must be >= 0");
    double j = drude_spectral_density(omega, bath.drude_lambda(), bath.drude_gamma());
    for (const auto& m : bath.vibronic_modes()) {
        const double d = omega - m.omega;
        j += 2.0 * m.reorganization() * m.omega * m.omega * m.gamma / (d * d + m.gamma * m.gamma);
    }
    return j;
}

cd dynamical_spectral_density(cd omega, const BathSpec& bath) {
    const double lam = bath.drude_lambda();
    const double gam = bath.drude_gamma();
    cd j = 2.0 * lam * gam * omega / (omega * omega + gam * gam);
    for (const auto& m : bath.vibronic_modes()) {
        const double w0 = m.omega;
        const cd a = w0 * w0 - omega * omega;
        j += 2.0 * m.reorganization() * w0 * w0 * m.gamma * omega / (a * a + m.gamma * m.gamma * omega * omega);
    }
    return j;
}

double dynamical_spectral_density(double omega, const BathSpec& bath) {
    return dynamical_spectral_density(cd(omega, 0.0), bath).real();
}

CorrelationDecomposition decompose_correlation(const BathSpec& bath, std::size_t n_matsubara) {
    const double beta = bath.beta();
    const cd i(0.0, 1.0);
    CorrelationDecomposition out;
    out.n_matsubara = n_matsubara;

    // Each pole p in the lower half plane contributes -i Res[J](p) (1 + coth(beta p/2)) e^{-i p t}.
    auto pole_coefficient = [&](cd residue, cd pole) { return -i * residue * (1.0 + coth(0.5 * beta * pole)); };

    if (bath.drude_lambda() > 0.0) {
        const double lam = bath.drude_lambda();
        const double gam = bath.drude_gamma();
        const cd pole(0.0, -gam);
        const std::size_t idx = out.terms.size();
        out.terms.push_back({pole_coefficient(lam * gam, pole), i * pole, TermKind::drude, idx});
    }

    for (const auto& m : bath.vibronic_modes()) {
        if (m.huang_rhys == 0.0) continue;
        const double w0 = m.omega;
        const double g = m.gamma;
        const cd omega_bar = std::sqrt(cd(w0 * w0 - 0.25 * g * g, 0.0));
        if (std::abs(omega_bar) < 1e-9 * w0)
            throw std::invalid_argument("decompose_correlation: critically damped mode has a double pole");
        const cd poles[4] = {omega_bar - 0.5 * i * g, -omega_bar - 0.5 * i * g, std::conj(omega_bar) + 0.5 * i * g,
                             -std::conj(omega_bar) + 0.5 * i * g};
        const double numerator_scale = 2.0 * m.reorganization() * w0 * w0 * g;
        const std::size_t first = out.terms.size();
        for (int k = 0; k < 2; ++k) {
            cd denom(1.0, 0.0);
            for (int q = 0; q < 4; ++q)
                if (q != k) denom *= poles[k] - poles[q];
            const cd residue = numerator_scale * poles[k] / denom;
            out.terms.push_back({pole_coefficient(residue, poles[k]), i * poles[k], TermKind::mode, 0});
        }
        // Underdamped: the two rates are complex conjugates. Overdamped: both real, self-partnered.
        const bool underdamped = w0 * w0 > 0.25 * g * g;
        out.terms[first].partner = underdamped ? first + 1 : first;
        out.terms[first + 1].partner = underdamped ? first : first + 1;
    }

    for (std::size_t n = 1; n <= n_matsubara; ++n) {
        const double nu = 2.0 * std::numbers::pi * static_cast<double>(n) / beta;
        const cd c = -i * dynamical_spectral_density(cd(0.0, -nu), bath) * (2.0 / beta);
        const std::size_t idx = out.terms.size();
        out.terms.push_back({cd(c.real(), 0.0), cd(nu, 0.0), TermKind::matsubara, idx});
    }
    return out;
}

std::complex<double> CorrelationDecomposition::evaluate(double t_fs) const {
    if (t_fs < 0.0) return std::conj(evaluate(-t_fs));
    const double tau = units::kCmToRadPerFs * t_fs;
    cd sum(0.0, 0.0);
    for (const auto& term : terms) sum += term.coefficient * std::exp(-term.rate * tau);
    return sum;
}

std::complex<double> CorrelationDecomposition::half_fourier(double omega) const {
    const cd i(0.0, 1.0);
    cd sum(0.0, 0.0);
    for (const auto& term : terms) sum += term.coefficient / (term.rate - i * omega);
    return sum;
}

std::complex<double> bath_correlation(double t_fs, const BathSpec& bath, std::size_t n_matsubara) {
    return decompose_correlation(bath, n_matsubara).evaluate(t_fs);
}

}  // namespace specbath
