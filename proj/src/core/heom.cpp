#include "heom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "specbath/units.hpp"

namespace specbath::detail {

namespace {

using cd = std::complex<double>;
constexpr cd kI(0.0, 1.0);
constexpr std::size_t kMaxAuxiliaries = 4'000'000;

double binomial(long n, long k) {
    if (k < 0 || n < k) return 0.0;
    double r = 1.0;
    for (long i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

struct TermCounts {
    long modes = 0;
    long others = 0;
};

TermCounts count_terms(const ExcitonSystem& system, const CorrelationDecomposition& dec,
                       const HierarchyConfig& cfg) {
    TermCounts tc;
    std::size_t matsubara_seen = 0;
    for (const auto& term : dec.terms) {
        if (term.kind == TermKind::mode) ++tc.modes;
        else if (term.kind == TermKind::drude) ++tc.others;
        else if (matsubara_seen++ < cfg.explicit_matsubara) ++tc.others;
    }
    tc.modes *= static_cast<long>(system.n_sites());
    tc.others *= static_cast<long>(system.n_sites());
    return tc;
}

double count_auxiliaries(const TermCounts& tc, const HierarchyConfig& cfg) {
    double total = 0.0;
    const int kmax = std::min(cfg.mode_depth, cfg.depth);
    for (int k = 0; k <= kmax; ++k) {
        const double mode_ways = (k == 0) ? 1.0 : binomial(tc.modes + k - 1, k);
        total += mode_ways * binomial(tc.others + cfg.depth - k, cfg.depth - k);
    }
    return total;
}

// y += -i (H x - x H) for column-major d x d blocks with real H. Complex
// entries are handled as interleaved doubles so both products are real axpys.
template <int D>
inline void commutator_kernel(const double* h, const cd* xc, cd* yc, int d_runtime) {
    const int d = D > 0 ? D : d_runtime;
    const double* x = reinterpret_cast<const double*>(xc);
    double* y = reinterpret_cast<double*>(yc);
    double col[2 * (D > 0 ? D : 64)];
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < 2 * d; ++r) col[r] = 0.0;
        // (H x)(:, c) = sum_k H(:, k) x(k, c)
        for (int k = 0; k < d; ++k) {
            const double xr = x[2 * (c * d + k)];
            const double xi = x[2 * (c * d + k) + 1];
            const double* hk = h + k * d;
            for (int r = 0; r < d; ++r) {
                col[2 * r] += hk[r] * xr;
                col[2 * r + 1] += hk[r] * xi;
            }
        }
        // (x H)(:, c) = sum_k x(:, k) H(k, c)
        for (int k = 0; k < d; ++k) {
            const double hkc = h[c * d + k];
            const double* xk = x + 2 * k * d;
            for (int r = 0; r < 2 * d; ++r) col[r] -= xk[r] * hkc;
        }
        // y += -i col
        double* yc_col = y + 2 * c * d;
        for (int r = 0; r < d; ++r) {
            yc_col[2 * r] += col[2 * r + 1];
            yc_col[2 * r + 1] -= col[2 * r];
        }
    }
}

void commutator(const double* h, const cd* x, cd* y, int d) {
    switch (d) {
        case 2: commutator_kernel<2>(h, x, y, d); break;
        case 3: commutator_kernel<3>(h, x, y, d); break;
        case 7: commutator_kernel<7>(h, x, y, d); break;
        default:
            if (d > 64) throw std::invalid_argument("HEOM: at most 64 sites supported");
            commutator_kernel<0>(h, x, y, d);
            break;
    }
}

}  // namespace

std::size_t HeomSolver::count(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg) {
    const auto dec = decompose_correlation(bath, cfg.n_matsubara);
    return static_cast<std::size_t>(count_auxiliaries(count_terms(system, dec, cfg), cfg));
}

HeomSolver::HeomSolver(const ExcitonSystem& system, const BathSpec& bath, const HierarchyConfig& cfg,
                       const std::optional<ContinuousPumping>& pumping)
    : d_(static_cast<int>(system.n_sites())),
      block_(system.n_sites() * system.n_sites()),
      threshold_(cfg.truncation_threshold) {
    const double kappa = units::kCmToRadPerFs;
    h_ = system.hamiltonian() * kappa;

    const auto dec = decompose_correlation(bath, cfg.n_matsubara);
    const double planned = count_auxiliaries(count_terms(system, dec, cfg), cfg);
    if (planned > static_cast<double>(kMaxAuxiliaries))
        throw std::invalid_argument("HEOM: hierarchy of " + std::to_string(static_cast<long long>(planned)) +
                                    " auxiliaries exceeds the limit of " + std::to_string(kMaxAuxiliaries) +
                                    "; lower depth or mode_depth");

    // Terms per site; Matsubara terms beyond explicit_matsubara go to the terminator.
    std::vector<std::size_t> kept;
    double delta = 0.0;
    std::size_t matsubara_seen = 0;
    for (std::size_t j = 0; j < dec.terms.size(); ++j) {
        const auto& t = dec.terms[j];
        if (t.kind == TermKind::matsubara && matsubara_seen++ >= cfg.explicit_matsubara) {
            delta += (t.coefficient / t.rate).real();
            continue;
        }
        kept.push_back(j);
    }
    terminator_ = delta * kappa;
    for (int m = 0; m < d_; ++m) {
        for (std::size_t j : kept) {
            const auto& t = dec.terms[j];
            // Conjugate partners share one scale so that rho~_n^+ = rho~_nbar survives filtering.
            const double magnitude = 0.5 * (std::abs(t.coefficient) + std::abs(dec.terms[t.partner].coefficient));
            terms_.push_back({m, t.coefficient, std::conj(dec.terms[t.partner].coefficient), t.rate,
                              magnitude > 0.0 ? std::sqrt(magnitude) : 1.0, t.kind == TermKind::mode});
        }
    }
    const int n_terms = static_cast<int>(terms_.size());

    // Enumerate multi-indices depth-first; the zero index comes first.
    std::vector<std::string> indices;
    std::unordered_map<std::string, int> lookup;
    std::string cur(static_cast<std::size_t>(n_terms), '\0');
    auto enumerate = [&](auto&& self, int j, int budget, int mode_budget) -> void {
        if (j == n_terms) {
            lookup.emplace(cur, static_cast<int>(indices.size()));
            indices.push_back(cur);
            return;
        }
        const int cap = terms_[j].is_mode ? std::min(budget, mode_budget) : budget;
        for (int v = 0; v <= cap; ++v) {
            cur[j] = static_cast<char>(v);
            self(self, j + 1, budget - v, terms_[j].is_mode ? mode_budget - v : mode_budget);
        }
        cur[j] = 0;
    };
    enumerate(enumerate, 0, cfg.depth, cfg.mode_depth);
    n_ados_ = indices.size();

    damping_.assign(n_ados_, cd(0.0, 0.0));
    link_offset_.assign(n_ados_ + 1, 0);
    for (std::size_t a = 0; a < n_ados_; ++a) {
        std::string& n = indices[a];
        int total = 0, mode_total = 0;
        for (int j = 0; j < n_terms; ++j) {
            total += n[j];
            if (terms_[j].is_mode) mode_total += n[j];
        }
        for (int j = 0; j < n_terms; ++j) {
            const Term& term = terms_[j];
            const int nj = n[j];
            damping_[a] += static_cast<double>(nj) * term.rate * kappa;
            const bool can_raise = total < cfg.depth && (!term.is_mode || mode_total < cfg.mode_depth);
            if (can_raise) {
                ++n[j];
                const int nb = lookup.at(n);
                --n[j];
                const cd alpha = -kI * term.scale * std::sqrt(nj + 1.0) * kappa;
                links_.push_back({nb, term.site, alpha, -alpha});
            }
            if (nj > 0) {
                --n[j];
                const int nb = lookup.at(n);
                ++n[j];
                const cd beta = -kI * std::sqrt(static_cast<double>(nj)) / term.scale * kappa;
                links_.push_back({nb, term.site, beta * term.c, -beta * term.c_tilde});
            }
        }
        link_offset_[a + 1] = links_.size();
    }

    if (pumping) {
        if (pumping->exciton_rates.size() != d_)
            throw std::invalid_argument("ContinuousPumping: one rate per exciton state");
        const auto basis = system.exciton_basis();
        pump_sigma_ = (basis.vectors * pumping->exciton_rates.asDiagonal() * basis.vectors.transpose()).cast<cd>() /
                      units::kFsPerPs;
        pump_total_ = pumping->exciton_rates.sum() / units::kFsPerPs;
    }

    const std::size_t len = n_ados_ * block_;
    x_.assign(len, cd(0.0, 0.0));
    k_.assign(len, cd(0.0, 0.0));
    acc_.assign(len, cd(0.0, 0.0));
    stage_.assign(len, cd(0.0, 0.0));
    active_.assign(n_ados_, 0);
}

void HeomSolver::set_initial(const Eigen::MatrixXcd& rho0) {
    std::fill(x_.begin(), x_.end(), cd(0.0, 0.0));
    std::fill(stage_.begin(), stage_.end(), cd(0.0, 0.0));
    std::fill(active_.begin(), active_.end(), 0);
    std::copy(rho0.data(), rho0.data() + block_, x_.begin());
    active_[0] = 1;
    refresh_compute_set();
}

void HeomSolver::refresh_compute_set() {
    std::vector<char> flag(n_ados_, 0);
    for (std::size_t a = 0; a < n_ados_; ++a) {
        if (!active_[a]) continue;
        flag[a] = 1;
        for (std::size_t l = link_offset_[a]; l < link_offset_[a + 1]; ++l) flag[links_[l].neighbor] = 1;
    }
    // Stage buffers of auxiliaries leaving the set must read as zero.
    for (int a : compute_)
        if (!flag[a]) std::fill_n(stage_.begin() + a * block_, block_, cd(0.0, 0.0));
    compute_.clear();
    for (std::size_t a = 0; a < n_ados_; ++a)
        if (flag[a]) compute_.push_back(static_cast<int>(a));
}

std::size_t HeomSolver::active_count() const {
    return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), 1));
}

void HeomSolver::derivative(const cd* x, cd* out) const {
    const int d = d_;
    const double* h = h_.data();
    for (int a : compute_) {
        const cd* xa = x + a * block_;
        cd* ya = out + a * block_;
        const cd damp = damping_[a];
        for (std::size_t e = 0; e < block_; ++e) ya[e] = -damp * xa[e];
        if (terminator_ != 0.0) {
            const double rate = 2.0 * terminator_;
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r)
                    if (r != c) ya[c * d + r] -= rate * xa[c * d + r];
        }
        commutator(h, xa, ya, d);
        for (std::size_t l = link_offset_[a]; l < link_offset_[a + 1]; ++l) {
            const Link& link = links_[l];
            const cd* nb = x + link.neighbor * block_;
            const int m = link.site;
            for (int c = 0; c < d; ++c) ya[c * d + m] += link.row_factor * nb[c * d + m];
            for (int r = 0; r < d; ++r) ya[m * d + r] += link.col_factor * nb[m * d + r];
        }
        if (pump_total_ > 0.0) {
            for (std::size_t e = 0; e < block_; ++e) ya[e] -= pump_total_ * xa[e];
            if (a == 0) {
                cd trace(0.0, 0.0);
                for (int i = 0; i < d; ++i) trace += xa[i * d + i];
                for (std::size_t e = 0; e < block_; ++e) ya[e] += pump_sigma_.data()[e] * trace;
            }
        }
    }
}

void HeomSolver::step(double h) {
    const std::size_t b = block_;
    auto for_compute = [&](auto&& fn) {
        for (int a : compute_) {
            const std::size_t base = a * b;
            for (std::size_t e = base; e < base + b; ++e) fn(e);
        }
    };
    derivative(x_.data(), k_.data());
    for_compute([&](std::size_t e) {
        acc_[e] = x_[e] + (h / 6.0) * k_[e];
        stage_[e] = x_[e] + (0.5 * h) * k_[e];
    });
    derivative(stage_.data(), k_.data());
    for_compute([&](std::size_t e) {
        acc_[e] += (h / 3.0) * k_[e];
        stage_[e] = x_[e] + (0.5 * h) * k_[e];
    });
    derivative(stage_.data(), k_.data());
    for_compute([&](std::size_t e) {
        acc_[e] += (h / 3.0) * k_[e];
        stage_[e] = x_[e] + h * k_[e];
    });
    derivative(stage_.data(), k_.data());
    for_compute([&](std::size_t e) { x_[e] = acc_[e] + (h / 6.0) * k_[e]; });

    for (int a : compute_) {
        if (a == 0) continue;
        const std::size_t base = a * b;
        double peak = 0.0;
        for (std::size_t e = base; e < base + b; ++e) peak = std::max(peak, std::norm(x_[e]));
        if (peak < threshold_ * threshold_) {
            std::fill_n(x_.begin() + base, b, cd(0.0, 0.0));
            active_[a] = 0;
        } else {
            active_[a] = 1;
        }
    }
    refresh_compute_set();
}

Eigen::MatrixXcd HeomSolver::system_state() const {
    Eigen::MatrixXcd rho(d_, d_);
    std::copy(x_.begin(), x_.begin() + block_, rho.data());
    return rho;
}

}  // namespace specbath::detail
