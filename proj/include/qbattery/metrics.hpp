#pragma once

// Figures of merit for the qubit battery: stored energy, ergotropy,
// efficiency, SNR, Bloch vector and purity, charging summaries, and the
// Fock-basis Wigner function. Energies are in units of omega_q.

#include <cmath>
#include <functional>
#include <limits>
#include <span>

#include "qbattery/hilbert.hpp"

namespace qb {

/// E = omega_q * rho_ee (units of omega_q).
inline double stored_energy(const Eigen::Matrix2cd& rho_b) {
    return rho_b(1, 1).real();
}

/// xi = E - 1/2 (1 - sqrt(1 - 4 det rho)); det clamped to [0, 1/4].
inline double ergotropy(const Eigen::Matrix2cd& rho_b) {
    const double e = stored_energy(rho_b);
    const double det = std::clamp(rho_b.determinant().real(), 0.0, 0.25);
    const double passive = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * det));
    return std::clamp(e - passive, 0.0, 1.0);
}

/// eta = xi / E, defined as 0 on an (essentially) empty battery.
inline double efficiency(const Eigen::Matrix2cd& rho_b) {
    const double e = stored_energy(rho_b);
    if (e < 1e-12) return 0.0;
    return ergotropy(rho_b) / e;
}

/// SNR = log10(E^2 / Var E) with Var E = E (omega_q - E) on a qubit.
/// Empty battery -> -inf; (numerically) zero variance at finite charge -> +inf.
inline double snr(const Eigen::Matrix2cd& rho_b) {
    const double e = stored_energy(rho_b);
    if (e <= 1e-15) return -std::numeric_limits<double>::infinity();
    const double var = e * (1.0 - e);
    if (var < 1e-15) return std::numeric_limits<double>::infinity();
    return std::log10(e * e / var);
}

/// (r_x, r_y, r_z) = (Tr[s_x rho], Tr[s_y rho], Tr[s_z rho]).
inline Eigen::Vector3d bloch_vector(const Eigen::Matrix2cd& rho_b) {
    return {2.0 * rho_b(0, 1).real(), 2.0 * rho_b(0, 1).imag(),
            (rho_b(1, 1) - rho_b(0, 0)).real()};
}

inline double purity(const Eigen::Matrix2cd& rho_b) {
    return (rho_b * rho_b).trace().real();
}

struct MetricPoint {
    double tau = 0.0;
    double energy = 0.0;
    double xi = 0.0;
    double eta = 0.0;
    double snr = 0.0;
    double rx = 0.0, ry = 0.0, rz = 0.0;
    double r_norm = 0.0;
    double purity = 0.0;
};

struct MetricSeries {
    std::vector<MetricPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

inline MetricPoint metric_point(double tau, const Eigen::Matrix2cd& rho_b) {
    MetricPoint p;
    p.tau = tau;
    p.energy = stored_energy(rho_b);
    p.xi = ergotropy(rho_b);
    p.eta = efficiency(rho_b);
    p.snr = snr(rho_b);
    const Eigen::Vector3d r = bloch_vector(rho_b);
    p.rx = r(0); p.ry = r(1); p.rz = r(2);
    p.r_norm = r.norm();
    p.purity = purity(rho_b);
    return p;
}

inline MetricSeries compute_metrics(std::span<const double> times,
                                    std::span<const Eigen::Matrix2cd> rhos) {
    if (times.size() != rhos.size())
        throw std::invalid_argument("compute_metrics: size mismatch");
    MetricSeries s;
    s.points.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        s.points.push_back(metric_point(times[i], rhos[i]));
    return s;
}

struct ChargingSummary {
    double tau_c = 0.0;   // fastest time attaining max E
    double e_max = 0.0;
    double p_bar = 0.0;   // E_max / tau_c
    double xi_max = 0.0;  // max of xi over the grid
    double eta_at_tau_c = 0.0;
    double snr_at_tau_c = 0.0;
};

/// Summary of a metric series. If a continuation `state_at` is supplied, the
/// energy maximum is polished by golden-section search in the grid interval
/// bracketing tau_c (fresh propagation, never interpolation).
inline ChargingSummary charging_summary(
    const MetricSeries& series,
    const std::function<Eigen::Matrix2cd(double)>& state_at = nullptr,
    double tau_tol = 1e-4) {
    if (series.empty()) throw std::invalid_argument("charging_summary: empty series");
    const auto& pts = series.points;

    std::size_t imax = 0;
    double emax = pts[0].energy, ximax = pts[0].xi;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].energy > emax) { emax = pts[i].energy; imax = i; }
        ximax = std::max(ximax, pts[i].xi);
    }

    ChargingSummary out;
    out.xi_max = ximax;

    if (emax <= 0.0) {
        // degenerate all-zero series: report the first positive grid time
        std::size_t first_pos = 0;
        while (first_pos < pts.size() && pts[first_pos].tau <= 0.0) ++first_pos;
        out.tau_c = first_pos < pts.size() ? pts[first_pos].tau : pts.back().tau;
        out.e_max = 0.0;
        out.p_bar = 0.0;
        out.eta_at_tau_c = 0.0;
        out.snr_at_tau_c = -std::numeric_limits<double>::infinity();
        return out;
    }

    double tau_c = pts[imax].tau;
    Eigen::Matrix2cd rho_at_tc;
    bool have_state = false;

    if (state_at) {
        const double lo = imax > 0 ? pts[imax - 1].tau : pts[imax].tau;
        const double hi = imax + 1 < pts.size() ? pts[imax + 1].tau : pts[imax].tau;
        // golden-section maximization of E(tau) on [lo, hi]
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = stored_energy(state_at(x1)), f2 = stored_energy(state_at(x2));
        while (b - a > tau_tol) {
            if (f1 < f2) {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + gr * (b - a); f2 = stored_energy(state_at(x2));
            } else {
                b = x2; x2 = x1; f2 = f1;
                x1 = b - gr * (b - a); f1 = stored_energy(state_at(x1));
            }
        }
        const double tau_ref = 0.5 * (a + b);
        rho_at_tc = state_at(tau_ref);
        const double e_ref = stored_energy(rho_at_tc);
        if (e_ref >= emax) { tau_c = tau_ref; emax = e_ref; have_state = true; }
    }

    if (!have_state) {
        Eigen::Matrix2cd r;
        const auto& p = pts[imax];
        // reconstruct the diagonal/coherence data captured in the point
        r(0, 0) = 1.0 - p.energy;
        r(1, 1) = p.energy;
        r(0, 1) = cdouble(0.5 * p.rx, 0.5 * p.ry);
        r(1, 0) = std::conj(r(0, 1));
        rho_at_tc = r;
        tau_c = p.tau;
    }

    out.tau_c = tau_c;
    out.e_max = emax;
    out.p_bar = tau_c > 0.0 ? emax / tau_c : 0.0;
    out.eta_at_tau_c = efficiency(rho_at_tc);
    out.snr_at_tau_c = snr(rho_at_tc);
    return out;
}

/// Wigner function of a Fock-basis state on a quadrature grid, in the
/// convention with unit integral and vacuum variance 1/2:
/// W_vac(x, p) = exp(-(x^2+p^2)) / pi. Evaluated by the iterative
/// generalized-Laguerre recursion over the Fock matrix elements.
inline Eigen::MatrixXd wigner(const QuantumState& state, std::span<const double> x_grid,
                              std::span<const double> p_grid) {
    const Matrix rho = state.density_matrix();
    const int m_dim = static_cast<int>(rho.rows());
    Eigen::MatrixXd w(x_grid.size(), p_grid.size());

    for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
        for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
            const cdouble alpha(x_grid[ix] / std::sqrt(2.0), p_grid[ip] / std::sqrt(2.0));
            const cdouble beta = 2.0 * alpha;
            const double z = std::norm(beta);

            double acc = 0.0;
            cdouble off_pref = 1.0;  // (2 alpha)^k / sqrt(k!)
            for (int k = 0; k < m_dim; ++k) {
                if (k > 0) off_pref *= beta / std::sqrt(static_cast<double>(k));
                // L_m^{(k)}(z) ascending in m, with the m-dependent weight
                // sqrt(m! / (m+k)!) folded in progressively
                double lm2 = 0.0, lm1 = 1.0;  // L_{-1}, L_0
                double weight = 1.0;          // sqrt(m!/(m+k)!) relative to m = 0
                double sign = 1.0;
                for (int m = 0; m + k < m_dim; ++m) {
                    if (m > 0) {
                        const double lm = ((2.0 * m - 1.0 + k - z) * lm1 -
                                           (m - 1.0 + k) * lm2) / m;
                        lm2 = lm1; lm1 = lm;
                        weight *= std::sqrt(m / (m + static_cast<double>(k)));
                        sign = -sign;
                    }
                    if (k == 0) {
                        acc += sign * rho(m, m).real() * lm1;
                    } else {
                        const cdouble c = rho(m, m + k) * off_pref * weight;
                        acc += sign * 2.0 * c.real() * lm1;
                    }
                }
            }
            w(ix, ip) = acc * std::exp(-0.5 * z) / M_PI;
        }
    }
    return w;
}

} // namespace qb
