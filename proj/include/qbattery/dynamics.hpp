#pragma once

// Hamiltonian assembly for the superposed one- and two-photon JC
// interaction, exact unitary propagation through a one-time spectral
// decomposition, and the closed-form Rabi/beat analysis.

#include <functional>
#include <limits>
#include <span>

#include "qbattery/hilbert.hpp"

namespace qb {

enum class Frame { InteractionOnly, LabFrame };

struct HamiltonianSpec {
    double g1 = 1.0;
    double g2 = 1.0;
    Frame frame = Frame::InteractionOnly;
    int n_max = 64;
    double omega_c = 1.0;  // lab frame only
    double omega_q = 1.0;  // lab frame only

    void validate() const {
        if (g1 < 0.0 || g2 < 0.0)
            throw std::invalid_argument("HamiltonianSpec: couplings must be >= 0");
        if (n_max < 0) throw std::invalid_argument("HamiltonianSpec: n_max must be >= 0");
        if (frame == Frame::LabFrame && (omega_c <= 0.0 || omega_q <= 0.0))
            throw std::invalid_argument("HamiltonianSpec: lab-frame frequencies must be > 0");
    }
};

/// H_int = g1 (s- a^dag + s+ a) + g2 (s- a^dag^2 + s+ a^2), battery first.
inline Operator build_interaction_hamiltonian(const HamiltonianSpec& spec) {
    spec.validate();
    const auto q = qubit_ops();
    const Operator a = annihilation_op(spec.n_max);
    const Operator a2 = a * a;
    Operator h = spec.g1 * (tensor(q.sigma_minus, a.adjoint()) + tensor(q.sigma_plus, a)) +
                 spec.g2 * (tensor(q.sigma_minus, a2.adjoint()) + tensor(q.sigma_plus, a2));
    return h;
}

/// InteractionOnly -> H_int; LabFrame adds w_c a^dag a + (w_q/2)(I + s_z).
inline Operator build_total_hamiltonian(const HamiltonianSpec& spec) {
    Operator h = build_interaction_hamiltonian(spec);
    if (spec.frame == Frame::LabFrame) {
        const auto q = qubit_ops();
        const Operator a = annihilation_op(spec.n_max);
        const Operator number = a.adjoint() * a;
        const int dc = spec.n_max + 1;
        h = h + spec.omega_c * tensor(identity_op(2), number) +
            (0.5 * spec.omega_q) * tensor(q.identity + q.sigma_z, identity_op(dc));
    }
    return h;
}

/// Channel Rabi frequencies, their difference, and the beat period.
struct RabiAnalysis {
    int n = 0;
    double g = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double omega1 = 0.0;       // sqrt(delta1^2 + 4 g^2 n)
    double omega2 = 0.0;       // sqrt(delta2^2 + 4 g^2 n(n-1))
    double delta_omega = 0.0;  // |omega1 - omega2|
    double beat_period = 0.0;  // 2 pi / delta_omega; +inf when degenerate
};

inline RabiAnalysis rabi_analysis(int n, double g, double delta1, double delta2) {
    if (n < 0 || g < 0.0) throw std::invalid_argument("rabi_analysis: n, g must be >= 0");
    RabiAnalysis out;
    out.n = n; out.g = g; out.delta1 = delta1; out.delta2 = delta2;
    out.omega1 = std::sqrt(delta1 * delta1 + 4.0 * g * g * n);
    out.omega2 = std::sqrt(delta2 * delta2 + 4.0 * g * g * n * (n - 1.0));
    out.delta_omega = std::abs(out.omega1 - out.omega2);
    out.beat_period = out.delta_omega > 0.0 ? 2.0 * M_PI / out.delta_omega
                                            : std::numeric_limits<double>::infinity();
    return out;
}

/// Exact unitary propagation from one spectral decomposition H = V L V^dag.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const Operator& h)
        : dims_(h.dims()), eig_(hermitian_eig(h)) {}

    const EigDecomposition& eig() const { return eig_; }
    const std::vector<int>& dims() const { return dims_; }
    int dim() const { return static_cast<int>(eig_.eigenvalues.size()); }

    Vector phases(double tau) const {
        const int d = dim();
        Vector p(d);
        for (int i = 0; i < d; ++i) {
            const double x = -eig_.eigenvalues(i) * tau;
            p(i) = cdouble(std::cos(x), std::sin(x));
        }
        return p;
    }

    QuantumState evolve(const QuantumState& s0, double tau) const {
        if (s0.dim() != dim())
            throw std::invalid_argument("SpectralPropagator: dimension mismatch");
        const Vector ph = phases(tau);
        if (s0.is_pure()) {
            Vector c = eig_.eigenvectors.adjoint() * s0.ket();
            c = ph.cwiseProduct(c);
            Vector psi = eig_.eigenvectors * c;
            psi /= psi.norm();  // scrub eigensolver roundoff
            return QuantumState::pure(std::move(psi), dims_);
        }
        Matrix m = eig_.eigenvectors.adjoint() * s0.rho() * eig_.eigenvectors;
        m = ph.asDiagonal() * m * ph.conjugate().asDiagonal();
        Matrix rho = eig_.eigenvectors * m * eig_.eigenvectors.adjoint();
        rho = 0.5 * (rho + rho.adjoint()).eval();
        return QuantumState::density(std::move(rho), dims_, 1e-8);
    }

    void trajectory(const QuantumState& s0, std::span<const double> times,
                    const std::function<void(std::size_t, double, const QuantumState&)>& sink) const {
        // one-time change of basis, then a phase rotation per output
        if (s0.is_pure()) {
            const Vector c0 = eig_.eigenvectors.adjoint() * s0.ket();
            for (std::size_t i = 0; i < times.size(); ++i) {
                Vector psi = eig_.eigenvectors * phases(times[i]).cwiseProduct(c0);
                psi /= psi.norm();
                sink(i, times[i], QuantumState::pure(std::move(psi), dims_));
            }
        } else {
            const Matrix m0 = eig_.eigenvectors.adjoint() * s0.rho() * eig_.eigenvectors;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const Vector ph = phases(times[i]);
                Matrix m = ph.asDiagonal() * m0 * ph.conjugate().asDiagonal();
                Matrix rho = eig_.eigenvectors * m * eig_.eigenvectors.adjoint();
                rho = 0.5 * (rho + rho.adjoint()).eval();
                sink(i, times[i], QuantumState::density(std::move(rho), dims_, 1e-8));
            }
        }
    }

private:
    std::vector<int> dims_;
    EigDecomposition eig_;
};

/// Unitary trajectory at the requested times.
inline std::vector<QuantumState> unitary_evolve(const Operator& h, const QuantumState& s0,
                                                std::span<const double> times) {
    if (!times.empty() && times.front() < 0.0)
        throw std::invalid_argument("unitary_evolve: times must start at >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1])
            throw std::invalid_argument("unitary_evolve: times must be ascending");
    SpectralPropagator prop(h);
    std::vector<QuantumState> out;
    out.reserve(times.size());
    prop.trajectory(s0, times, [&](std::size_t, double, const QuantumState& s) { out.push_back(s); });
    return out;
}

/// Reduced-battery trajectory under unitary dynamics, organized so each
/// output time costs O(d^2) instead of O(d^3):
///   rho_B[s,s'](tau) = sum_ij K^{ss'}_ij e^{-i l_i tau} e^{+i l_j tau},
/// with K^{ss'} = (V^dag rho0 V) .* (V_s^T conj(V_s')) folded once.
class ReducedQubitEvolver {
public:
    ReducedQubitEvolver(const SpectralPropagator& prop, const QuantumState& s0)
        : eigenvalues_(prop.eig().eigenvalues) {
        const auto& dims = prop.dims();
        if (dims.size() != 2 || dims[0] != 2)
            throw std::invalid_argument("ReducedQubitEvolver: dims must be [2, dc]");
        if (s0.dim() != prop.dim())
            throw std::invalid_argument("ReducedQubitEvolver: dimension mismatch");
        const int dc = dims[1];
        const Matrix& v = prop.eig().eigenvectors;

        Matrix m;
        if (s0.is_pure()) {
            const Vector c = v.adjoint() * s0.ket();
            m = c * c.adjoint();
        } else {
            m = v.adjoint() * s0.rho() * v;
        }

        const Matrix vg = v.topRows(dc);     // rows (g, m)
        const Matrix ve = v.bottomRows(dc);  // rows (e, m)
        k_gg_ = m.cwiseProduct(vg.transpose() * vg.conjugate());
        k_ee_ = m.cwiseProduct(ve.transpose() * ve.conjugate());
        k_ge_ = m.cwiseProduct(vg.transpose() * ve.conjugate());
    }

    ReducedQubitEvolver(const Operator& h, const QuantumState& s0)
        : ReducedQubitEvolver(SpectralPropagator(h), s0) {}

    /// Battery 2x2 state at a single time.
    Eigen::Matrix2cd at(double tau) const {
        const Vector u = phase_vector(tau);
        const Vector uc = u.conjugate();
        const cdouble gg = u.cwiseProduct(k_gg_ * uc).sum();
        const cdouble ee = u.cwiseProduct(k_ee_ * uc).sum();
        const cdouble ge = u.cwiseProduct(k_ge_ * uc).sum();
        return assemble(gg, ee, ge);
    }

    /// Battery 2x2 states at many times (batched products).
    std::vector<Eigen::Matrix2cd> series(std::span<const double> times) const {
        const int d = static_cast<int>(k_gg_.rows());
        const int t = static_cast<int>(times.size());
        Matrix p(t, d);
        for (int i = 0; i < t; ++i) {
            for (int j = 0; j < d; ++j) {
                const double x = -eigenvalues_(j) * times[i];
                p(i, j) = cdouble(std::cos(x), std::sin(x));
            }
        }
        const Matrix pc = p.conjugate();
        std::vector<Eigen::Matrix2cd> out(times.size());
        const Vector ygg = ((p * k_gg_).cwiseProduct(pc)).rowwise().sum();
        const Vector yee = ((p * k_ee_).cwiseProduct(pc)).rowwise().sum();
        const Vector yge = ((p * k_ge_).cwiseProduct(pc)).rowwise().sum();
        for (int i = 0; i < t; ++i) out[i] = assemble(ygg(i), yee(i), yge(i));
        return out;
    }

private:
    Vector phase_vector(double tau) const {
        const int d = static_cast<int>(k_gg_.rows());
        Vector u(d);
        for (int j = 0; j < d; ++j) {
            const double x = -eigenvalues_(j) * tau;
            u(j) = cdouble(std::cos(x), std::sin(x));
        }
        return u;
    }

    static Eigen::Matrix2cd assemble(cdouble gg, cdouble ee, cdouble ge) {
        Eigen::Matrix2cd r;
        r(0, 0) = gg.real();
        r(1, 1) = ee.real();
        r(0, 1) = ge;
        r(1, 0) = std::conj(ge);
        return r;
    }

    RVector eigenvalues_;
    Matrix k_gg_, k_ee_, k_ge_;
};

} // namespace qb
