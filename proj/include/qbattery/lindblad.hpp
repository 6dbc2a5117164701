#pragma once

// Dissipative propagation of the charger-loss master equation
//   drho/dtau = -i [H, rho] + gamma (a rho a^dag - 1/2 {a^dag a, rho}),
// A = I (x) a, integrated with an adaptive Dormand-Prince 5(4) stepper and
// the classic quartic dense-output interpolant. The right-hand side is
// applied through the nonzero structure of H and a; no d^2 x d^2
// superoperator is ever formed.

#include <algorithm>
#include <functional>
#include <span>

#include "qbattery/hilbert.hpp"

namespace qb {

struct LindbladOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    long max_steps = 20'000'000;
};

/// Structured application of the master-equation right-hand side.
class LindbladRhs {
public:
    LindbladRhs(const Operator& h, double gamma) : gamma_(gamma) {
        const auto& dims = h.dims();
        if (dims.size() != 2)
            throw std::invalid_argument("LindbladRhs: expected [battery, charger] dims");
        if (gamma < 0.0) throw std::invalid_argument("LindbladRhs: gamma must be >= 0");
        d0_ = dims[0];
        dc_ = dims[1];
        d_ = d0_ * dc_;
        const Matrix& hm = h.data();
        for (int r = 0; r < d_; ++r)
            for (int c = 0; c < d_; ++c)
                if (hm(r, c) != cdouble(0.0, 0.0)) nnz_.push_back({r, c, hm(r, c)});
        numbers_.resize(d_);
        for (int s = 0; s < d0_; ++s)
            for (int m = 0; m < dc_; ++m) numbers_(s * dc_ + m) = m;
    }

    int dim() const { return d_; }
    double gamma() const { return gamma_; }

    /// out = rhs(rho); scratch must have the same shape as rho.
    void apply(const Matrix& rho, Matrix& out, Matrix& scratch) const {
        const cdouble mi(0.0, -1.0), pi(0.0, 1.0);
        out.setZero();
        for (const auto& t : nnz_) out.row(t.r) += (mi * t.v) * rho.row(t.c);  // -i H rho
        for (const auto& t : nnz_) out.col(t.c) += (pi * t.v) * rho.col(t.r);  // +i rho H
        if (gamma_ > 0.0) {
            // a rho
            for (int s = 0; s < d0_; ++s) {
                const int base = s * dc_;
                for (int m = 0; m + 1 < dc_; ++m)
                    scratch.row(base + m) = std::sqrt(m + 1.0) * rho.row(base + m + 1);
                scratch.row(base + dc_ - 1).setZero();
            }
            // + gamma (a rho) a^dag
            for (int s = 0; s < d0_; ++s) {
                const int base = s * dc_;
                for (int m = 0; m + 1 < dc_; ++m)
                    out.col(base + m) += (gamma_ * std::sqrt(m + 1.0)) * scratch.col(base + m + 1);
            }
            // - gamma/2 (N rho + rho N)
            const double hg = 0.5 * gamma_;
            for (int j = 0; j < d_; ++j) {
                if (numbers_(j) == 0.0) continue;
                out.row(j) -= (hg * numbers_(j)) * rho.row(j);
                out.col(j) -= (hg * numbers_(j)) * rho.col(j);
            }
        }
    }

private:
    struct Triplet { int r, c; cdouble v; };
    std::vector<Triplet> nnz_;
    RVector numbers_;
    int d0_ = 0, dc_ = 0, d_ = 0;
    double gamma_ = 0.0;
};

/// Right-hand side of the master equation for a single state (contract form).
inline Matrix lindblad_rhs(const Matrix& rho, const Operator& h, double gamma) {
    if (rho.rows() != h.dim() || rho.cols() != h.dim())
        throw std::invalid_argument("lindblad_rhs: dimension mismatch");
    LindbladRhs rhs(h, gamma);
    Matrix out(rho.rows(), rho.cols()), scratch(rho.rows(), rho.cols());
    rhs.apply(rho, out, scratch);
    return out;
}

namespace detail {

// Dormand-Prince 5(4) tableau, error weights and dense-output weights
// (Hairer-Norsett-Wanner DOPRI5).
struct Dopri5Coeffs {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0,
                            d7 = 69997945.0 / 29380423.0;
};

// One accepted step with everything a dense-output consumer needs.
struct Dopri5Step {
    double t0 = 0.0, h = 0.0;
    const Matrix *y0 = nullptr, *y1 = nullptr;
    const Matrix *k1 = nullptr, *k3 = nullptr, *k4 = nullptr, *k5 = nullptr,
                 *k6 = nullptr, *k7 = nullptr;
};

// Quartic interpolant over one step; Mat is any Eigen matrix type, so the
// same polynomial serves full-state and reduced-state consumers.
template <typename Mat>
struct DenseInterpolant {
    Mat r1, r2, r3, r4, r5;

    template <typename Reduce>
    void build(const Dopri5Step& s, Reduce&& red) {
        using C = Dopri5Coeffs;
        const Mat y0 = red(*s.y0), y1 = red(*s.y1);
        const Mat k1 = red(*s.k1), k3 = red(*s.k3), k4 = red(*s.k4), k5 = red(*s.k5),
                  k6 = red(*s.k6), k7 = red(*s.k7);
        r1 = y0;
        r2 = y1 - y0;
        r3 = s.h * k1 - r2;
        r4 = r2 - s.h * k7 - r3;
        r5 = s.h * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 + C::d6 * k6 +
                    C::d7 * k7);
    }

    Mat eval(double theta) const {
        const double t1 = 1.0 - theta;
        return r1 + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)));
    }
};

// scaled RMS error over complex entries
inline double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1,
                         double atol, double rtol) {
    const auto n = err.size();
    double acc = 0.0;
    const cdouble* pe = err.data();
    const cdouble* p0 = y0.data();
    const cdouble* p1 = y1.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sk = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
        const double e = std::abs(pe[i]) / sk;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

// Adaptive DOPRI5 over [times.front(), times.back()]; OutputSink is called as
// sink(step) once per accepted step that contains requested outputs, then
// sink.emit(index, tau, theta) per output inside it. The state is
// re-symmetrized after every accepted step; sinks see the symmetrized y1.
template <typename OnStepOutputs>
void dopri5_integrate(const LindbladRhs& rhs, const Matrix& rho0,
                      std::span<const double> times, const LindbladOptions& opt,
                      OnStepOutputs&& on_step) {
    using C = Dopri5Coeffs;
    if (times.empty()) return;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1])
            throw std::invalid_argument("lindblad_evolve: times must be ascending");

    const int d = rhs.dim();
    if (rho0.rows() != d || rho0.cols() != d)
        throw std::invalid_argument("lindblad_evolve: state dimension mismatch");

    double t = times.front();
    const double tend = times.back();
    std::size_t next_out = 0;

    Matrix y = 0.5 * (rho0 + rho0.adjoint());
    Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), k5(d, d), k6(d, d), k7(d, d);
    Matrix ystage(d, d), ynew(d, d), err(d, d), scratch(d, d);

    // outputs at or before the start come straight from the initial state
    {
        Dopri5Step s0;
        s0.t0 = t; s0.h = 0.0;
        s0.y0 = &y; s0.y1 = &y;
        s0.k1 = s0.k3 = s0.k4 = s0.k5 = s0.k6 = s0.k7 = &k1;
        k1.setZero();
        while (next_out < times.size() && times[next_out] <= t) {
            on_step(s0, next_out, times[next_out], 0.0, true);
            ++next_out;
        }
    }
    if (next_out >= times.size()) return;

    rhs.apply(y, k1, scratch);

    // starting step size (Hairer's HINIT, simplified)
    double h;
    {
        const double d0 = error_norm(y, y, y, opt.abs_tol, opt.rel_tol);
        const double d1 = error_norm(k1, y, y, opt.abs_tol, opt.rel_tol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
        h0 = std::min(h0, tend - t);
        ystage = y + h0 * k1;
        rhs.apply(ystage, k2, scratch);
        err = k2 - k1;
        const double d2 = error_norm(err, y, y, opt.abs_tol, opt.rel_tol) / h0;
        const double der = std::max(d1, d2);
        const double h1 = der <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                       : std::pow(0.01 / der, 0.2);
        h = std::min({100.0 * h0, h1, tend - t});
    }

    long steps = 0;
    bool last_rejected = false;
    while (t < tend) {
        if (++steps > opt.max_steps)
            throw IntegratorError("lindblad_evolve: step budget exhausted at tau = " +
                                      std::to_string(t), t);
        if (h < 1e-13 * std::max(1.0, std::abs(t)))
            throw IntegratorError("lindblad_evolve: step size underflow at tau = " +
                                      std::to_string(t), t);
        h = std::min(h, tend - t);

        ystage = y + (h * C::a21) * k1;
        rhs.apply(ystage, k2, scratch);
        ystage = y + h * (C::a31 * k1 + C::a32 * k2);
        rhs.apply(ystage, k3, scratch);
        ystage = y + h * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3);
        rhs.apply(ystage, k4, scratch);
        ystage = y + h * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4);
        rhs.apply(ystage, k5, scratch);
        ystage = y + h * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 + C::a65 * k5);
        rhs.apply(ystage, k6, scratch);
        ynew = y + h * (C::b1 * k1 + C::b3 * k3 + C::b4 * k4 + C::b5 * k5 + C::b6 * k6);
        rhs.apply(ynew, k7, scratch);
        err = h * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 + C::e6 * k6 + C::e7 * k7);

        const double en = error_norm(err, y, ynew, opt.abs_tol, opt.rel_tol);
        if (en <= 1.0) {
            // keep the flow Hermitian; the RHS commutes with the adjoint, so
            // the FSAL derivative can be symmetrized the same way
            ynew = 0.5 * (ynew + ynew.adjoint()).eval();
            k7 = 0.5 * (k7 + k7.adjoint()).eval();

            if (next_out < times.size() && times[next_out] <= t + h) {
                Dopri5Step s;
                s.t0 = t; s.h = h;
                s.y0 = &y; s.y1 = &ynew;
                s.k1 = &k1; s.k3 = &k3; s.k4 = &k4; s.k5 = &k5; s.k6 = &k6; s.k7 = &k7;
                bool first = true;
                while (next_out < times.size() && times[next_out] <= t + h) {
                    const double theta = h > 0.0 ? (times[next_out] - t) / h : 1.0;
                    on_step(s, next_out, times[next_out], theta, first);
                    first = false;
                    ++next_out;
                }
            }

            t += h;
            std::swap(y, ynew);
            std::swap(k1, k7);  // FSAL

            double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h *= fac;
            last_rejected = false;
        } else {
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
            last_rejected = true;
        }
    }
}

} // namespace detail

/// Dissipative trajectory with full density matrices delivered at the
/// requested times through the observer.
inline void lindblad_evolve(const Operator& h, double gamma, const QuantumState& rho0,
                            std::span<const double> times, const LindbladOptions& opt,
                            const std::function<void(std::size_t, double, const Matrix&)>& sink) {
    if (!h.is_hermitian(1e-10))
        throw std::invalid_argument("lindblad_evolve: H must be Hermitian");
    LindbladRhs rhs(h, gamma);
    const Matrix r0 = rho0.density_matrix();
    detail::DenseInterpolant<Matrix> interp;
    detail::dopri5_integrate(
        rhs, r0, times, opt,
        [&](const detail::Dopri5Step& s, std::size_t idx, double tau, double theta, bool first) {
            if (s.h == 0.0) {  // initial point
                sink(idx, tau, *s.y0);
                return;
            }
            if (first) interp.build(s, [](const Matrix& m) -> const Matrix& { return m; });
            Matrix out = interp.eval(theta);
            out = 0.5 * (out + out.adjoint()).eval();
            sink(idx, tau, out);
        });
}

/// Convenience form returning QuantumState objects.
inline std::vector<QuantumState> lindblad_evolve(const Operator& h, double gamma,
                                                 const QuantumState& rho0,
                                                 std::span<const double> times,
                                                 const LindbladOptions& opt = {}) {
    std::vector<QuantumState> out;
    out.reserve(times.size());
    const auto dims = h.dims();
    lindblad_evolve(h, gamma, rho0, times, opt,
                    [&](std::size_t, double, const Matrix& rho) {
                        // integrator outputs satisfy the state invariants at
                        // the integration tolerance, not construction default
                        out.push_back(QuantumState::density(rho, dims, 1e-7));
                    });
    return out;
}

/// Reduced-battery trajectory: the dense-output polynomial is contracted to
/// the 2x2 battery block per accepted step, so each output costs O(1).
inline std::vector<Eigen::Matrix2cd> lindblad_qubit_series(const Operator& h, double gamma,
                                                           const QuantumState& rho0,
                                                           std::span<const double> times,
                                                           const LindbladOptions& opt = {}) {
    if (!h.is_hermitian(1e-10))
        throw std::invalid_argument("lindblad_evolve: H must be Hermitian");
    const auto& dims = h.dims();
    if (dims.size() != 2 || dims[0] != 2)
        throw std::invalid_argument("lindblad_qubit_series: dims must be [2, dc]");
    const int dc = dims[1];

    auto reduce = [dc](const Matrix& m) {
        Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
        for (int s = 0; s < 2; ++s)
            for (int sp = 0; sp < 2; ++sp) {
                cdouble acc = 0.0;
                for (int q = 0; q < dc; ++q) acc += m(s * dc + q, sp * dc + q);
                r(s, sp) = acc;
            }
        return r;
    };

    LindbladRhs rhs(h, gamma);
    const Matrix r0 = rho0.density_matrix();
    std::vector<Eigen::Matrix2cd> out(times.size());
    detail::DenseInterpolant<Eigen::Matrix2cd> interp;
    detail::dopri5_integrate(
        rhs, r0, times, opt,
        [&](const detail::Dopri5Step& s, std::size_t idx, double, double theta, bool first) {
            if (s.h == 0.0) {
                out[idx] = reduce(*s.y0);
                return;
            }
            if (first) interp.build(s, reduce);
            Eigen::Matrix2cd r = interp.eval(theta);
            out[idx] = 0.5 * (r + r.adjoint());
        });
    return out;
}

} // namespace qb
