#pragma once

// Charger preparations (Fock, coherent, thermal, squeezed vacuum,
// thermalized Fock) and the joint initial state, with truncation-quality
// control via tail masses.

#include <cmath>
#include <optional>
#include <string>

#include "qbattery/hilbert.hpp"

namespace qb {

// Constructors reject truncations whose unrenormalized edge mass exceeds
// this threshold. Thermalized-Fock chargers follow their own sizing rule
// (see auto_n_max) and accept a looser edge because the sweeps they feed
// tolerate ~1e-2 absolute errors.
inline constexpr double kTailThreshold = 1e-7;
inline constexpr double kTailThresholdThermalizedFock = 1e-3;

// Joint Hilbert dimension stays <= 2*(kAutoNMaxCap+1) in auto-sized runs.
inline constexpr int kAutoNMaxCap = 320;

/// Probability weight at indices >= n_max-4 of an unrenormalized
/// population vector; estimates what the truncation discards.
inline double tail_mass(const RVector& populations, int n_max) {
    const int lo = std::max(0, n_max - 4);
    double s = 0.0;
    for (int k = lo; k < populations.size(); ++k) s += populations(k);
    return s;
}

struct ChargerSpec {
    enum class Kind { Fock, Coherent, Thermal, SqueezedVacuum, ThermalizedFock };

    Kind kind = Kind::Fock;
    int n = 0;               // Fock, ThermalizedFock
    cdouble alpha{0.0, 0.0}; // Coherent
    double nbar = 0.0;       // Thermal
    double r = 0.0;          // SqueezedVacuum
    double theta = 0.0;      // SqueezedVacuum
    double n_th = 0.0;       // ThermalizedFock

    static ChargerSpec fock(int n) {
        ChargerSpec s; s.kind = Kind::Fock; s.n = n; return s;
    }
    static ChargerSpec coherent(cdouble alpha) {
        ChargerSpec s; s.kind = Kind::Coherent; s.alpha = alpha; return s;
    }
    static ChargerSpec thermal(double nbar) {
        ChargerSpec s; s.kind = Kind::Thermal; s.nbar = nbar; return s;
    }
    static ChargerSpec squeezed_vacuum(double r, double theta = 0.0) {
        ChargerSpec s; s.kind = Kind::SqueezedVacuum; s.r = r; s.theta = theta; return s;
    }
    static ChargerSpec thermalized_fock(int n, double n_th) {
        ChargerSpec s; s.kind = Kind::ThermalizedFock; s.n = n; s.n_th = n_th; return s;
    }

    /// Resolve variant parameters from a target mean occupation m:
    /// alpha = sqrt(m) (phase 0), nbar = m, r = arcsinh(sqrt(m)) with theta 0.
    static ChargerSpec from_target_mean(Kind kind, double m) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw std::invalid_argument("ChargerSpec: target mean must be finite and >= 0");
        switch (kind) {
            case Kind::Fock: return fock(static_cast<int>(std::llround(m)));
            case Kind::Coherent: return coherent(std::sqrt(m));
            case Kind::Thermal: return thermal(m);
            case Kind::SqueezedVacuum: return squeezed_vacuum(std::asinh(std::sqrt(m)));
            case Kind::ThermalizedFock:
                throw std::invalid_argument("ChargerSpec: thermalized Fock needs explicit (n, n_th)");
        }
        throw std::logic_error("ChargerSpec: unreachable");
    }

    /// Analytic mean occupation of the untruncated preparation.
    double mean_occupation() const {
        switch (kind) {
            case Kind::Fock: return n;
            case Kind::Coherent: return std::norm(alpha);
            case Kind::Thermal: return nbar;
            case Kind::SqueezedVacuum: { const double s = std::sinh(r); return s * s; }
            case Kind::ThermalizedFock: return n + n_th;
        }
        throw std::logic_error("ChargerSpec: unreachable");
    }

    bool is_pure() const {
        return kind == Kind::Fock || kind == Kind::Coherent || kind == Kind::SqueezedVacuum;
    }

    const char* name() const {
        switch (kind) {
            case Kind::Fock: return "fock";
            case Kind::Coherent: return "coherent";
            case Kind::Thermal: return "thermal";
            case Kind::SqueezedVacuum: return "squeezed";
            case Kind::ThermalizedFock: return "thermalized_fock";
        }
        return "?";
    }
};

/// Fock state |n> as a unit ket.
inline QuantumState fock_state(int n, int n_max) {
    if (n < 0 || n > n_max)
        throw TruncationError("fock_state: n = " + std::to_string(n) +
                              " exceeds n_max = " + std::to_string(n_max));
    Vector psi = Vector::Zero(n_max + 1);
    psi(n) = 1.0;
    return QuantumState::pure(std::move(psi), {n_max + 1});
}

namespace detail {

inline void check_tail(const RVector& pops, int n_max, double threshold, const char* what) {
    const double t = tail_mass(pops, n_max);
    if (t > threshold)
        throw TruncationError(std::string(what) + ": tail mass " + std::to_string(t) +
                              " exceeds threshold at n_max = " + std::to_string(n_max));
}

} // namespace detail

/// Coherent state, amplitudes e^{-|a|^2/2} a^k / sqrt(k!), renormalized.
inline QuantumState coherent_state(cdouble alpha, int n_max) {
    Vector c(n_max + 1);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int k = 1; k <= n_max; ++k) c(k) = c(k - 1) * alpha / std::sqrt(static_cast<double>(k));
    detail::check_tail(c.cwiseAbs2(), n_max, kTailThreshold, "coherent_state");
    c /= c.norm();
    return QuantumState::pure(std::move(c), {n_max + 1});
}

/// Thermal state, populations nbar^k / (1+nbar)^{k+1}, renormalized.
inline QuantumState thermal_state(double nbar, int n_max) {
    if (nbar < 0.0) throw std::invalid_argument("thermal_state: nbar must be >= 0");
    RVector p(n_max + 1);
    const double q = nbar / (1.0 + nbar);
    p(0) = 1.0 / (1.0 + nbar);
    for (int k = 1; k <= n_max; ++k) p(k) = p(k - 1) * q;
    detail::check_tail(p, n_max, kTailThreshold, "thermal_state");
    p /= p.sum();
    Matrix rho = Matrix::Zero(n_max + 1, n_max + 1);
    rho.diagonal() = p.cast<cdouble>();
    return QuantumState::density(std::move(rho), {n_max + 1});
}

/// Squeezed vacuum, even-only amplitudes
/// c_{2m} = (cosh r)^{-1/2} (-e^{i theta} tanh r)^m sqrt((2m)!)/(2^m m!).
inline QuantumState squeezed_vacuum(double r, double theta, int n_max) {
    if (r < 0.0) throw std::invalid_argument("squeezed_vacuum: r must be >= 0");
    Vector c = Vector::Zero(n_max + 1);
    const cdouble z = -std::exp(cdouble(0.0, theta)) * std::tanh(r);
    c(0) = 1.0 / std::sqrt(std::cosh(r));
    for (int m = 1; 2 * m <= n_max; ++m)
        c(2 * m) = c(2 * m - 2) * z * std::sqrt((2.0 * m - 1.0) / (2.0 * m));
    detail::check_tail(c.cwiseAbs2(), n_max, kTailThreshold, "squeezed_vacuum");
    c /= c.norm();
    return QuantumState::pure(std::move(c), {n_max + 1});
}

/// Unrenormalized populations of the thermalized Fock state,
/// p_k = sum_j C(n,j) C(k,j) j! n_th^{k+n-2j} / (1+n_th)^{k+n+1},
/// evaluated in log space; n_th = 0 returns the Kronecker delta at n.
inline RVector thermalized_fock_populations_raw(int n, double n_th, int n_max) {
    if (n < 0 || n_th < 0.0)
        throw std::invalid_argument("thermalized_fock: n and n_th must be >= 0");
    RVector p = RVector::Zero(n_max + 1);
    if (n_th == 0.0) {
        if (n > n_max)
            throw TruncationError("thermalized_fock: n exceeds n_max");
        p(n) = 1.0;
        return p;
    }
    const double ln_nth = std::log(n_th);
    const double ln_1p = std::log1p(n_th);
    auto log_binom = [](int a, int b) {
        return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
    };
    for (int k = 0; k <= n_max; ++k) {
        double sum = 0.0;
        for (int j = 0; j <= std::min(k, n); ++j) {
            const double lg = log_binom(n, j) + log_binom(k, j) + std::lgamma(j + 1.0) +
                              (k + n - 2 * j) * ln_nth - (k + n + 1) * ln_1p;
            sum += std::exp(lg);
        }
        p(k) = sum;
    }
    return p;
}

/// Renormalized thermalized-Fock populations.
inline RVector thermalized_fock_populations(int n, double n_th, int n_max) {
    RVector p = thermalized_fock_populations_raw(n, n_th, n_max);
    detail::check_tail(p, n_max, kTailThresholdThermalizedFock, "thermalized_fock");
    return p / p.sum();
}

/// Thermalized Fock state as an exactly diagonal density matrix; the phase
/// average of the defining displacement mixture removes all coherences.
inline QuantumState thermalized_fock_state(int n, double n_th, int n_max) {
    RVector p = thermalized_fock_populations(n, n_th, n_max);
    Matrix rho = Matrix::Zero(n_max + 1, n_max + 1);
    rho.diagonal() = p.cast<cdouble>();
    return QuantumState::density(std::move(rho), {n_max + 1});
}

/// Charger state for a spec at a given truncation.
inline QuantumState charger_state(const ChargerSpec& spec, int n_max) {
    switch (spec.kind) {
        case ChargerSpec::Kind::Fock: return fock_state(spec.n, n_max);
        case ChargerSpec::Kind::Coherent: return coherent_state(spec.alpha, n_max);
        case ChargerSpec::Kind::Thermal: return thermal_state(spec.nbar, n_max);
        case ChargerSpec::Kind::SqueezedVacuum: return squeezed_vacuum(spec.r, spec.theta, n_max);
        case ChargerSpec::Kind::ThermalizedFock:
            return thermalized_fock_state(spec.n, spec.n_th, n_max);
    }
    throw std::logic_error("charger_state: unreachable");
}

namespace detail {

inline int round_up_32(int v) { return 32 * ((v + 31) / 32); }

// Smallest truncation (from a floor, growing in 32-steps) whose edge mass
// passes the threshold; guards against runaway growth.
template <typename PopFn>
int grow_until_tail_ok(PopFn&& pops_at, int floor_n, double threshold, const char* what) {
    for (int n_max = round_up_32(floor_n); n_max <= 4096; n_max = round_up_32(n_max + n_max / 2)) {
        if (tail_mass(pops_at(n_max), n_max) <= threshold) return n_max;
    }
    throw TruncationError(std::string(what) + ": no acceptable truncation below 4096");
}

} // namespace detail

/// Truncation policy: smallest tail-passing size for the Gaussian-family
/// chargers (floor 64; squeezed floor 256), and max(64, 8*(n+n_th)) for
/// thermalized Fock, quantized to multiples of 32 and capped so the joint
/// dimension stays at desk scale.
inline int auto_n_max(const ChargerSpec& spec) {
    using Kind = ChargerSpec::Kind;
    switch (spec.kind) {
        case Kind::Fock:
            return std::max(64, detail::round_up_32(2 * spec.n + 16));
        case Kind::Coherent:
            return detail::grow_until_tail_ok(
                [&](int n) {
                    Vector c(n + 1);
                    c(0) = std::exp(-0.5 * std::norm(spec.alpha));
                    for (int k = 1; k <= n; ++k)
                        c(k) = c(k - 1) * spec.alpha / std::sqrt(static_cast<double>(k));
                    return RVector(c.cwiseAbs2());
                },
                64, kTailThreshold, "coherent_state");
        case Kind::Thermal:
            return detail::grow_until_tail_ok(
                [&](int n) {
                    RVector p(n + 1);
                    const double q = spec.nbar / (1.0 + spec.nbar);
                    p(0) = 1.0 / (1.0 + spec.nbar);
                    for (int k = 1; k <= n; ++k) p(k) = p(k - 1) * q;
                    return p;
                },
                64, kTailThreshold, "thermal_state");
        case Kind::SqueezedVacuum:
            return detail::grow_until_tail_ok(
                [&](int n) {
                    Vector c = Vector::Zero(n + 1);
                    const double t = std::tanh(spec.r);
                    c(0) = 1.0 / std::sqrt(std::cosh(spec.r));
                    for (int m = 1; 2 * m <= n; ++m)
                        c(2 * m) = c(2 * m - 2) * t * std::sqrt((2.0 * m - 1.0) / (2.0 * m));
                    return RVector(c.cwiseAbs2());
                },
                256, kTailThreshold, "squeezed_vacuum");
        case Kind::ThermalizedFock: {
            const int want = static_cast<int>(std::ceil(8.0 * (spec.n + spec.n_th)));
            return std::max(64, std::min(kAutoNMaxCap, detail::round_up_32(want)));
        }
    }
    throw std::logic_error("auto_n_max: unreachable");
}

/// Joint initial state |g><g| (x) rho_C(0); pure chargers yield a ket.
inline QuantumState joint_initial_state(const ChargerSpec& spec, int n_max) {
    QuantumState charger = charger_state(spec, n_max);
    const int dc = n_max + 1;
    if (charger.is_pure()) {
        Vector joint = Vector::Zero(2 * dc);
        joint.head(dc) = charger.ket();  // battery index 0 = |g>
        return QuantumState::pure(std::move(joint), {2, dc});
    }
    Matrix joint = Matrix::Zero(2 * dc, 2 * dc);
    joint.block(0, 0, dc, dc) = charger.rho();
    return QuantumState::density(std::move(joint), {2, dc});
}

} // namespace qb
