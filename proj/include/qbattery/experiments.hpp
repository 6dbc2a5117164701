#pragma once

// Figure-level studies as deterministic, parallelizable sweeps. Grid-point
// jobs are independent and side-effect free; results land in preallocated
// slots so serial and parallel execution yield identical tables.

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <numeric>

#include "qbattery/dynamics.hpp"
#include "qbattery/lindblad.hpp"
#include "qbattery/metrics.hpp"
#include "qbattery/parallel.hpp"
#include "qbattery/states.hpp"
#include "qbattery/version.hpp"

namespace qb {

struct RunParams {
    double g1 = 1.0;
    double g2 = 1.0;
    Frame frame = Frame::InteractionOnly;
    double omega_c = 1.0;
    double omega_q = 1.0;
    int n_max = 0;  // 0 resolves through the states-module truncation policy
    double horizon = 2.0 * M_PI;
    int grid_points = 2001;
    double gamma = 0.0;
    LindbladOptions integ{};

    std::vector<double> times() const {
        std::vector<double> t(grid_points);
        for (int i = 0; i < grid_points; ++i)
            t[i] = horizon * static_cast<double>(i) / (grid_points - 1);
        return t;
    }

    HamiltonianSpec hamiltonian(int resolved_n_max) const {
        HamiltonianSpec hs;
        hs.g1 = g1; hs.g2 = g2; hs.frame = frame;
        hs.omega_c = omega_c; hs.omega_q = omega_q;
        hs.n_max = resolved_n_max;
        return hs;
    }

    int resolve_n_max(const ChargerSpec& charger) const {
        return n_max > 0 ? n_max : auto_n_max(charger);
    }
};

struct SweepProvenance {
    std::string version = kVersion;
    double wall_seconds = 0.0;
};

namespace detail {

class WallClock {
public:
    WallClock() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
private:
    std::chrono::steady_clock::time_point t0_;
};

// Sweeps at several truncations share eigensolves through this cache; the
// distinct sizes are prepared up front so grid jobs stay read-only.
class PropagatorCache {
public:
    explicit PropagatorCache(const RunParams& params) : params_(params) {}

    void prepare(int n_max) {
        if (!cache_.count(n_max))
            cache_.emplace(n_max, std::make_shared<SpectralPropagator>(
                                      build_total_hamiltonian(params_.hamiltonian(n_max))));
    }

    const SpectralPropagator& at(int n_max) const { return *cache_.at(n_max); }

private:
    RunParams params_;
    std::map<int, std::shared_ptr<SpectralPropagator>> cache_;
};

} // namespace detail

/// Uniform or logarithmic grids for sweep axes.
inline std::vector<double> log_spaced(double lo, double hi, int count) {
    if (count < 2 || lo <= 0.0 || hi <= lo)
        throw std::invalid_argument("log_spaced: need count >= 2 and 0 < lo < hi");
    std::vector<double> g(count);
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i)
        g[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<int> int_range(int lo, int hi) {
    std::vector<int> r(hi - lo + 1);
    std::iota(r.begin(), r.end(), lo);
    return r;
}

// ---------------------------------------------------------------------------
// Fock sweep (figure-of-merit endpoints per initial excitation)

struct FockSweepRow {
    int n = 0;
    ChargingSummary summary;
};

struct FockSweepResult {
    std::vector<FockSweepRow> rows;
    int n_max = 0;
    SweepProvenance prov;
};

inline FockSweepResult fock_sweep(const std::vector<int>& n_range, const RunParams& params) {
    detail::WallClock clock;
    FockSweepResult out;
    out.rows.resize(n_range.size());

    int n_max_needed = 0;
    for (int n : n_range)
        n_max_needed = std::max(n_max_needed, params.resolve_n_max(ChargerSpec::fock(n)));
    out.n_max = n_max_needed;

    const SpectralPropagator prop(build_total_hamiltonian(params.hamiltonian(n_max_needed)));
    const auto times = params.times();

    parallel_for(n_range.size(), [&](std::size_t i) {
        const int n = n_range[i];
        const QuantumState s0 = joint_initial_state(ChargerSpec::fock(n), n_max_needed);
        ReducedQubitEvolver evolver(prop, s0);
        const MetricSeries series = compute_metrics(times, evolver.series(times));
        out.rows[i] = {n, charging_summary(
                              series, [&](double tau) { return evolver.at(tau); })};
    });
    out.prov.wall_seconds = clock.seconds();
    return out;
}

// ---------------------------------------------------------------------------
// Four-charger comparison at equal mean occupation

struct ChargerRun {
    ChargerSpec spec;
    int n_max = 0;
    double mean_occupation = 0.0;  // <a^dag a>(0) of the truncated preparation
    MetricSeries series;
    ChargingSummary summary;
};

struct ComparisonResult {
    std::vector<ChargerRun> runs;  // fock, coherent, thermal, squeezed
    SweepProvenance prov;
};

inline ComparisonResult gaussian_comparison(double mean_n, const RunParams& params) {
    detail::WallClock clock;
    using Kind = ChargerSpec::Kind;
    const std::vector<ChargerSpec> chargers = {
        ChargerSpec::from_target_mean(Kind::Fock, mean_n),
        ChargerSpec::from_target_mean(Kind::Coherent, mean_n),
        ChargerSpec::from_target_mean(Kind::Thermal, mean_n),
        ChargerSpec::from_target_mean(Kind::SqueezedVacuum, mean_n),
    };

    detail::PropagatorCache cache(params);
    std::vector<int> n_maxes(chargers.size());
    for (std::size_t i = 0; i < chargers.size(); ++i) {
        n_maxes[i] = params.resolve_n_max(chargers[i]);
        cache.prepare(n_maxes[i]);
    }

    const auto times = params.times();
    ComparisonResult out;
    out.runs.resize(chargers.size());

    parallel_for(chargers.size(), [&](std::size_t i) {
        ChargerRun run;
        run.spec = chargers[i];
        run.n_max = n_maxes[i];
        const QuantumState charger = charger_state(run.spec, run.n_max);
        const Operator num = annihilation_op(run.n_max).adjoint() * annihilation_op(run.n_max);
        run.mean_occupation = expectation(num, charger).real();

        const QuantumState s0 = joint_initial_state(run.spec, run.n_max);
        ReducedQubitEvolver evolver(cache.at(run.n_max), s0);
        run.series = compute_metrics(times, evolver.series(times));
        run.summary = charging_summary(run.series,
                                       [&](double tau) { return evolver.at(tau); });
        out.runs[i] = std::move(run);
    });
    out.prov.wall_seconds = clock.seconds();
    return out;
}

// ---------------------------------------------------------------------------
// Wigner snapshots of the reduced battery state at a fixed time

struct WignerSnapshot {
    ChargerSpec spec;
    Eigen::Matrix2cd rho_b;
    double purity = 0.0;
    Eigen::MatrixXd w;  // indexed (x, p)
};

struct WignerGrid {
    double lo = -3.0, hi = 3.0;
    int points = 201;

    std::vector<double> axis() const {
        std::vector<double> g(points);
        for (int i = 0; i < points; ++i)
            g[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        return g;
    }
};

inline std::vector<WignerSnapshot> wigner_snapshots(double mean_n, double tau,
                                                    const WignerGrid& grid,
                                                    const RunParams& params) {
    using Kind = ChargerSpec::Kind;
    const std::vector<ChargerSpec> chargers = {
        ChargerSpec::from_target_mean(Kind::Fock, mean_n),
        ChargerSpec::from_target_mean(Kind::Coherent, mean_n),
        ChargerSpec::from_target_mean(Kind::Thermal, mean_n),
        ChargerSpec::from_target_mean(Kind::SqueezedVacuum, mean_n),
    };
    detail::PropagatorCache cache(params);
    std::vector<int> n_maxes(chargers.size());
    for (std::size_t i = 0; i < chargers.size(); ++i) {
        n_maxes[i] = params.resolve_n_max(chargers[i]);
        cache.prepare(n_maxes[i]);
    }

    const auto axis = grid.axis();
    std::vector<WignerSnapshot> out(chargers.size());
    parallel_for(chargers.size(), [&](std::size_t i) {
        WignerSnapshot snap;
        snap.spec = chargers[i];
        const QuantumState s0 = joint_initial_state(chargers[i], n_maxes[i]);
        ReducedQubitEvolver evolver(cache.at(n_maxes[i]), s0);
        snap.rho_b = evolver.at(tau);
        snap.purity = purity(snap.rho_b);
        Matrix rho2 = snap.rho_b;
        snap.w = wigner(QuantumState::density(std::move(rho2), {2}, 1e-8), axis, axis);
        out[i] = std::move(snap);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Bloch-vector length during charging, one series per charger on [0, tau_c]

struct BlochNormSeries {
    ChargerSpec spec;
    std::vector<double> tau;
    std::vector<double> r_norm;
};

inline std::vector<BlochNormSeries> bloch_norm_series(double mean_n, const RunParams& params) {
    ComparisonResult comp = gaussian_comparison(mean_n, params);
    std::vector<BlochNormSeries> out;
    for (auto& run : comp.runs) {
        BlochNormSeries s;
        s.spec = run.spec;
        for (const auto& p : run.series.points) {
            if (p.tau > run.summary.tau_c) break;
            s.tau.push_back(p.tau);
            s.r_norm.push_back(p.r_norm);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Robustness sweeps (thermal broadening, dissipation, 2-D heatmap)

struct SweepCell {
    int n = 0;
    double n_th = 0.0;
    double gamma = 0.0;
    double xi_max = 0.0;
};

struct SweepTable {
    std::vector<SweepCell> cells;  // row-major over the stated axes
    SweepProvenance prov;
};

/// xi_max(n, n_th) under unitary dynamics with a thermalized-Fock charger.
inline SweepTable thermal_broadening_sweep(const std::vector<int>& n_range,
                                           const std::vector<double>& n_th_grid,
                                           const RunParams& params) {
    detail::WallClock clock;
    SweepTable out;
    out.cells.resize(n_range.size() * n_th_grid.size());

    detail::PropagatorCache cache(params);
    std::vector<int> cell_n_max(out.cells.size());
    for (std::size_t i = 0; i < n_range.size(); ++i)
        for (std::size_t j = 0; j < n_th_grid.size(); ++j) {
            const auto spec = ChargerSpec::thermalized_fock(n_range[i], n_th_grid[j]);
            const int nm = params.resolve_n_max(spec);
            cell_n_max[i * n_th_grid.size() + j] = nm;
            cache.prepare(nm);
        }

    const auto times = params.times();
    parallel_for(out.cells.size(), [&](std::size_t idx) {
        const std::size_t i = idx / n_th_grid.size(), j = idx % n_th_grid.size();
        const int n = n_range[i];
        const double n_th = n_th_grid[j];
        const int nm = cell_n_max[idx];
        const QuantumState s0 = joint_initial_state(ChargerSpec::thermalized_fock(n, n_th), nm);
        ReducedQubitEvolver evolver(cache.at(nm), s0);
        double xi_max = 0.0;
        for (const auto& rho : evolver.series(times)) xi_max = std::max(xi_max, ergotropy(rho));
        out.cells[idx] = {n, n_th, 0.0, xi_max};
    });
    out.prov.wall_seconds = clock.seconds();
    return out;
}

/// xi_max(n, gamma) for pure Fock chargers under charger loss.
inline SweepTable dissipation_sweep(const std::vector<int>& n_range,
                                    const std::vector<double>& gamma_grid,
                                    const RunParams& params) {
    detail::WallClock clock;
    SweepTable out;
    out.cells.resize(n_range.size() * gamma_grid.size());

    int n_max_needed = 0;
    for (int n : n_range)
        n_max_needed = std::max(n_max_needed, params.resolve_n_max(ChargerSpec::fock(n)));
    const Operator h = build_total_hamiltonian(params.hamiltonian(n_max_needed));

    const auto times = params.times();
    parallel_for(out.cells.size(), [&](std::size_t idx) {
        const std::size_t i = idx / gamma_grid.size(), j = idx % gamma_grid.size();
        const int n = n_range[i];
        const double gamma = gamma_grid[j];
        const QuantumState s0 = joint_initial_state(ChargerSpec::fock(n), n_max_needed);
        double xi_max = 0.0;
        for (const auto& rho : lindblad_qubit_series(h, gamma, s0, times, params.integ))
            xi_max = std::max(xi_max, ergotropy(rho));
        out.cells[idx] = {n, 0.0, gamma, xi_max};
    });
    out.prov.wall_seconds = clock.seconds();
    return out;
}

/// xi_max(n_th, gamma) for a thermalized-Fock charger under charger loss.
inline SweepTable thermal_dissipation_heatmap(int n, const std::vector<double>& n_th_grid,
                                              const std::vector<double>& gamma_grid,
                                              const RunParams& params) {
    detail::WallClock clock;
    SweepTable out;
    out.cells.resize(n_th_grid.size() * gamma_grid.size());

    // one Hamiltonian per distinct truncation
    std::map<int, Operator> hams;
    std::vector<int> row_n_max(n_th_grid.size());
    for (std::size_t i = 0; i < n_th_grid.size(); ++i) {
        const int nm = params.resolve_n_max(ChargerSpec::thermalized_fock(n, n_th_grid[i]));
        row_n_max[i] = nm;
        if (!hams.count(nm))
            hams.emplace(nm, build_total_hamiltonian(params.hamiltonian(nm)));
    }

    const auto times = params.times();
    parallel_for(out.cells.size(), [&](std::size_t idx) {
        const std::size_t i = idx / gamma_grid.size(), j = idx % gamma_grid.size();
        const double n_th = n_th_grid[i];
        const double gamma = gamma_grid[j];
        const int nm = row_n_max[i];
        const QuantumState s0 = joint_initial_state(ChargerSpec::thermalized_fock(n, n_th), nm);
        double xi_max = 0.0;
        for (const auto& rho : lindblad_qubit_series(hams.at(nm), gamma, s0, times, params.integ))
            xi_max = std::max(xi_max, ergotropy(rho));
        out.cells[idx] = {n, n_th, gamma, xi_max};
    });
    out.prov.wall_seconds = clock.seconds();
    return out;
}

// ---------------------------------------------------------------------------
// Beat analysis (closed forms next to an empirical modulation estimate)

struct BeatRow {
    int n = 0;
    RabiAnalysis closed;
    double empirical_period = 0.0;  // NaN when no modulation is detectable
    double pi_over_g = 0.0;         // reference value quoted for comparison
};

namespace detail {

// local maxima of E(tau), then the spacing of the peaks of that envelope
inline double empirical_beat_period(const std::vector<double>& tau,
                                    const std::vector<double>& e) {
    std::vector<double> max_tau, max_val;
    for (std::size_t i = 1; i + 1 < e.size(); ++i)
        if (e[i] > e[i - 1] && e[i] >= e[i + 1]) {
            max_tau.push_back(tau[i]);
            max_val.push_back(e[i]);
        }
    std::vector<double> peak_tau;
    for (std::size_t i = 1; i + 1 < max_val.size(); ++i)
        if (max_val[i] > max_val[i - 1] && max_val[i] >= max_val[i + 1])
            peak_tau.push_back(max_tau[i]);
    if (peak_tau.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> gaps(peak_tau.size() - 1);
    for (std::size_t i = 0; i + 1 < peak_tau.size(); ++i) gaps[i] = peak_tau[i + 1] - peak_tau[i];
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

} // namespace detail

inline std::vector<BeatRow> beat_analysis(const std::vector<int>& n_range, double g,
                                          double delta1, double delta2,
                                          const RunParams& params) {
    int n_max_needed = 0;
    for (int n : n_range)
        n_max_needed = std::max(n_max_needed, params.resolve_n_max(ChargerSpec::fock(n)));

    RunParams p = params;
    p.g1 = g; p.g2 = g;
    const SpectralPropagator prop(build_total_hamiltonian(p.hamiltonian(n_max_needed)));
    const auto times = p.times();

    std::vector<BeatRow> out(n_range.size());
    parallel_for(n_range.size(), [&](std::size_t i) {
        const int n = n_range[i];
        BeatRow row;
        row.n = n;
        row.closed = rabi_analysis(n, g, delta1, delta2);
        row.pi_over_g = M_PI / g;

        const QuantumState s0 = joint_initial_state(ChargerSpec::fock(n), n_max_needed);
        ReducedQubitEvolver evolver(prop, s0);
        std::vector<double> e;
        e.reserve(times.size());
        for (const auto& rho : evolver.series(times)) e.push_back(stored_energy(rho));
        row.empirical_period = detail::empirical_beat_period(times, e);
        out[i] = row;
    });
    return out;
}

} // namespace qb
