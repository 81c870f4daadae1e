#pragma once

// Pump/probe sequences on the D1 line.
//
// Three measurements share one machinery:
//
//   A (hyperfine refill)   linear pump empties F=1 through F'=2; a weak probe
//                          on the same line watches the populations return.
//   B (polarized refill)   sigma+ pump on the same line leaves the refilling
//                          F=1 atoms biased toward high m_F, so a sigma+ probe
//                          overshoots its thermal level before settling back.
//   C (coherence beat)     balanced sigma+/sigma- pump on F=2 -> F'=1 parks
//                          the atoms in the two dark superpositions of the F=2
//                          manifold; an axial field applied after a dark delay
//                          makes the surviving Delta m = 2 coherences beat at
//                          twice the Larmor frequency.
//
// The pump segment is solved as a steady state: the mean field entering the
// spin-exchange kernel is iterated to self-consistency, with each candidate
// state obtained from a null-space solve of the frozen generator. The dark
// segment runs in the 8x8 ground sector with the mean field refreshed on a
// configurable interval. Probing is stroboscopic; each pulse contributes an
// absorption sample plus a small ground-state kick whose size is tracked so
// runs can verify the probe stayed non-invasive.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "rbrelax/absorption.hpp"
#include "rbrelax/doppler.hpp"
#include "rbrelax/fields.hpp"
#include "rbrelax/level_scheme.hpp"
#include "rbrelax/liouville.hpp"
#include "rbrelax/spin_exchange.hpp"
#include "rbrelax/trace.hpp"
#include "rbrelax/vapor.hpp"

namespace rbrelax {

using Vector8 = Eigen::Matrix<cd, 8, 1>;

enum class Protocol { HyperfineRefill, PolarizedRefill, CoherenceBeat };

inline std::string protocol_tag(Protocol p) {
    switch (p) {
        case Protocol::HyperfineRefill: return "A";
        case Protocol::PolarizedRefill: return "B";
        case Protocol::CoherenceBeat: return "C";
    }
    throw std::logic_error("unknown protocol");
}

inline Protocol protocol_from_tag(const std::string& tag) {
    if (tag == "A" || tag == "a") return Protocol::HyperfineRefill;
    if (tag == "B" || tag == "b") return Protocol::PolarizedRefill;
    if (tag == "C" || tag == "c") return Protocol::CoherenceBeat;
    throw std::invalid_argument("unknown protocol tag '" + tag + "' (expected A, B or C)");
}

// ---------------------------------------------------------------------------
// Experiment description. Everything a single run needs; sweeps copy this and
// vary one member. Defaults describe the warm buffer-gas cell the defaults
// configs ship with.
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    Protocol protocol = Protocol::HyperfineRefill;

    // cell and collisions
    double temperature_k = 333.0;
    double density_cm3 = 3.8e11;
    double sigma_se_cm2 = 2.05e-14;
    double gamma0_s = 50.0; ///< uniform ground relaxation floor (walls, diffusion)
    double buffer_pressure_torr = 30.0;
    double broadening_mhz_per_torr = 4.9;

    // light; one scalar turns mW into rad/s for both beams
    double pump_power_mw = 1.5;
    double pump_duration_s = 2.0;
    double probe_power_mw = 0.010;
    double rabi_rad_per_sqrt_mw = 1.2e7;

    // stroboscopic probing and trace extent
    double probe_period_s = 1.0e-3;
    double probe_pulse_s = 2.0e-5;
    double probe_settle_s = 3.0e-8; ///< optical-coherence settling window per sample
    double trace_duration_s = 0.08;

    // magnetic field (axial)
    double bz_gauss = 1.0e-3;
    double residual_bz_gauss = 0.0;  ///< what "compensated" means for this cell
    double field_delay_s = 1.0e-4;   ///< beat protocol: dark time before B_z turns on

    // numerics
    double refresh_interval_s = 1.0e-4; ///< mean-field refresh cadence in the dark
    double fixed_point_tol = 1.0e-8;    ///< pump mean-field convergence (inf norm)
    int fixed_point_cap = 50;
    double steady_residual_tol = 1.0e-6; ///< |d rho/dt| budget, units of Gamma
    int velocity_groups = 1;

    double gamma_p_rad() const {
        return pressure_broadening_rad(buffer_pressure_torr, broadening_mhz_per_torr);
    }
    double gamma_se_s(double mass_kg) const {
        return spin_exchange_rate(density_cm3, sigma_se_cm2, temperature_k, mass_kg);
    }
    double gamma_col_s(double mass_kg) const {
        return se_decoherence_factor * gamma_se_s(mass_kg);
    }
    double pump_rabi_rad() const { return rabi_rad_per_sqrt_mw * std::sqrt(pump_power_mw); }
    double probe_rabi_rad() const { return rabi_rad_per_sqrt_mw * std::sqrt(probe_power_mw); }

    /// Pump beam for this protocol. The axial field is off while pumping; the
    /// beat protocol relies on that (the dark states are defined at B = 0).
    FieldConfig pump_fields() const {
        LaserComponent l;
        l.rabi_rad = pump_rabi_rad();
        l.detuning_rad = 0.0;
        switch (protocol) {
            case Protocol::HyperfineRefill:
                l.ground_F = 1; l.excited_F = 2; l.pol = Polarization::linear();
                break;
            case Protocol::PolarizedRefill:
                l.ground_F = 1; l.excited_F = 2; l.pol = Polarization::sigma_plus();
                break;
            case Protocol::CoherenceBeat:
                l.ground_F = 2; l.excited_F = 1; l.pol = Polarization::linear();
                break;
        }
        FieldConfig f;
        f.lasers = {l};
        f.bz_gauss = 0.0;
        return f;
    }

    /// Probe beam; same line and polarization logic, at probe power.
    FieldConfig probe_fields(double bz_now) const {
        FieldConfig f = pump_fields();
        f.lasers[0].rabi_rad = probe_rabi_rad();
        f.bz_gauss = bz_now;
        return f;
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
        };
        positive(temperature_k, "temperature_k");
        positive(density_cm3, "density_cm3");
        positive(sigma_se_cm2, "sigma_se_cm2");
        positive(buffer_pressure_torr, "buffer_pressure_torr");
        positive(pump_power_mw, "pump_power_mw");
        positive(pump_duration_s, "pump_duration_s");
        positive(probe_power_mw, "probe_power_mw");
        positive(rabi_rad_per_sqrt_mw, "rabi_rad_per_sqrt_mw");
        positive(probe_period_s, "probe_period_s");
        positive(probe_pulse_s, "probe_pulse_s");
        positive(probe_settle_s, "probe_settle_s");
        positive(trace_duration_s, "trace_duration_s");
        positive(refresh_interval_s, "refresh_interval_s");
        positive(fixed_point_tol, "fixed_point_tol");
        positive(steady_residual_tol, "steady_residual_tol");
        if (gamma0_s < 0) throw std::invalid_argument("gamma0_s must be non-negative");
        if (broadening_mhz_per_torr < 0)
            throw std::invalid_argument("broadening_mhz_per_torr must be non-negative");
        if (bz_gauss < 0) throw std::invalid_argument("bz_gauss must be non-negative");
        if (residual_bz_gauss < 0)
            throw std::invalid_argument("residual_bz_gauss must be non-negative");
        if (field_delay_s < 0) throw std::invalid_argument("field_delay_s must be non-negative");
        if (fixed_point_cap < 1) throw std::invalid_argument("fixed_point_cap must be at least 1");
        if (velocity_groups < 1) throw std::invalid_argument("velocity_groups must be at least 1");
        if (probe_pulse_s >= probe_period_s)
            throw std::invalid_argument("probe_pulse_s must be shorter than probe_period_s");
        if (probe_settle_s >= probe_pulse_s)
            throw std::invalid_argument("probe_settle_s must be shorter than probe_pulse_s");
        if (trace_duration_s < 2.0 * probe_period_s)
            throw std::invalid_argument("trace_duration_s too short to collect a trace");
    }

    /// Defaults tuned per measurement. The polarized run pumps weakly so the
    /// prepared state stays a small deviation from thermal: hard pumping
    /// parks the gas far off the spin-exchange equilibrium manifold and the
    /// relaxation picks up intermediate equilibration rates between the two
    /// the fit is after. The beat run probes fast (sub-period sampling of a
    /// kHz oscillation) and only needs the trace until the coherence dies.
    static ExperimentSpec for_protocol(Protocol p) {
        ExperimentSpec s;
        s.protocol = p;
        switch (p) {
            case Protocol::HyperfineRefill:
                break;
            case Protocol::PolarizedRefill:
                s.pump_power_mw = 5.0e-4;
                s.trace_duration_s = 0.12;
                break;
            case Protocol::CoherenceBeat:
                s.probe_period_s = 5.0e-5;
                s.probe_pulse_s = 2.5e-6;
                s.trace_duration_s = 0.018;
                break;
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// Reference states of the F=2 ground manifold at B = 0 for the balanced
// sigma+/sigma- beam on F=2 -> F'=1. Lambda and M are the two dark
// superpositions; Lambda* (the odd partner of Lambda) couples maximally and
// is the standard bright control.
// ---------------------------------------------------------------------------

inline Vector8 lambda_state(const LevelScheme& s) {
    Vector8 v = Vector8::Zero();
    v(s.index_of(false, 2, -1)) = 1.0 / std::sqrt(2.0);
    v(s.index_of(false, 2, +1)) = 1.0 / std::sqrt(2.0);
    return v;
}

inline Vector8 lambda_star_state(const LevelScheme& s) {
    Vector8 v = Vector8::Zero();
    v(s.index_of(false, 2, -1)) = 1.0 / std::sqrt(2.0);
    v(s.index_of(false, 2, +1)) = -1.0 / std::sqrt(2.0);
    return v;
}

inline Vector8 m_state(const LevelScheme& s) {
    Vector8 v = Vector8::Zero();
    v(s.index_of(false, 2, -2)) = 1.0 / std::sqrt(8.0);
    v(s.index_of(false, 2, 0)) = std::sqrt(6.0) / std::sqrt(8.0);
    v(s.index_of(false, 2, +2)) = 1.0 / std::sqrt(8.0);
    return v;
}

/// Thermal ground-sector state (fully mixed over the 8 sublevels).
inline Matrix8 thermal_ground() { return Matrix8::Identity() / double(n_ground); }

// ---------------------------------------------------------------------------
// Beat frequency bookkeeping. The Delta m = 2 coherences of F=2 precess at
// twice the single-quantum Zeeman splitting; that is the fundamental the
// subtracted beat traces show. A residual Delta m = 4 coherence would appear
// at twice that again, which is what the harmonic check looks for.
// ---------------------------------------------------------------------------

struct BeatPrediction {
    double fundamental_rad = 0.0;
    double second_harmonic_rad = 0.0;
};

inline BeatPrediction beat_frequencies(const LevelScheme& scheme, double bz_gauss) {
    const int up = scheme.index_of(false, 2, +1);
    const int dn = scheme.index_of(false, 2, -1);
    const double w = std::abs(scheme.zeeman_shift(up, bz_gauss) - scheme.zeeman_shift(dn, bz_gauss));
    return {w, 2.0 * w};
}

// ---------------------------------------------------------------------------
// Pump steady state.
// ---------------------------------------------------------------------------

struct PumpResult {
    Matrix16 rho = Matrix16::Zero();
    int iterations = 0;
    double mean_field_delta = 0.0; ///< last fixed-point update, inf norm
    double residual_gamma = 0.0;   ///< |d rho/dt| of the result in units of Gamma
    bool converged = false;
    std::string message;

    Matrix8 ground() const {
        Matrix8 g = ground_block(rho);
        return g / g.trace().real();
    }
};

namespace detail {

/// Unique stationary state of a frozen generator: least-squares solve of the
/// generator stacked with a trace constraint. The constraint row is scaled to
/// an optical rate so it is not drowned by the hyperfine entries.
inline Matrix16 stationary_state(const MatrixXcd& l, double scale) {
    const int n = n_levels * n_levels;
    MatrixXcd a(n + 1, n);
    a.topRows(n) = l;
    a.row(n).setZero();
    for (int i = 0; i < n_levels; ++i) a(n, i * n_levels + i) = scale;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n + 1);
    b(n) = scale;
    const Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);
    Matrix16 rho = unvec<n_levels>(x);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return rho;
}

inline Eigen::VectorXd real_stack(const Matrix8& m) {
    Eigen::VectorXd v(2 * n_ground * n_ground);
    const auto flat = vec<n_ground>(m);
    v.head(n_ground * n_ground) = flat.real();
    v.tail(n_ground * n_ground) = flat.imag();
    return v;
}

inline Matrix8 real_unstack(const Eigen::VectorXd& v) {
    Eigen::Vector<cd, n_ground * n_ground> flat =
        v.head(n_ground * n_ground).cast<cd>() + cd(0, 1) * v.tail(n_ground * n_ground).cast<cd>();
    return unvec<n_ground>(flat);
}

} // namespace detail

/// Drive the pump segment to its self-consistent steady state. The mean field
/// feeding the spin-exchange kernel is the unknown; each candidate gives a
/// frozen generator whose stationary state gives the next mean field. Plain
/// iteration contracts slowly when the steady state is dark-state dominated
/// (the pump does not touch the dark manifold, so only gamma0 and spin
/// exchange move it), so the loop uses Anderson mixing over a short history,
/// falling back to plain steps whenever the residual grows.
inline PumpResult run_pump_to_steady_state(const LevelScheme& scheme, const TransitionTable& table,
                                           const ExperimentSpec& spec,
                                           PropagationStats* stats = nullptr) {
    spec.validate();
    const double gamma_rad = scheme.data().gamma_natural_rad();
    const RelaxationConfig relax{spec.gamma_p_rad(), spec.gamma0_s};
    const FieldConfig pump = spec.pump_fields();
    const double gcol = spec.gamma_col_s(scheme.data().mass_kg);

    auto solve_for = [&](const Matrix8& mf) {
        const MatrixXcd lse = embed_ground_superop(build_spin_exchange_superop(mf, gcol));
        const MatrixXcd l = assemble_liouvillian(scheme, table, pump, relax, 0.0, &lse);
        return detail::stationary_state(l, gamma_rad);
    };

    PumpResult out;
    const int dim = 2 * n_ground * n_ground;
    const int depth = 4;
    std::vector<Eigen::VectorXd> gs, fs; // iterates of the map and residuals
    Eigen::VectorXd x = detail::real_stack(thermal_ground());

    for (int it = 1; it <= spec.fixed_point_cap; ++it) {
        const Matrix8 mf = detail::real_unstack(x);
        out.rho = solve_for(mf);
        Matrix8 g = ground_block(out.rho);
        g /= g.trace().real();
        const Eigen::VectorXd gx = detail::real_stack(g);
        const Eigen::VectorXd f = gx - x;
        out.iterations = it;
        out.mean_field_delta = f.lpNorm<Eigen::Infinity>();
        if (out.mean_field_delta < spec.fixed_point_tol) {
            out.converged = true;
            break;
        }
        if (!fs.empty() && f.norm() > 2.0 * fs.back().norm()) {
            gs.clear();
            fs.clear();
        }
        Eigen::VectorXd next = gx;
        if (!fs.empty()) {
            const int m = static_cast<int>(fs.size());
            Eigen::MatrixXd df(dim, m), dg(dim, m);
            for (int j = 0; j < m; ++j) {
                df.col(j) = f - fs[static_cast<std::size_t>(m - 1 - j)];
                dg.col(j) = gx - gs[static_cast<std::size_t>(m - 1 - j)];
            }
            const Eigen::VectorXd gamma = df.colPivHouseholderQr().solve(f);
            next -= dg * gamma;
        }
        gs.push_back(gx);
        fs.push_back(f);
        if (static_cast<int>(gs.size()) > depth) {
            gs.erase(gs.begin());
            fs.erase(fs.begin());
        }
        x = next;
    }

    // Residual of the returned state under its own refreshed generator.
    {
        Matrix8 g = ground_block(out.rho);
        g /= g.trace().real();
        const MatrixXcd lse = embed_ground_superop(build_spin_exchange_superop(g, gcol));
        const MatrixXcd l = assemble_liouvillian(scheme, table, pump, relax, 0.0, &lse);
        out.residual_gamma =
            apply_liouvillian(l, out.rho).lpNorm<Eigen::Infinity>() / gamma_rad;
    }
    if (out.converged && out.residual_gamma > spec.steady_residual_tol) {
        out.converged = false;
        out.message = "stationary-state residual above tolerance";
    } else if (!out.converged) {
        out.message = "mean-field iteration did not reach tolerance in " +
                      std::to_string(spec.fixed_point_cap) + " iterations";
    }
    detail::sanitize<n_levels>(out.rho, stats, true);
    return out;
}

// ---------------------------------------------------------------------------
// Dark-segment evolution with stroboscopic probing.
// ---------------------------------------------------------------------------

/// Diagnostics a dark run reports alongside its trace.
struct DarkRunInfo {
    double max_pulse_back_action = 0.0; ///< worst per-pulse population change (TV distance)
    int propagator_builds = 0;
    int mean_field_refreshes = 0;
    double alpha_initial = 0.0;
    double alpha_steady = 0.0;
};

namespace detail {

/// Zero the generator rows and columns that involve coherences between the
/// two ground hyperfine manifolds. Those elements sit the ground splitting
/// (~2pi * 6.8 GHz) off resonance, so anything the collision kernel spills
/// there winds ten orders of magnitude faster than it grows; treating the
/// block as empty is exact at our precision and keeps 4e10 rad/s phases out
/// of every cached exponential.
inline void drop_cross_manifold(MatrixXcd& l) {
    auto f2 = [](int i) { return i >= 3; }; // ground index 3 starts the F=2 manifold
    for (int j = 0; j < n_ground; ++j)
        for (int i = 0; i < n_ground; ++i) {
            if (f2(i) == f2(j)) continue;
            const int v = j * n_ground + i;
            l.row(v).setZero();
            l.col(v).setZero();
        }
}

/// Ground-to-ground block of a full-space propagation map (column stacking,
/// same index convention as embed_ground_superop).
inline MatrixXcd ground_to_ground(const MatrixXcd& full) {
    MatrixXcd out(n_ground * n_ground, n_ground * n_ground);
    for (int j1 = 0; j1 < n_ground; ++j1)
        for (int i1 = 0; i1 < n_ground; ++i1)
            for (int j2 = 0; j2 < n_ground; ++j2)
                for (int i2 = 0; i2 < n_ground; ++i2)
                    out(j1 * n_ground + i1, j2 * n_ground + i2) =
                        full(j1 * n_levels + i1, j2 * n_levels + i2);
    return out;
}

/// Everything the dark loop needs that does not change during a trace.
struct DarkEngine {
    const LevelScheme& scheme;
    const TransitionTable& table;
    const ExperimentSpec& spec;
    double gamma_col;
    MatrixXcd relax_g; // uniform gamma0, ground sector

    DarkEngine(const LevelScheme& s, const TransitionTable& t, const ExperimentSpec& sp)
        : scheme(s), table(t), spec(sp), gamma_col(sp.gamma_col_s(s.data().mass_kg)),
          relax_g(build_uniform_relaxation_ground(sp.gamma0_s)) {}

    MatrixXcd generator(const Matrix8& mf, double bz) const {
        MatrixXcd l = commutator_superop(build_ground_hamiltonian(scheme, bz));
        l += build_spin_exchange_superop(mf, gamma_col);
        l += relax_g;
        drop_cross_manifold(l);
        return l;
    }
};

/// Per-field-value probe machinery: settle propagators (one per velocity
/// class) for sampling, and the pulse kick, i.e. the difference between a
/// probe-on pulse and the same interval dark. The kick carries the probe's
/// entire effect on the ground state; the interval itself is evolved by the
/// dark loop so spin exchange never runs with a stale mean field for long.
struct ProbeKit {
    FieldConfig probe;
    std::vector<Propagator> settle;
    std::vector<double> weight;
    MatrixXcd kick; // 64x64

    ProbeKit(const DarkEngine& eng, double bz) : probe(eng.spec.probe_fields(bz)) {
        const RelaxationConfig relax{eng.spec.gamma_p_rad(), eng.spec.gamma0_s};
        const MatrixXcd lse =
            embed_ground_superop(build_spin_exchange_superop(thermal_ground(), eng.gamma_col));
        const auto nodes = thermal_velocity_grid(eng.spec.velocity_groups,
                                                 eng.spec.temperature_k, eng.scheme.data().mass_kg);
        for (const auto& node : nodes) {
            const MatrixXcd l =
                assemble_liouvillian(eng.scheme, eng.table, probe, relax, node.v, &lse);
            settle.emplace_back(l, eng.spec.probe_settle_s);
            weight.push_back(node.w);
        }
        // The dark half of the pulse window is what the trace loop evolves
        // anyway, so it comes from the (cheap) ground-sector generator; only
        // the probe-on half needs a full-space exponential.
        const MatrixXcd lp = assemble_liouvillian(eng.scheme, eng.table, probe, relax, 0.0, &lse);
        const MatrixXcd ep = (lp * eng.spec.probe_pulse_s).exp();
        const MatrixXcd ed = (eng.generator(thermal_ground(), bz) * eng.spec.probe_pulse_s).exp();
        kick = ground_to_ground(ep) - ed;
    }

    double sample(const Matrix8& g, const DarkEngine& eng, PropagationStats* stats) const {
        const Matrix16 full = embed_ground(g);
        double a = 0.0;
        for (std::size_t k = 0; k < settle.size(); ++k) {
            const Matrix16 settled = settle[k].apply(full, stats, true);
            a += weight[k] * absorption_signal(settled, eng.scheme, eng.table, probe);
        }
        return a;
    }

    /// Apply the pulse kick; returns the population disturbance it caused.
    double apply_kick(Matrix8& g, PropagationStats* stats) const {
        const Matrix8 dg = unvec<n_ground>((kick * vec<n_ground>(g)).eval());
        double moved = 0.0;
        for (int i = 0; i < n_ground; ++i) moved += std::abs(dg(i, i).real());
        g += dg;
        detail::sanitize<n_ground>(g, stats, true);
        return 0.5 * moved;
    }
};

/// Dark evolution of the ground state from 0 to `duration`, axial field
/// switching from bz_before to bz_after at t_switch, absorption sampled every
/// probe period. Timestamps are pulse starts; the kick lands after sampling.
inline DecayTrace run_dark_trace(const DarkEngine& eng, Matrix8 g, double duration,
                                 double bz_before, double t_switch, double bz_after,
                                 PropagationStats* stats, DarkRunInfo* info) {
    const double period = eng.spec.probe_period_s;
    const double refresh = eng.spec.refresh_interval_s;
    const ProbeKit kit_before(eng, bz_before);
    // Avoid building a second kit when the field never changes.
    const bool switches = (t_switch < duration) && (bz_after != bz_before);
    const ProbeKit kit_after = switches ? ProbeKit(eng, bz_after) : kit_before;

    DarkRunInfo local;
    DarkRunInfo& di = info ? *info : local;
    di.propagator_builds += static_cast<int>(kit_before.settle.size()) + (switches ? 2 : 1);

    Matrix8 mf = g / g.trace().real();
    long mf_version = 0;
    struct Key {
        long version;
        double dt, bz;
        bool operator<(const Key& o) const {
            if (version != o.version) return version < o.version;
            if (dt != o.dt) return dt < o.dt;
            return bz < o.bz;
        }
    };
    std::map<Key, Propagator> cache;

    auto advance = [&](double from, double to) {
        double t = from;
        while (t < to - 1e-15 * std::max(1.0, to)) {
            // next event: mean-field refresh boundary or the field switch
            const double next_refresh = (std::floor(t / refresh + 1e-9) + 1.0) * refresh;
            double stop = std::min(to, next_refresh);
            if (switches && t < t_switch && t_switch < stop) stop = t_switch;
            const double bz = (switches && t >= t_switch) ? bz_after : bz_before;
            const double dt = stop - t;
            if (dt <= 0.0) break;
            const Key key{mf_version, dt, bz};
            auto it = cache.find(key);
            if (it == cache.end()) {
                it = cache.emplace(key, Propagator(eng.generator(mf, bz), dt)).first;
                ++di.propagator_builds;
            }
            g = it->second.apply_ground(g, stats, true);
            t = stop;
            if (std::abs(t - next_refresh) < 1e-12 * std::max(1.0, next_refresh)) {
                mf = g / g.trace().real();
                ++mf_version;
                ++di.mean_field_refreshes;
                cache.clear();
            }
        }
    };

    const int n_samples = static_cast<int>(std::floor(duration / period + 1e-9)) + 1;
    DecayTrace tr;
    tr.time_s.reserve(static_cast<std::size_t>(n_samples));
    tr.alpha_raw.reserve(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        const double tk = k * period;
        if (k > 0) advance((k - 1) * period, tk);
        const ProbeKit& kit = (switches && tk >= t_switch) ? kit_after : kit_before;
        tr.time_s.push_back(tk);
        tr.alpha_raw.push_back(kit.sample(g, eng, stats));
        const double moved = kit.apply_kick(g, stats);
        di.max_pulse_back_action = std::max(di.max_pulse_back_action, moved);
    }

    // Thermal is the fixed point of the dark dynamics, so its absorption is
    // the steady level the normalized trace decays to.
    const ProbeKit& end_kit = switches ? kit_after : kit_before;
    di.alpha_initial = tr.alpha_raw.front();
    di.alpha_steady = end_kit.sample(thermal_ground(), eng, stats);
    tr.alpha_norm = normalize_trace(tr.alpha_raw, di.alpha_steady, di.alpha_initial);
    return tr;
}

} // namespace detail

/// Relaxation-in-the-dark measurement (hyperfine and polarized refill): pump
/// steady state supplied as `g0`, probed at the residual field for the whole
/// trace.
inline DecayTrace run_relaxation_in_dark(const LevelScheme& scheme, const TransitionTable& table,
                                         const ExperimentSpec& spec, const Matrix8& g0,
                                         PropagationStats* stats = nullptr,
                                         DarkRunInfo* info = nullptr) {
    spec.validate();
    const detail::DarkEngine eng(scheme, table, spec);
    DecayTrace tr = detail::run_dark_trace(eng, g0, spec.trace_duration_s, spec.residual_bz_gauss,
                                           spec.trace_duration_s, spec.residual_bz_gauss, stats,
                                           info);
    tr.meta.protocol = protocol_tag(spec.protocol);
    tr.meta.density_cm3 = spec.density_cm3;
    tr.meta.bz_gauss = spec.residual_bz_gauss;
    tr.meta.delay_s = 0.0;
    return tr;
}

/// Beat measurement: dark delay at the residual field, then the axial field
/// switches on and the surviving Delta m = 2 coherences precess.
inline DecayTrace run_ramsey_zeeman(const LevelScheme& scheme, const TransitionTable& table,
                                    const ExperimentSpec& spec, const Matrix8& g0,
                                    double field_delay_s, PropagationStats* stats = nullptr,
                                    DarkRunInfo* info = nullptr) {
    spec.validate();
    if (field_delay_s < 0) throw std::invalid_argument("field_delay_s must be non-negative");
    const detail::DarkEngine eng(scheme, table, spec);
    DecayTrace tr =
        detail::run_dark_trace(eng, g0, spec.trace_duration_s, spec.residual_bz_gauss,
                               field_delay_s, spec.bz_gauss, stats, info);
    tr.meta.protocol = protocol_tag(spec.protocol);
    tr.meta.density_cm3 = spec.density_cm3;
    tr.meta.bz_gauss = spec.bz_gauss;
    tr.meta.delay_s = field_delay_s;
    return tr;
}

// ---------------------------------------------------------------------------
// Whole-protocol driver: pump, then the dark segment(s) the protocol calls
// for. The beat protocol runs twice, the second trace delayed by half an
// oscillation period so the pair subtracts to a pure beat.
// ---------------------------------------------------------------------------

struct ProtocolRun {
    PumpResult pump;
    std::vector<DecayTrace> traces;
    DecayTrace difference;   ///< beat protocol only (empty otherwise)
    BeatPrediction beat;     ///< beat protocol only
    PropagationStats stats;
    DarkRunInfo dark_info;
};

inline ProtocolRun run_protocol(const LevelScheme& scheme, const TransitionTable& table,
                                const ExperimentSpec& spec) {
    spec.validate();
    const FieldConfig probe = spec.probe_fields(spec.bz_gauss);
    if (!probe_is_weak(probe, scheme.data().gamma_natural_rad(), spec.gamma_p_rad()))
        throw std::invalid_argument(
            "probe_power_mw leaves the weak-probe regime for this linewidth");

    ProtocolRun run;
    run.pump = run_pump_to_steady_state(scheme, table, spec, &run.stats);
    if (!run.pump.converged)
        throw std::runtime_error("pump did not reach a steady state: " + run.pump.message);
    const Matrix8 g0 = run.pump.ground();

    if (spec.protocol == Protocol::CoherenceBeat) {
        run.beat = beat_frequencies(scheme, spec.bz_gauss);
        const double half_period = pi / run.beat.fundamental_rad;
        const double d1 = spec.field_delay_s;
        const double d2 = d1 + half_period;
        run.traces.push_back(
            run_ramsey_zeeman(scheme, table, spec, g0, d1, &run.stats, &run.dark_info));
        run.traces.push_back(
            run_ramsey_zeeman(scheme, table, spec, g0, d2, &run.stats, &run.dark_info));
        run.difference = subtract_traces(run.traces[0], run.traces[1]);
    } else {
        run.traces.push_back(
            run_relaxation_in_dark(scheme, table, spec, g0, &run.stats, &run.dark_info));
    }
    return run;
}

/// Restrict a subtracted beat pair to t >= the later switch-on and move the
/// time origin there. Before that point the second trace has no field yet,
/// so the difference is not the decaying sinusoid the fit models.
inline DecayTrace beat_fit_window(const DecayTrace& difference, double t_start) {
    DecayTrace win;
    win.meta = difference.meta;
    for (std::size_t i = 0; i < difference.size(); ++i) {
        if (difference.time_s[i] < t_start) continue;
        win.time_s.push_back(difference.time_s[i] - t_start);
        win.alpha_raw.push_back(difference.alpha_raw[i]);
        win.alpha_norm.push_back(difference.alpha_norm[i]);
    }
    return win;
}

inline DecayTrace beat_fit_window(const ProtocolRun& run) {
    if (run.traces.size() != 2)
        throw std::invalid_argument("beat window needs the two-delay run");
    return beat_fit_window(run.difference, run.traces[1].meta.delay_s);
}

} // namespace rbrelax
