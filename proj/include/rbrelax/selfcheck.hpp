#pragma once

// The invariant suite behind the `validate` subcommand. Each check returns a
// named pass/fail so a broken build points at the physics it broke. The list
// mirrors the guarantees the rest of the code leans on: angular-momentum
// table normalization, generator conservation laws, collision-kernel fixed
// points, fit round trips, serialization identity, and the probe-weakness
// budget of the stroboscopic readout.

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rbrelax/absorption.hpp"
#include "rbrelax/csv.hpp"
#include "rbrelax/doppler.hpp"
#include "rbrelax/fitting.hpp"
#include "rbrelax/liouville.hpp"
#include "rbrelax/protocol.hpp"
#include "rbrelax/run_config.hpp"
#include "rbrelax/spin_exchange.hpp"
#include "rbrelax/trace.hpp"
#include "rbrelax/vapor.hpp"

namespace rbrelax {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline Matrix8 random_ground_state(std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Matrix8 a;
    for (int i = 0; i < n_ground; ++i)
        for (int j = 0; j < n_ground; ++j) a(i, j) = cd(nd(rng), nd(rng));
    Matrix8 rho = a * a.adjoint();
    return rho / rho.trace().real();
}

inline Matrix16 random_full_state(std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Matrix16 a;
    for (int i = 0; i < n_levels; ++i)
        for (int j = 0; j < n_levels; ++j) a(i, j) = cd(nd(rng), nd(rng));
    Matrix16 rho = a * a.adjoint();
    return rho / rho.trace().real();
}

/// Collision contribution d rho/dt for partner `mf`, in units of the
/// collision rate (gamma_col = 1).
inline Matrix8 se_contribution(const Matrix8& rho, const Matrix8& mf) {
    const MatrixXcd l = build_spin_exchange_superop(mf, 1.0);
    return unvec<n_ground>((l * vec<n_ground>(rho)).eval());
}

inline double ground_fz(const LevelScheme& scheme, const Matrix8& rho) {
    double fz = 0.0;
    for (int i = 0; i < n_ground; ++i) fz += scheme.level(i).m * rho(i, i).real();
    return fz;
}

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

} // namespace detail

/// Amplitude of the e^{-gamma t} sin(omega t) component and of its double
/// frequency partner, via linear least squares at fixed rates. Used to bound
/// the second-harmonic content of the beat signal.
inline std::pair<double, double> harmonic_amplitudes(const DecayTrace& tr, double omega_rad,
                                                     double gamma_s, bool raw = false) {
    const std::vector<double>& y = raw ? tr.alpha_raw : tr.alpha_norm;
    const Eigen::Index n = static_cast<Eigen::Index>(tr.size());
    if (n < 8) throw std::invalid_argument("harmonic analysis needs at least 8 samples");
    Eigen::MatrixXd basis(n, 5);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = tr.time_s[i];
        const double env = std::exp(-gamma_s * t);
        basis(i, 0) = env * std::sin(omega_rad * t);
        basis(i, 1) = env * std::cos(omega_rad * t);
        basis(i, 2) = env * std::sin(2.0 * omega_rad * t);
        basis(i, 3) = env * std::cos(2.0 * omega_rad * t);
        basis(i, 4) = 1.0;
        rhs(i) = y[i];
    }
    const Eigen::VectorXd c = basis.colPivHouseholderQr().solve(rhs);
    return {std::hypot(c(0), c(1)), std::hypot(c(2), c(3))};
}

namespace selfcheck {

inline void check(std::vector<CheckResult>& out, const std::string& name, bool pass,
                  const std::string& detail = "") {
    out.push_back({name, pass, detail});
}

inline void angular_momentum(std::vector<CheckResult>& out, const LevelScheme& scheme,
                             const TransitionTable& table) {
    const double expected[3] = {1.0 / 12.0, 1.0 / 4.0, 1.0 / 2.0};
    bool pass = true;
    std::string detail;
    for (int m = -1; m <= 1; ++m) {
        const int gi = scheme.index_of(false, 1, m);
        const int ei = scheme.index_of(true, 2, m + 1) - n_ground;
        const double a = table.amplitude(gi, ei, +1);
        const double w = a * a;
        if (std::abs(w - expected[m + 1]) > 1e-14) pass = false;
        detail += detail.empty() ? detail::fmt(w) : ", " + detail::fmt(w);
    }
    check(out, "sigma+ absorption weights 1/12, 1/4, 1/2", pass, detail);

    bool norm = true;
    for (int ei = 0; ei < n_excited; ++ei) {
        double s = 0.0;
        for (int gi = 0; gi < n_ground; ++gi)
            for (int q = -1; q <= 1; ++q) s += std::pow(table.amplitude(gi, ei, q), 2);
        if (std::abs(s - 1.0) > 1e-12) norm = false;
    }
    check(out, "decay branching sums to 1 per excited level", norm);

    const double g1 = scheme.g_F(scheme.index_of(false, 1, 0));
    const double g2 = scheme.g_F(scheme.index_of(false, 2, 0));
    check(out, "ground g-factors near +-1/2 with opposite signs",
          g1 < -0.49 && g1 > -0.52 && g2 > 0.49 && g2 < 0.51,
          detail::fmt(g1) + ", " + detail::fmt(g2));

    const int i21 = scheme.index_of(false, 2, 1);
    const int i22 = scheme.index_of(false, 2, 2);
    const bool zeeman = std::abs(scheme.zeeman_shift(i22, 1e-3) -
                                 2.0 * scheme.zeeman_shift(i21, 1e-3)) < 1e-9 &&
                        std::abs(scheme.zeeman_shift(i21, 2e-3) -
                                 2.0 * scheme.zeeman_shift(i21, 1e-3)) < 1e-9;
    check(out, "zeeman shifts linear in m and field", zeeman);

    const BeatPrediction bp = beat_frequencies(scheme, 1e-3);
    check(out, "beat prediction doubles with its harmonic",
          std::abs(bp.second_harmonic_rad - 2.0 * bp.fundamental_rad) < 1e-9 &&
              std::abs(bp.fundamental_rad - 2.0 * scheme.zeeman_shift(i21, 1e-3)) < 1e-9);
}

inline void generator_conservation(std::vector<CheckResult>& out, const LevelScheme& scheme,
                                   const TransitionTable& table) {
    ExperimentSpec spec = ExperimentSpec::for_protocol(Protocol::CoherenceBeat);
    spec.pump_power_mw = 0.05; // moderate drive, keeps the exponential well conditioned
    const RelaxationConfig relax{spec.gamma_p_rad(), spec.gamma0_s};
    const MatrixXcd l = assemble_liouvillian(scheme, table, spec.pump_fields(), relax);
    const Propagator prop(l, 1e-8);

    std::mt19937 rng(71);
    Matrix16 rho = detail::random_full_state(rng);
    PropagationStats stats;
    for (int i = 0; i < 20; ++i) rho = prop.apply(rho, &stats);
    const bool herm = (rho - rho.adjoint()).lpNorm<Eigen::Infinity>() < 1e-10;
    check(out, "propagation preserves trace, hermiticity, positivity",
          stats.max_trace_drift < 1e-10 && stats.min_eigenvalue > -1e-6 &&
              std::abs(rho.trace().real() - 1.0) < 1e-12 && herm,
          "trace drift " + detail::fmt(stats.max_trace_drift) + ", min eig " +
              detail::fmt(stats.min_eigenvalue));

    const MatrixXcd ldec = build_optical_decay(scheme, table);
    const Matrix16 ground_only = embed_ground(thermal_ground());
    const Matrix16 image = unvec<n_levels>((ldec * vec<n_levels>(ground_only)).eval());
    check(out, "radiative decay leaves ground-only states alone",
          image.lpNorm<Eigen::Infinity>() < 1e-15);
}

inline void spin_exchange_kernel(std::vector<CheckResult>& out, const LevelScheme& scheme) {
    std::mt19937 rng(1234);
    double worst_trace = 0.0, worst_herm = 0.0, worst_fz = 0.0, worst_eig = 0.0;
    for (int draw = 0; draw < 5; ++draw) {
        const Matrix8 rho = detail::random_ground_state(rng);
        const Matrix8 partner = detail::random_ground_state(rng);
        const Matrix8 k = detail::se_contribution(rho, partner);
        worst_trace = std::max(worst_trace, std::abs(k.trace().real()));
        worst_herm = std::max(worst_herm, (k - k.adjoint()).lpNorm<Eigen::Infinity>());

        // total angular momentum is conserved when the partner is the gas itself
        const Matrix8 self = detail::se_contribution(rho, rho);
        worst_fz = std::max(worst_fz, std::abs(detail::ground_fz(scheme, self)));

        const Matrix8 stepped = rho + 5e-4 * detail::se_contribution(rho, partner);
        Eigen::SelfAdjointEigenSolver<Matrix8> es(stepped, Eigen::EigenvaluesOnly);
        worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
    }
    check(out, "collision kernel is traceless", worst_trace < 1e-12, detail::fmt(worst_trace));
    check(out, "collision kernel output stays hermitian", worst_herm < 1e-12);
    check(out, "collision kernel conserves <F_z> against itself", worst_fz < 1e-10,
          detail::fmt(worst_fz));
    check(out, "small collision steps keep states positive", worst_eig > -1e-9,
          detail::fmt(worst_eig));

    const Matrix8 th = thermal_ground();
    Matrix8 stretched = Matrix8::Zero();
    stretched(scheme.index_of(false, 2, 2), scheme.index_of(false, 2, 2)) = 1.0;
    const double th_norm = detail::se_contribution(th, th).lpNorm<Eigen::Infinity>();
    const double st_norm =
        detail::se_contribution(stretched, stretched).lpNorm<Eigen::Infinity>();
    check(out, "thermal and stretched states are collision fixed points",
          th_norm < 1e-12 && st_norm < 1e-12,
          detail::fmt(th_norm) + ", " + detail::fmt(st_norm));
}

inline void doppler_grid(std::vector<CheckResult>& out, const LevelScheme& scheme) {
    const double mass = scheme.data().mass_kg;
    const auto one = thermal_velocity_grid(1, 333.0, mass);
    const auto grid = thermal_velocity_grid(8, 333.0, mass);
    double wsum = 0.0, v2 = 0.0;
    for (const auto& node : grid) {
        wsum += node.w;
        v2 += node.w * node.v * node.v;
    }
    const double expect = kB_si * 333.0 / mass;
    check(out, "velocity grid reproduces the thermal moments",
          one.size() == 1 && one[0].v == 0.0 && std::abs(wsum - 1.0) < 1e-12 &&
              std::abs(v2 / expect - 1.0) < 1e-10);
}

inline void dark_bright_contrast(std::vector<CheckResult>& out, const LevelScheme& scheme,
                                 const TransitionTable& table) {
    const ExperimentSpec spec = ExperimentSpec::for_protocol(Protocol::CoherenceBeat);
    const RelaxationConfig relax{spec.gamma_p_rad(), spec.gamma0_s};
    const FieldConfig probe = spec.probe_fields(0.0);

    auto contrast = [&](const LevelScheme& sc, const TransitionTable& tb) {
        const MatrixXcd l = assemble_liouvillian(sc, tb, probe, relax);
        const Propagator settle(l, spec.probe_settle_s);
        auto alpha_of = [&](const Vector8& state) {
            Matrix8 g = state * state.adjoint();
            Matrix16 rho = settle.apply(embed_ground(g), nullptr, false);
            return absorption_signal(rho, sc, tb, probe);
        };
        const double dark = alpha_of(lambda_state(sc));
        const double bright = alpha_of(lambda_star_state(sc));
        return std::pair<double, double>{dark, bright};
    };

    // The excited splitting is only a few pressure-broadened linewidths, so
    // even the dark combination absorbs a little through the far line.  With
    // the lines pushed apart the contrast becomes essentially perfect.
    AtomData isolated = scheme.data();
    isolated.hyperfine_excited_hz *= 1000.0;
    const LevelScheme iso_scheme(isolated);
    const TransitionTable iso_table(iso_scheme);

    const auto [dark_iso, bright_iso] = contrast(iso_scheme, iso_table);
    const auto [dark_real, bright_real] = contrast(scheme, table);
    check(out, "lambda state is dark, its odd partner bright",
          bright_iso > 0.0 && dark_iso < 1e-6 * bright_iso && bright_real > 0.0 &&
              dark_real < 0.06 * bright_real,
          "isolated ratio " + detail::fmt(dark_iso / bright_iso) + ", overlapped " +
              detail::fmt(dark_real / bright_real));
}

inline void field_only_precession(std::vector<CheckResult>& out, const LevelScheme& scheme) {
    const double bz = 1e-3;
    const MatrixXcd l = commutator_superop(build_ground_hamiltonian(scheme, bz));
    const double t = 2e-4;
    const Propagator prop(l, t);
    const Vector8 lam = lambda_state(scheme);
    Matrix8 g = lam * lam.adjoint();
    const Matrix8 g1 = prop.apply_ground(g, nullptr, false);

    bool pops = true;
    for (int i = 0; i < n_ground; ++i)
        if (std::abs(g1(i, i).real() - g(i, i).real()) > 1e-12) pops = false;

    const int lo = scheme.index_of(false, 2, -1);
    const int hi = scheme.index_of(false, 2, +1);
    const double advance = std::arg(g1(hi, lo) / g(hi, lo));
    const double expected = -beat_frequencies(scheme, bz).fundamental_rad * t;
    const bool phase = std::abs(std::remainder(advance - expected, two_pi)) < 1e-9;
    check(out, "pure field evolution precesses without transport", pops && phase,
          "phase " + detail::fmt(advance) + " vs " + detail::fmt(expected));
}

inline void fit_engine(std::vector<CheckResult>& out) {
    // 40 ms window: long enough that the tail separates the constant from
    // the slow component during initialization
    std::vector<double> t(400);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1e-4 * static_cast<double>(i);

    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };

    std::vector<double> y1(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) y1[i] = 0.8 * std::exp(-310.0 * t[i]) + 0.05;
    const FitResult f1 = fit_exponential(t, y1);
    const bool r1 = f1.converged && rel(f1.p(0), 0.8) < 1e-6 && rel(f1.p(1), 310.0) < 1e-6 &&
                    std::abs(f1.p(2) - 0.05) < 1e-6;

    std::vector<double> y2(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        y2[i] = -0.8 * std::exp(-300.0 * t[i]) + 0.3 * std::exp(-50.0 * t[i]) + 1.0;
    const FitResult f2 = fit_double_exponential(t, y2);
    const bool r2 = f2.converged && rel(f2.p(1), 300.0) < 1e-6 && rel(f2.p(3), 50.0) < 1e-6 &&
                    rel(f2.p(0), -0.8) < 1e-6 && rel(f2.p(2), 0.3) < 1e-6;

    std::vector<double> y3(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        y3[i] = std::exp(-300.0 * t[i]) * std::sin(two_pi * 1400.0 * t[i] + 0.5 * pi);
    const FitResult f3 = fit_decaying_sinusoid(t, y3);
    const bool r3 = f3.converged && rel(f3.p(1), 300.0) < 1e-6 &&
                    rel(f3.p(2), two_pi * 1400.0) < 1e-6;
    check(out, "fit models round trip noiseless data", r1 && r2 && r3);

    // analytic jacobians against central differences at a random point
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.3, 1.7);
    bool jac = true;
    {
        Eigen::VectorXd p(5);
        p << u(rng), 300.0 * u(rng), -u(rng), 50.0 * u(rng), u(rng);
        Eigen::VectorXd row(5), fd(5);
        for (double tt : {1e-4, 3e-3, 2e-2}) {
            detail::double_exp_jacobian(tt, p, row);
            for (int k = 0; k < 5; ++k) {
                Eigen::VectorXd pp = p, pm = p;
                const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
                pp(k) += h;
                pm(k) -= h;
                fd(k) = (detail::double_exp_model(tt, pp) - detail::double_exp_model(tt, pm)) /
                        (2.0 * h);
            }
            if ((row - fd).lpNorm<Eigen::Infinity>() >
                1e-6 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()))
                jac = false;
        }
        Eigen::VectorXd ps(5);
        ps << u(rng), 200.0 * u(rng), 9000.0 * u(rng), 0.4, 0.1;
        Eigen::VectorXd row5(5), fd5(5);
        for (double tt : {2e-4, 4e-3}) {
            detail::damped_sin_jacobian(tt, ps, row5);
            for (int k = 0; k < 5; ++k) {
                Eigen::VectorXd pp = ps, pm = ps;
                const double h = 1e-7 * std::max(1.0, std::abs(ps(k)));
                pp(k) += h;
                pm(k) -= h;
                fd5(k) = (detail::damped_sin_model(tt, pp) - detail::damped_sin_model(tt, pm)) /
                         (2.0 * h);
            }
            if ((row5 - fd5).lpNorm<Eigen::Infinity>() >
                1e-5 * std::max(1.0, fd5.lpNorm<Eigen::Infinity>()))
                jac = false;
        }
    }
    check(out, "analytic jacobians match finite differences", jac);

    // decay rate insensitive to the time origin, frequency to the amplitude scale
    std::vector<double> ts(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) ts[i] = t[i] + 3.7e-3;
    const FitResult f3s = fit_decaying_sinusoid(ts, y3);
    std::vector<double> y3r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) y3r[i] = 7.3 * y3[i];
    const FitResult f3r = fit_decaying_sinusoid(t, y3r);
    check(out, "sinusoid fit invariances (time origin, amplitude scale)",
          f3s.converged && rel(f3s.p(1), f3.p(1)) < 1e-6 && f3r.converged &&
              rel(f3r.p(2), f3.p(2)) < 1e-9);

    // On single-exponential data one branch carries the amplitude and the
    // other is free to wander; only the live branch is meaningful.
    const FitResult f2d = fit_double_exponential(t, y1);
    const bool first_live = std::abs(f2d.p(0)) > std::abs(f2d.p(2));
    const double live_rate = first_live ? f2d.p(1) : f2d.p(3);
    const double dead_amp = first_live ? f2d.p(2) : f2d.p(0);
    check(out, "double-exponential fit degrades gracefully to one rate",
          f2d.converged && rel(live_rate, 310.0) < 1e-2 && std::abs(dead_amp) < 1e-3 * 0.8);
}

inline void trace_algebra(std::vector<CheckResult>& out) {
    const std::vector<double> norm = normalize_trace({2.0, 1.5, 1.0}, 1.0, 2.0);
    const bool ends = std::abs(norm.front() - 1.0) < 1e-15 && std::abs(norm.back()) < 1e-15;

    DecayTrace a;
    a.time_s = {0.0, 1e-3, 2e-3};
    a.alpha_raw = {0.5, 0.4, 0.3};
    a.alpha_norm = {1.0, 0.5, 0.0};
    const DecayTrace zero = subtract_traces(a, a);
    bool zeros = true;
    for (double v : zero.alpha_norm) zeros = zeros && v == 0.0;

    bool grid_guard = false;
    DecayTrace b = a;
    b.time_s[1] = 1.1e-3;
    try {
        subtract_traces(a, b);
    } catch (const std::invalid_argument&) {
        grid_guard = true;
    }
    check(out, "trace normalization and subtraction identities", ends && zeros && grid_guard);

    std::ostringstream s1, s2;
    write_trace_csv(a, s1);
    write_trace_csv(a, s2);
    std::istringstream back(s1.str());
    const DecayTrace rt = read_trace_csv(back);
    check(out, "trace serialization is lossless and repeatable",
          s1.str() == s2.str() && rt.time_s == a.time_s && rt.alpha_raw == a.alpha_raw &&
              rt.alpha_norm == a.alpha_norm);
}

inline void vapor_curve(std::vector<CheckResult>& out) {
    bool monotone = true;
    double prev = 0.0;
    for (double tk = 300.0; tk <= 400.0; tk += 10.0) {
        const double n = density_from_temperature(tk);
        if (n <= prev) monotone = false;
        prev = n;
    }
    const double t0 = temperature_from_density(3.8e11);
    const bool window = t0 > 320.0 && t0 < 350.0;
    const bool round = std::abs(temperature_from_density(density_from_temperature(333.0)) -
                                333.0) < 1e-4;

    const double diff = estimate_diffusion_rate(1.25, 5.0, 30.0, 0.31);
    const bool diff_window = diff > 25.0 && diff < 100.0;
    const bool limit = estimate_diffusion_rate(1.25, 5.0, 3e6, 0.31) < 1e-3;
    check(out, "vapor density curve is monotone and invertible",
          monotone && window && round, "T(3.8e11 cm^-3) = " + detail::fmt(t0) + " K");
    check(out, "diffusion estimate lands near the nominal floor", diff_window && limit,
          detail::fmt(diff) + "/s");
}

inline void config_schema(std::vector<CheckResult>& out) {
    bool minimal = false;
    try {
        const RunConfig rc = parse_run_config("");
        minimal = rc.protocol == Protocol::HyperfineRefill && rc.density_cm3 == 3.8e11;
    } catch (const std::exception&) {
    }

    bool strict = false;
    try {
        parse_run_config("[cell]\nbogus = 1\n");
    } catch (const std::exception&) {
        strict = true;
    }

    std::vector<std::string> warnings;
    parse_run_config("[cell]\nbogus = 1\n", ".", false, &warnings);
    const bool lenient = warnings.size() == 1;

    bool named = false;
    try {
        parse_run_config("[cell]\ndensity_cm3 = 0\n");
    } catch (const std::exception& e) {
        named = std::string(e.what()).find("density_cm3") != std::string::npos;
    }
    check(out, "config schema enforcement (strict, lenient, named constraints)",
          minimal && strict && lenient && named);
}

/// Engine-level checks: probe weakness on a live run and the composition of
/// the beat signal. These run the pump and several dark traces, so this is
/// the slow part of the suite (a few seconds).
inline void beat_composition(std::vector<CheckResult>& out, const LevelScheme& scheme,
                             const TransitionTable& table) {
    const ExperimentSpec spec = ExperimentSpec::for_protocol(Protocol::CoherenceBeat);
    ProtocolRun run = run_protocol(scheme, table, spec);
    check(out, "probe pulses stay under the back-action budget",
          run.dark_info.max_pulse_back_action < 5e-3,
          detail::fmt(run.dark_info.max_pulse_back_action) + " per pulse");

    const FitResult total = fit_decaying_sinusoid(beat_fit_window(run), true);

    // keep the populations, strip every coherence except the M component
    const Matrix8 g = run.pump.ground();
    Matrix8 off = Matrix8::Zero();
    const Vector8 m = m_state(scheme);
    const cd wm = (m.adjoint() * g * m)(0);
    double f2 = 0.0;
    for (int mm = -2; mm <= 2; ++mm) {
        const int i = scheme.index_of(false, 2, mm);
        f2 += g(i, i).real();
    }
    for (int i = 0; i < 3; ++i) off(i, i) = g(i, i); // F=1 residual untouched
    off += wm.real() * (m * m.adjoint());
    const double rest = f2 - wm.real();
    for (int mm = -2; mm <= 2; ++mm) {
        const int i = scheme.index_of(false, 2, mm);
        off(i, i) += rest / 5.0; // unpolarized remainder, carries no oscillation
    }

    PropagationStats stats;
    DarkRunInfo info;
    const double half = pi / run.beat.fundamental_rad;
    DecayTrace m1 = run_ramsey_zeeman(scheme, table, spec, off, spec.field_delay_s, &stats, &info);
    DecayTrace m2 = run_ramsey_zeeman(scheme, table, spec, off, spec.field_delay_s + half, &stats,
                                      &info);
    const FitResult monly =
        fit_decaying_sinusoid(beat_fit_window(subtract_traces(m1, m2), m2.meta.delay_s), true);

    const double share = monly.p(0) / total.p(0);
    check(out, "m-state carries near half the beat amplitude",
          total.converged && monly.converged && share > 0.3 && share < 0.7,
          "share " + detail::fmt(share));

    const auto [fund, second] =
        harmonic_amplitudes(beat_fit_window(run), total.p(2), total.p(1), true);
    check(out, "double-frequency beat content stays weak", second < 0.10 * fund,
          detail::fmt(second / fund) + " of fundamental");
}

} // namespace selfcheck

inline std::vector<CheckResult> run_selfchecks(const LevelScheme& scheme,
                                               const TransitionTable& table) {
    std::vector<CheckResult> out;
    selfcheck::angular_momentum(out, scheme, table);
    selfcheck::generator_conservation(out, scheme, table);
    selfcheck::spin_exchange_kernel(out, scheme);
    selfcheck::doppler_grid(out, scheme);
    selfcheck::dark_bright_contrast(out, scheme, table);
    selfcheck::field_only_precession(out, scheme);
    selfcheck::fit_engine(out);
    selfcheck::trace_algebra(out);
    selfcheck::vapor_curve(out);
    selfcheck::config_schema(out);
    selfcheck::beat_composition(out, scheme, table);
    return out;
}

inline bool report_selfchecks(const std::vector<CheckResult>& results, std::ostream& os) {
    bool all = true;
    for (const CheckResult& r : results) {
        os << (r.pass ? "ok   " : "FAIL ") << r.name;
        if (!r.detail.empty()) os << "  (" << r.detail << ")";
        os << "\n";
        all = all && r.pass;
    }
    os << (all ? "all checks passed\n" : "checks FAILED\n");
    return all;
}

} // namespace rbrelax
