#pragma once

// Density-sweep orchestration: runs the three measurements at each density,
// fits them, and collects the rates the experiment is after. One sweep is
// the full data set behind the rates-vs-density picture: hyperfine refill
// rate (grows with density), polarized-refill slow rate (the field-free
// floor, flat), and the beat decoherence rate. The hyperfine rates feed the
// cross-section round trip.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "rbrelax/csv.hpp"
#include "rbrelax/fitting.hpp"
#include "rbrelax/protocol.hpp"
#include "rbrelax/run_config.hpp"
#include "rbrelax/trace.hpp"

namespace rbrelax {

/// Trace length for a beat run: four expected coherence times past the later
/// switch-on. The pilot rate uses the model's own structure (the beat decay
/// is spin-exchange driven), which is only a sizing heuristic; the fit does
/// not see it.
inline double beat_trace_duration(const LevelScheme& scheme, const ExperimentSpec& s) {
    const double pilot = 0.5625 * s.gamma_se_s(scheme.data().mass_kg) + s.gamma0_s;
    const double omega = beat_frequencies(scheme, s.bz_gauss).fundamental_rad;
    const double t_last_switch = s.field_delay_s + pi / omega;
    const double want = t_last_switch + 4.0 / pilot + s.probe_period_s;
    return std::ceil(want / s.probe_period_s) * s.probe_period_s;
}

struct DensityPoint {
    double density_cm3 = 0.0;
    FitResult hyperfine;  ///< single exponential on the linear-pump trace
    FitResult zeeman_pop; ///< double exponential on the polarized trace
    FitResult beat;       ///< decaying sinusoid on the subtracted pair
    double beat_prediction_rad = 0.0;
    DecayTrace hyperfine_trace;
    DecayTrace zeeman_pop_trace;
    std::vector<DecayTrace> beat_raw; ///< the two delayed traces
    DecayTrace beat_difference;

    double hyperfine_rate_s() const { return hyperfine.p(1); }
    double zeeman_pop_rate_s() const { return zeeman_pop.p(3); } ///< slow branch
    double gamma12_s() const { return beat.p(1); }
};

struct DerivedRates {
    std::vector<DensityPoint> points;
    CrossSectionFit cross_section; ///< from the hyperfine rates
    bool all_converged = false;
};

inline DensityPoint run_density_point(const LevelScheme& scheme, const TransitionTable& table,
                                      const RunConfig& rc, double density_cm3) {
    DensityPoint pt;
    pt.density_cm3 = density_cm3;

    ExperimentSpec sa = rc.spec_for(Protocol::HyperfineRefill);
    sa.density_cm3 = density_cm3;
    ProtocolRun ra = run_protocol(scheme, table, sa);
    pt.hyperfine_trace = ra.traces[0];
    pt.hyperfine = fit_exponential(pt.hyperfine_trace);

    ExperimentSpec sb = rc.spec_for(Protocol::PolarizedRefill);
    sb.density_cm3 = density_cm3;
    ProtocolRun rb = run_protocol(scheme, table, sb);
    pt.zeeman_pop_trace = rb.traces[0];
    pt.zeeman_pop = fit_double_exponential(pt.zeeman_pop_trace);

    ExperimentSpec sc = rc.spec_for(Protocol::CoherenceBeat);
    sc.density_cm3 = density_cm3;
    if (!rc.trace_duration_s) sc.trace_duration_s = beat_trace_duration(scheme, sc);
    ProtocolRun rcr = run_protocol(scheme, table, sc);
    pt.beat_raw = rcr.traces;
    pt.beat_difference = rcr.difference;
    pt.beat = fit_decaying_sinusoid(beat_fit_window(rcr));
    pt.beat_prediction_rad = rcr.beat.fundamental_rad;
    return pt;
}

/// The full measurement campaign over the configured density axis.
inline DerivedRates run_density_sweep(const LevelScheme& scheme, const TransitionTable& table,
                                      const RunConfig& rc, std::ostream* log = nullptr) {
    DerivedRates out;
    std::vector<double> n, rate, sigma;
    for (double density : rc.sweep_densities()) {
        DensityPoint pt = run_density_point(scheme, table, rc, density);
        if (log)
            *log << "density " << density << ": hyperfine " << pt.hyperfine_rate_s()
                 << "/s, zeeman pop " << pt.zeeman_pop_rate_s() << "/s, gamma12 "
                 << pt.gamma12_s() << "/s\n";
        n.push_back(density);
        rate.push_back(pt.hyperfine_rate_s());
        sigma.push_back(pt.hyperfine.sigma(1));
        out.points.push_back(std::move(pt));
    }
    out.all_converged = true;
    for (const DensityPoint& pt : out.points)
        out.all_converged = out.all_converged && pt.hyperfine.converged &&
                            pt.zeeman_pop.converged && pt.beat.converged;
    if (n.size() >= 3) {
        bool positive = true;
        for (double s : sigma) positive = positive && s > 0.0;
        out.cross_section = extract_cross_section(
            n, rate, positive ? sigma : std::vector<double>{}, rc.temperature_k,
            scheme.data().mass_kg);
    }
    return out;
}

/// Rates report, one row per density. The schema line is part of the format;
/// downstream tooling keys on it.
inline void write_rates_report(const DerivedRates& dr, std::ostream& os) {
    os << "# rbrelax rates report v1\n";
    os << "# rates in 1/s; columns: density_cm3, hyperfine rate and its uncertainty,\n";
    os << "# polarized slow rate and uncertainty, beat decoherence rate gamma_12 and\n";
    os << "# uncertainty, predicted beat frequency rad_s\n";
    os << "density_cm3,gamma_hf_s,gamma_hf_err_s,gamma_zpop_s,gamma_zpop_err_s,"
          "gamma_12_s,gamma_12_err_s,beat_pred_rad_s\n";
    for (const DensityPoint& pt : dr.points) {
        os << detail::format_double(pt.density_cm3) << ','
           << detail::format_double(pt.hyperfine_rate_s()) << ','
           << detail::format_double(pt.hyperfine.sigma(1)) << ','
           << detail::format_double(pt.zeeman_pop_rate_s()) << ','
           << detail::format_double(pt.zeeman_pop.sigma(3)) << ','
           << detail::format_double(pt.gamma12_s()) << ','
           << detail::format_double(pt.beat.sigma(1)) << ','
           << detail::format_double(pt.beat_prediction_rad) << "\n";
    }
    if (dr.points.size() >= 3) {
        os << "# sigma_se_cm2=" << detail::format_double(dr.cross_section.sigma_cm2) << "\n";
        os << "# sigma_se_err_cm2=" << detail::format_double(dr.cross_section.uncertainty_cm2)
           << "\n";
        os << "# rate_intercept_s=" << detail::format_double(dr.cross_section.intercept_s) << "\n";
        os << "# rate_intercept_err_s="
           << detail::format_double(dr.cross_section.intercept_sigma_s) << "\n";
        os << "# rate_vs_density_r2=" << detail::format_double(dr.cross_section.r_squared) << "\n";
    }
}

} // namespace rbrelax
