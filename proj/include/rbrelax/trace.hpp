#pragma once

// Probe absorption time series recorded after pump shut-off, plus the two
// pieces of trace algebra the measurement protocols need: normalization to
// the steady-state/initial span, and pairwise subtraction for the antiphase
// oscillation measurement.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbrelax {

struct TraceMeta {
    std::string protocol;    // "A", "B", "C", or "C-diff" for a subtracted pair
    double density_cm3 = 0.0;
    double bz_gauss = 0.0;
    double delay_s = 0.0;    // field switch-on delay (protocol C)
};

/// One recorded relaxation trace. alpha_raw is the intensity-normalized
/// absorption signal; alpha_norm maps the span [steady state, pump shut-off]
/// to [0, 1] so traces at different densities are comparable.
struct DecayTrace {
    std::vector<double> time_s;
    std::vector<double> alpha_raw;
    std::vector<double> alpha_norm;
    TraceMeta meta;

    std::size_t size() const { return time_s.size(); }

    void validate() const {
        if (alpha_raw.size() != time_s.size() || alpha_norm.size() != time_s.size())
            throw std::invalid_argument("trace arrays differ in length");
        for (std::size_t i = 1; i < time_s.size(); ++i)
            if (!(time_s[i] > time_s[i - 1]))
                throw std::invalid_argument("trace time stamps must increase strictly");
    }
};

/// (alpha - alpha_ss) / (alpha_ini - alpha_ss): 1 at pump shut-off, 0 at
/// thermal equilibrium. Protocol-B traces legitimately cross 0 (the
/// absorption overshoots its steady state), so no range clamping here.
inline std::vector<double> normalize_trace(const std::vector<double>& alpha,
                                           double alpha_ss, double alpha_ini) {
    const double span = alpha_ini - alpha_ss;
    const double scale = std::max({std::abs(alpha_ini), std::abs(alpha_ss), 1e-300});
    if (std::abs(span) < 1e-9 * scale)
        throw std::invalid_argument("initial and steady-state absorption coincide");
    std::vector<double> out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = (alpha[i] - alpha_ss) / span;
    return out;
}

/// Pointwise a - b for two traces on the same time grid. Used to cancel the
/// common relaxation background of the two delayed oscillation traces.
inline DecayTrace subtract_traces(const DecayTrace& a, const DecayTrace& b) {
    a.validate();
    b.validate();
    if (a.size() != b.size())
        throw std::invalid_argument("traces to subtract differ in length");
    DecayTrace out;
    out.meta = a.meta;
    out.meta.protocol = a.meta.protocol + "-diff";
    out.time_s = a.time_s;
    out.alpha_raw.resize(a.size());
    out.alpha_norm.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(std::abs(a.time_s[i]), 1e-12);
        if (std::abs(a.time_s[i] - b.time_s[i]) > 1e-9 * scale)
            throw std::invalid_argument("traces to subtract live on different time grids");
        out.alpha_raw[i] = a.alpha_raw[i] - b.alpha_raw[i];
        out.alpha_norm[i] = a.alpha_norm[i] - b.alpha_norm[i];
    }
    return out;
}

} // namespace rbrelax
