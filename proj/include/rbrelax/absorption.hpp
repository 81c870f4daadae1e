#pragma once

// Probe absorption observable.
//
// The detected quantity is the rate at which the probe drives population to
// the excited manifold, which for a coupling V = sum (Omega/2) u_q A |e><g|
// is 2 Im sum_{e,g} V_eg rho_ge. In the linear regime the excited coherences
// scale with Omega, so dividing by Omega^2 (and scaling by the natural width
// to keep the number dimensionless and O(1) on resonance) gives a signal
// that is probe-power independent and proportional to the ground-state
// populations and coherences the probe addresses.

#include <cmath>
#include <stdexcept>

#include "rbrelax/fields.hpp"
#include "rbrelax/level_scheme.hpp"

namespace rbrelax {

/// Excited<-ground coupling amplitudes V(e,g) = <e|H_int|g> for the given
/// field, in rad/s (8x8, rows = excited index, cols = ground index).
inline Matrix8 coupling_matrix(const TransitionTable& table, const FieldConfig& fields) {
    Matrix8 v = Matrix8::Zero();
    for (const auto& l : fields.lasers) {
        if (l.rabi_rad == 0.0) continue;
        for (int gi = 0; gi < n_ground; ++gi)
            for (int ei = 0; ei < n_excited; ++ei)
                for (int q = -1; q <= 1; ++q) {
                    const double a = table.amplitude(gi, ei, q);
                    if (a != 0.0) v(ei, gi) += 0.5 * l.rabi_rad * l.pol.component(q) * a;
                }
    }
    return v;
}

/// Combined Rabi frequency of all components (quadrature sum, rad/s).
inline double total_rabi(const FieldConfig& fields) {
    double s = 0.0;
    for (const auto& l : fields.lasers) s += l.rabi_rad * l.rabi_rad;
    return std::sqrt(s);
}

/// Instantaneous absorption signal of `probe` on state `rho`, intensity
/// normalized (per Omega^2): dimensionless, probe-power independent in the
/// weak-probe regime. Positive when the medium absorbs.
inline double absorption_signal(const Matrix16& rho, const LevelScheme& scheme,
                                const TransitionTable& table, const FieldConfig& probe) {
    const double omega = total_rabi(probe);
    if (omega <= 0.0) throw std::invalid_argument("probe carries no light");
    const Matrix8 v = coupling_matrix(table, probe);
    cd acc = 0.0;
    for (int ei = 0; ei < n_excited; ++ei)
        for (int gi = 0; gi < n_ground; ++gi)
            acc += v(ei, gi) * rho(gi, n_ground + ei);
    return 2.0 * scheme.data().gamma_natural_rad() * acc.imag() / (omega * omega);
}

/// True when the probe is weak against the homogeneous linewidth
/// Gamma + 2*gamma_p, so its back-action on the ground state is negligible.
inline bool probe_is_weak(const FieldConfig& probe, double gamma_natural_rad,
                          double gamma_p_rad, double max_ratio = 0.01) {
    return total_rabi(probe) <= max_ratio * (gamma_natural_rad + 2.0 * gamma_p_rad);
}

} // namespace rbrelax
