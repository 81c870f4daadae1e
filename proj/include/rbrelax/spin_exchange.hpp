#pragma once

// Spin-exchange collisions between ground-state atoms, treated in mean field.
//
// A collision couples the electron spins of a pair; the interaction is
// diagonal in the electronic singlet/triplet basis, so its net effect is to
// dephase the singlet amplitude against the triplet one. For one atom with
// its partner drawn from the ensemble average mf this gives
//
//   d rho/dt = -gamma_col * K(rho; mf)
//   K = Tr_B[ rho(x)mf - P_s rho(x)mf P_s - P_t rho(x)mf P_t ]
//
// with P_s = 1/4 - S_A.S_B. Carrying out the partial trace yields the closed
// form used by the fast path below,
//
//   K(rho) = (3/8) rho - (1/2) sum_j w_j {s_j, rho} - 2 sum_jk g_jk s_j rho s_k
//   w_j = tr(s_j mf),  g_jk = tr(s_j mf s_k),
//
// which the tests pin against the literal product-space evaluation.
//
// Rate bookkeeping: collisions happen at gamma_se = n*sigma*vbar_rel per
// atom. Averaged over partners the channel above damps a hyperfine coherence
// at only half of its driving rate (the partner is in the "wrong" hyperfine
// state for half the encounters), so the generator must run at
// gamma_col = 2*gamma_se for observables to decay at the physical collision
// rate. See se_decoherence_factor.

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "rbrelax/constants.hpp"
#include "rbrelax/level_scheme.hpp"
#include "rbrelax/liouville.hpp"
#include "rbrelax/wigner.hpp"

namespace rbrelax {

/// Drive the singlet-triplet dephasing channel at twice the kinetic collision
/// rate so that measurable coherences decay at exactly n*sigma*vbar_rel.
inline constexpr double se_decoherence_factor = 2.0;

/// Electron spin-1/2 operators expressed in the coupled |F,m> ground basis
/// (same ordering as LevelScheme: F=1 m=-1..1, then F=2 m=-2..2).
inline const std::array<Matrix8, 3>& electron_spin_ops() {
    static const std::array<Matrix8, 3> ops = [] {
        constexpr double I = 1.5, S = 0.5;
        // coupled -> uncoupled change of basis, u[(mi_idx*2)+ms_idx][c]
        Matrix8 u = Matrix8::Zero();
        for (int c = 0; c < n_ground; ++c) {
            const double F = (c < 3) ? 1.0 : 2.0;
            const double m = (c < 3) ? (c - 1) : (c - 5);
            for (int mi = 0; mi < 4; ++mi)
                for (int ms = 0; ms < 2; ++ms) {
                    const double m_i = -I + mi;
                    const double m_s = -S + ms;
                    // electron-first coupling, matching the dipole table's basis
                    u(mi * 2 + ms, c) = clebsch_gordan(S, m_s, I, m_i, F, m);
                }
        }
        // spin-1/2 matrices in the (down, up) ordering used by the index map
        Eigen::Matrix2cd px, py, pz;
        px << 0, 0.5, 0.5, 0;
        py << 0, cd(0, 0.5), cd(0, -0.5), 0;
        pz << -0.5, 0, 0, 0.5;
        const Eigen::Matrix4cd id4 = Eigen::Matrix4cd::Identity();
        std::array<Matrix8, 3> out;
        const Eigen::Matrix2cd pauli_half[3] = {px, py, pz};
        for (int j = 0; j < 3; ++j) {
            Matrix8 s_unc = Matrix8::Zero();
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int d = 0; d < 2; ++d)
                        s_unc(a * 2 + b, a * 2 + d) = pauli_half[j](b, d);
            out[j] = u.adjoint() * s_unc * u;
        }
        return out;
    }();
    return ops;
}

/// K(rho; mf), closed form. Both arguments are 8x8 ground-sector matrices;
/// mf should be normalized to unit trace.
inline Matrix8 se_apply(const Matrix8& rho, const Matrix8& mean_field) {
    const auto& s = electron_spin_ops();
    Matrix8 k = 0.375 * rho;
    for (int j = 0; j < 3; ++j) {
        const double w = (s[j] * mean_field).trace().real();
        k -= 0.5 * w * (s[j] * rho + rho * s[j]);
        for (int l = 0; l < 3; ++l) {
            const cd g = (s[j] * mean_field * s[l]).trace();
            k -= 2.0 * g * s[j] * rho * s[l];
        }
    }
    return k;
}

/// K(rho; mf) evaluated literally on the 64-dimensional pair space. Slow;
/// kept as the independent reference the fast path is tested against.
inline Matrix8 se_apply_direct(const Matrix8& rho, const Matrix8& mean_field) {
    const auto& s = electron_spin_ops();
    const int d = n_ground;
    MatrixXcd ps = 0.25 * MatrixXcd::Identity(d * d, d * d);
    for (int j = 0; j < 3; ++j) ps -= kron(s[j], s[j]);
    const MatrixXcd pt = MatrixXcd::Identity(d * d, d * d) - ps;
    const MatrixXcd x = kron(rho, mean_field);
    const MatrixXcd y = x - ps * x * ps - pt * x * pt;
    Matrix8 k = Matrix8::Zero();
    for (int a = 0; a < d; ++a)
        for (int ap = 0; ap < d; ++ap)
            for (int b = 0; b < d; ++b) k(a, ap) += y(a * d + b, ap * d + b);
    return k;
}

/// Ground-sector superoperator (64x64) for a frozen mean field:
/// L vec(rho) = vec(-gamma_col * K(rho; mf)).
inline MatrixXcd build_spin_exchange_superop(const Matrix8& mean_field, double gamma_col) {
    if (gamma_col < 0) throw std::invalid_argument("gamma_col must be non-negative");
    const auto& s = electron_spin_ops();
    const int d = n_ground;
    const MatrixXcd id = MatrixXcd::Identity(d, d);
    MatrixXcd lk = 0.375 * MatrixXcd::Identity(d * d, d * d);
    for (int j = 0; j < 3; ++j) {
        const double w = (s[j] * mean_field).trace().real();
        lk -= 0.5 * w * (kron(id, s[j]) + kron(s[j].transpose(), id));
        for (int l = 0; l < 3; ++l) {
            const cd g = (s[j] * mean_field * s[l]).trace();
            lk -= 2.0 * g * kron(s[l].transpose(), s[j]);
        }
    }
    return -gamma_col * lk;
}

/// Lift a ground-sector superoperator (64x64) onto the full 16-level space
/// (256x256); excited blocks and optical coherences are left untouched.
inline MatrixXcd embed_ground_superop(const MatrixXcd& lg) {
    if (lg.rows() != n_ground * n_ground || lg.cols() != n_ground * n_ground)
        throw std::invalid_argument("expected a 64x64 ground-sector superoperator");
    MatrixXcd l = MatrixXcd::Zero(n_levels * n_levels, n_levels * n_levels);
    for (int j1 = 0; j1 < n_ground; ++j1)
        for (int i1 = 0; i1 < n_ground; ++i1)
            for (int j2 = 0; j2 < n_ground; ++j2)
                for (int i2 = 0; i2 < n_ground; ++i2)
                    l(j1 * n_levels + i1, j2 * n_levels + i2) =
                        lg(j1 * n_ground + i1, j2 * n_ground + i2);
    return l;
}

/// Mean relative speed of two like atoms, sqrt(16 kT / (pi m)) [m/s].
inline double mean_relative_speed(double temperature_k, double mass_kg) {
    if (temperature_k <= 0 || mass_kg <= 0)
        throw std::invalid_argument("temperature and mass must be positive");
    return std::sqrt(16.0 * kB_si * temperature_k / (pi * mass_kg));
}

/// Kinetic spin-exchange collision rate n*sigma*vbar_rel [1/s]; density in
/// cm^-3 and cross-section in cm^2, the units everything else here uses.
inline double spin_exchange_rate(double density_cm3, double sigma_cm2, double temperature_k,
                                 double mass_kg) {
    if (density_cm3 < 0 || sigma_cm2 < 0)
        throw std::invalid_argument("density and cross-section must be non-negative");
    const double vbar_cm_s = 100.0 * mean_relative_speed(temperature_k, mass_kg);
    return density_cm3 * sigma_cm2 * vbar_cm_s;
}

} // namespace rbrelax
