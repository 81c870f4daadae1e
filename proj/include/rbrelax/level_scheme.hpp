#pragma once

// 16-level structure of the D1 line of a nuclear-spin-3/2 alkali atom:
// 8 ground sublevels (5S1/2, F=1,2) and 8 excited sublevels (5P1/2, F'=1,2).
// Levels are indexed canonically: ground first, then excited, each manifold
// ordered by (F, m_F) ascending, so
//   0..2   = g F=1 m=-1..+1
//   3..7   = g F=2 m=-2..+2
//   8..10  = e F'=1 m=-1..+1
//   11..15 = e F'=2 m=-2..+2
//
// Energies are hyperfine offsets in angular units: within each fine-structure
// term the lower-F level sits at 0. The optical carrier between the terms is
// absorbed by the rotating frame (see liouville.hpp), so it never appears here.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rbrelax/constants.hpp"
#include "rbrelax/kvconfig.hpp"
#include "rbrelax/wigner.hpp"

namespace rbrelax {

using cd = std::complex<double>;
using Matrix16 = Eigen::Matrix<cd, 16, 16>;
using Matrix8 = Eigen::Matrix<cd, 8, 8>;

inline constexpr int n_levels = 16;
inline constexpr int n_ground = 8;
inline constexpr int n_excited = 8;

struct Level {
    bool excited = false;
    int F = 0;
    int m = 0;
};

class LevelScheme {
public:
    explicit LevelScheme(const AtomData& data = AtomData{}) : data_(data) {
        if (data.hyperfine_ground_hz <= 0 || data.hyperfine_excited_hz <= 0)
            throw std::invalid_argument("hyperfine splittings must be positive");
        if (data.gamma_natural_hz <= 0) throw std::invalid_argument("natural linewidth must be positive");
        if (data.wavelength_m <= 0) throw std::invalid_argument("wavelength must be positive");
        if (data.mass_kg <= 0) throw std::invalid_argument("atomic mass must be positive");
        if (std::abs(data.nuclear_spin - 1.5) > 1e-9)
            throw std::invalid_argument("level scheme assumes nuclear spin 3/2");
        int i = 0;
        for (int F = 1; F <= 2; ++F)
            for (int m = -F; m <= F; ++m) levels_[i++] = Level{false, F, m};
        for (int F = 1; F <= 2; ++F)
            for (int m = -F; m <= F; ++m) levels_[i++] = Level{true, F, m};
    }

    const AtomData& data() const { return data_; }
    const Level& level(int i) const { return levels_.at(static_cast<std::size_t>(i)); }

    int index_of(bool excited, int F, int m) const {
        if (F < 1 || F > 2 || std::abs(m) > F) throw std::invalid_argument("no such level");
        int base = excited ? n_ground : 0;
        int off = (F == 1) ? (m + 1) : (3 + m + 2);
        return base + off;
    }

    /// Hyperfine energy offset (rad/s) within the level's fine-structure term.
    double energy(int i) const {
        const Level& l = level(i);
        double split = l.excited ? data_.hyperfine_excited_hz : data_.hyperfine_ground_hz;
        return (l.F == 2) ? two_pi * split : 0.0;
    }

    /// Lande g_F with the nuclear term neglected: g_F ~ g_J * [F(F+1)+J(J+1)-I(I+1)] / [2F(F+1)].
    double g_F(int i) const {
        const Level& l = level(i);
        const double gJ = l.excited ? data_.g_J_excited : data_.g_J_ground;
        const double J = 0.5, I = data_.nuclear_spin;
        const double F = l.F;
        return gJ * (F * (F + 1.0) + J * (J + 1.0) - I * (I + 1.0)) / (2.0 * F * (F + 1.0));
    }

    /// Linear Zeeman shift (rad/s) of level i in an axial field B_z (gauss).
    double zeeman_shift(int i, double bz_gauss) const {
        return two_pi * bohr_magneton_hz_per_gauss * g_F(i) * level(i).m * bz_gauss;
    }

    bool is_ground(int i) const { return !level(i).excited; }

private:
    AtomData data_;
    std::array<Level, n_levels> levels_{};
};

/// Thermal (fully mixed ground) state: 1/8 on each ground sublevel.
inline Matrix16 thermal_state() {
    Matrix16 rho = Matrix16::Zero();
    for (int i = 0; i < n_ground; ++i) rho(i, i) = 1.0 / n_ground;
    return rho;
}

// ---------------------------------------------------------------------------
// Electric-dipole couplings.
//
// Convention: reduced matrix element <J'=1/2||er||J=1/2> = sqrt(2J'+1), which
// normalises the sigma+ amplitudes out of (F=1, m=-1,0,+1) toward F'=2 to
// sqrt(1/12), sqrt(1/4), sqrt(1/2) and makes sum_{g,q} |A|^2 = 1 for every
// excited sublevel (so Gamma*|A|^2 are partial decay rates directly).
// ---------------------------------------------------------------------------

class TransitionTable {
public:
    explicit TransitionTable(const LevelScheme& scheme) {
        const double J = 0.5, Jp = 0.5, I = scheme.data().nuclear_spin;
        for (int gi = 0; gi < n_ground; ++gi) {
            const Level g = scheme.level(gi);
            for (int ei = 0; ei < n_excited; ++ei) {
                const Level e = scheme.level(n_ground + ei);
                for (int q = -1; q <= 1; ++q) {
                    // <F' m'| er_q |F m> for the operator acting on the electron
                    // (Wigner-Eckart + standard recoupling through I)
                    const double red = phase(Jp + I + g.F + 1.0) *
                                       std::sqrt((2.0 * e.F + 1.0) * (2.0 * g.F + 1.0)) *
                                       wigner_6j(Jp, e.F, I, g.F, J, 1.0) * std::sqrt(2.0 * Jp + 1.0);
                    const double geom = phase(e.F - e.m) * wigner_3j(e.F, 1.0, g.F, -e.m, q, g.m);
                    amp_[static_cast<std::size_t>(gi)][static_cast<std::size_t>(ei)][static_cast<std::size_t>(q + 1)] =
                        red * geom;
                }
            }
        }
    }

    /// Dimensionless amplitude A(g,e,q); 0 for dipole-forbidden combinations.
    double amplitude(int ground_idx, int excited_idx, int q) const {
        if (ground_idx < 0 || ground_idx >= n_ground) throw std::out_of_range("ground index");
        if (excited_idx < 0 || excited_idx >= n_excited) throw std::out_of_range("excited index");
        if (q < -1 || q > 1) throw std::out_of_range("polarization q");
        return amp_[static_cast<std::size_t>(ground_idx)][static_cast<std::size_t>(excited_idx)]
                   [static_cast<std::size_t>(q + 1)];
    }

private:
    static double phase(double x) {
        return (static_cast<int>(std::llround(x)) % 2) ? -1.0 : 1.0;
    }
    std::array<std::array<std::array<double, 3>, n_excited>, n_ground> amp_{};
};

/// Load atomic constants from the key-value constant file format.
/// Recognised keys: hyperfine_ground_hz, hyperfine_excited_hz, gamma_natural_hz,
/// wavelength_m, g_j_ground, g_j_excited, mass_amu, nuclear_spin.
inline AtomData load_atom_data(const KeyValueConfig& cfg, const std::string& section = "atom") {
    AtomData d;
    auto key = [&](const char* k) { return section.empty() ? std::string(k) : section + "." + k; };
    d.hyperfine_ground_hz = cfg.get_double(key("hyperfine_ground_hz"), d.hyperfine_ground_hz);
    d.hyperfine_excited_hz = cfg.get_double(key("hyperfine_excited_hz"), d.hyperfine_excited_hz);
    d.gamma_natural_hz = cfg.get_double(key("gamma_natural_hz"), d.gamma_natural_hz);
    d.wavelength_m = cfg.get_double(key("wavelength_m"), d.wavelength_m);
    d.g_J_ground = cfg.get_double(key("g_j_ground"), d.g_J_ground);
    d.g_J_excited = cfg.get_double(key("g_j_excited"), d.g_J_excited);
    d.mass_kg = cfg.get_double(key("mass_amu"), d.mass_kg / amu_si) * amu_si;
    d.nuclear_spin = cfg.get_double(key("nuclear_spin"), d.nuclear_spin);
    return d;
}

} // namespace rbrelax
