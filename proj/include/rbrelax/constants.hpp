#pragma once

// Physical constants (SI) and Rb-87 D1 reference data. Line data follow the
// usual compilations (Steck, "Rubidium 87 D Line Data"); all frequencies are
// stored as ordinary frequencies in Hz and converted to angular units where
// they enter a Hamiltonian.

#include <numbers>

namespace rbrelax {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double hbar_si = 1.054571817e-34;        // J s
inline constexpr double kB_si = 1.380649e-23;             // J/K
inline constexpr double amu_si = 1.66053906660e-27;       // kg
inline constexpr double bohr_magneton_si = 9.2740100783e-24; // J/T
inline constexpr double gauss_si = 1e-4;                  // T per gauss
inline constexpr double torr_si = 133.322368;             // Pa per Torr

/// Bohr magneton over h, in Hz per gauss (1.3996... MHz/G).
inline constexpr double bohr_magneton_hz_per_gauss =
    bohr_magneton_si * gauss_si / (two_pi * hbar_si);

/// Atomic reference data for the simulated line. Defaults are Rb-87 D1.
struct AtomData {
    double hyperfine_ground_hz = 6.834682610904e9;  // 5S1/2 F=1..F=2 splitting
    double hyperfine_excited_hz = 814.5e6;          // 5P1/2 F'=1..F'=2 splitting
    double gamma_natural_hz = 5.7500e6;             // natural linewidth Gamma/2pi
    double wavelength_m = 794.978e-9;               // D1 vacuum wavelength
    double g_J_ground = 2.00233113;                 // 5S1/2 Lande g_J
    double g_J_excited = 0.666;                     // 5P1/2 Lande g_J
    double mass_kg = 86.909180531 * amu_si;
    double nuclear_spin = 1.5;

    double gamma_natural_rad() const { return two_pi * gamma_natural_hz; }
    double wavenumber() const { return two_pi / wavelength_m; }
};

} // namespace rbrelax
