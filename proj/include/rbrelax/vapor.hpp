#pragma once

// Cell environment: rubidium vapor density vs. temperature, the buffer-gas
// diffusion estimate for the uniform relaxation floor, and collisional line
// broadening. Nothing here feeds the dynamics automatically; callers decide
// which numbers enter a run configuration.

#include <cmath>
#include <stdexcept>

#include "rbrelax/constants.hpp"

namespace rbrelax {

/// Saturated vapor pressure over liquid rubidium, Torr. Antoine-style fit
///   log10 P = 15.88253 - 4529.635/T + 0.00058663 T - 2.99138 log10 T
/// valid on the liquid branch; we restrict to 250-450 K.
inline double vapor_pressure_torr(double temperature_k) {
    if (!(temperature_k > 250.0 && temperature_k < 450.0))
        throw std::invalid_argument("vapor pressure fit only trusted for 250 K < T < 450 K");
    const double t = temperature_k;
    const double log10p = 15.88253 - 4529.635 / t + 0.00058663 * t - 2.99138 * std::log10(t);
    return std::pow(10.0, log10p);
}

/// Rubidium number density in cm^-3 at the cell temperature (ideal gas).
inline double density_from_temperature(double temperature_k) {
    const double p_pa = vapor_pressure_torr(temperature_k) * 133.322387415;
    const double n_m3 = p_pa / (kB_si * temperature_k);
    return n_m3 * 1e-6;
}

/// Invert density_from_temperature by bisection. The density curve is
/// strictly increasing on the valid window, so the root is unique.
inline double temperature_from_density(double density_cm3) {
    if (!(density_cm3 > 0.0)) throw std::invalid_argument("density must be positive");
    double lo = 250.0 + 1e-9, hi = 450.0 - 1e-9;
    if (density_cm3 < density_from_temperature(lo) || density_cm3 > density_from_temperature(hi))
        throw std::invalid_argument("density outside the range reachable for 250 K < T < 450 K");
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (density_from_temperature(mid) < density_cm3 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Lowest-diffusion-mode escape rate for a cylindrical cell,
///   D0 (p0/p) [(2.405/R)^2 + (pi/L)^2],
/// a suggested value for the uniform relaxation floor. The real floor also
/// feels the beam diameter, so expect agreement only to a factor of order 2.
inline double estimate_diffusion_rate(double radius_cm, double length_cm, double pressure_torr,
                                      double d0_cm2_s, double p0_torr = 760.0) {
    if (!(radius_cm > 0.0 && length_cm > 0.0 && pressure_torr > 0.0 && d0_cm2_s > 0.0 &&
          p0_torr > 0.0))
        throw std::invalid_argument("cell geometry, pressure and D0 must be positive");
    const double radial = 2.405 / radius_cm;
    const double axial = pi / length_cm;
    return d0_cm2_s * (p0_torr / pressure_torr) * (radial * radial + axial * axial);
}

/// Collisional (pressure) half-width of the optical line in rad/s from a
/// broadening coefficient in MHz/Torr (half width at half maximum).
inline double pressure_broadening_rad(double pressure_torr, double hwhm_mhz_per_torr) {
    if (!(pressure_torr >= 0.0 && hwhm_mhz_per_torr >= 0.0))
        throw std::invalid_argument("pressure and broadening coefficient must be non-negative");
    return two_pi * 1e6 * hwhm_mhz_per_torr * pressure_torr;
}

} // namespace rbrelax
