#pragma once

// Optical field and relaxation settings for one piecewise-constant segment.

#include <complex>
#include <stdexcept>
#include <vector>

#include "rbrelax/constants.hpp"

namespace rbrelax {

/// Spherical field components (u_{-1}, u_0, u_{+1}) with |u|^2 summing to 1.
/// Quantization axis is z (along the beam); with x = (e_{-1} - e_{+1})/sqrt(2),
/// linear-x polarization is (+1, 0, -1)/sqrt(2). That sign choice is what makes
/// the symmetric superposition (|m=-1> + |m=+1>)/sqrt(2) the dark state of a
/// balanced sigma+/sigma- field on F=2 -> F'=1.
struct Polarization {
    std::complex<double> u_minus{0.0, 0.0};
    std::complex<double> u_pi{0.0, 0.0};
    std::complex<double> u_plus{0.0, 0.0};

    static Polarization sigma_plus() { return {0.0, 0.0, 1.0}; }
    static Polarization sigma_minus() { return {1.0, 0.0, 0.0}; }
    static Polarization pi() { return {0.0, 1.0, 0.0}; }
    /// Balanced sigma+ / sigma- with the relative phase of linear-x light.
    static Polarization linear() {
        const double s = 1.0 / std::sqrt(2.0);
        return {s, 0.0, -s};
    }

    std::complex<double> component(int q) const {
        switch (q) {
            case -1: return u_minus;
            case 0: return u_pi;
            case 1: return u_plus;
        }
        throw std::out_of_range("polarization q");
    }

    double norm2() const {
        return std::norm(u_minus) + std::norm(u_pi) + std::norm(u_plus);
    }
};

/// One laser of the segment: tuned near the ground F -> excited F' hyperfine
/// transition with an extra detuning (rad/s), given polarization and Rabi
/// frequency Omega (rad/s, defined on the unit reduced dipole element).
struct LaserComponent {
    int ground_F = 1;
    int excited_F = 2;
    double detuning_rad = 0.0;
    Polarization pol = Polarization::linear();
    double rabi_rad = 0.0;
};

struct FieldConfig {
    std::vector<LaserComponent> lasers;
    double bz_gauss = 0.0;

    bool has_light() const {
        for (const auto& l : lasers)
            if (l.rabi_rad != 0.0) return true;
        return false;
    }
};

/// Incoherent rates: natural linewidth comes from the level scheme; this adds
/// the buffer-gas dephasing of optical coherences and the uniform ground reset.
struct RelaxationConfig {
    double gamma_p_rad = 0.0;  // pressure dephasing of optical coherences (rad/s, half-width)
    double gamma0_rad = 0.0;   // uniform ground-state relaxation toward thermal (1/s)
};

} // namespace rbrelax
