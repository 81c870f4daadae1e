#pragma once

// Thermal velocity averaging along the beam axis.
//
// Observables are averaged over the 1-D Maxwell-Boltzmann distribution with
// Gauss-Hermite quadrature: nodes and weights come from the symmetric
// tridiagonal Jacobi matrix (Golub-Welsch), so high orders stay stable where
// the recurrence on Hermite polynomials would overflow.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rbrelax/constants.hpp"

namespace rbrelax {

struct QuadratureNode {
    double x = 0.0; ///< abscissa for weight exp(-x^2)
    double w = 0.0; ///< weight, normalized so all weights sum to 1
};

/// Normalized Gauss-Hermite rule: sum_i w_i f(x_i) ~ (1/sqrt(pi)) int exp(-x^2) f(x) dx.
inline std::vector<QuadratureNode> gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
    if (n == 1) return {{0.0, 1.0}};
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    std::vector<QuadratureNode> nodes(n);
    for (int i = 0; i < n; ++i) {
        nodes[i].x = es.eigenvalues()(i);
        const double q0 = es.eigenvectors()(0, i);
        nodes[i].w = q0 * q0;
    }
    return nodes;
}

struct VelocityNode {
    double v = 0.0; ///< axial velocity, m/s
    double w = 0.0; ///< probability weight, sums to 1
};

/// Discretized 1-D thermal velocity distribution. n = 1 collapses to the
/// stationary atom (no Doppler averaging).
inline std::vector<VelocityNode> thermal_velocity_grid(int n, double temperature_k,
                                                       double mass_kg) {
    if (temperature_k <= 0 || mass_kg <= 0)
        throw std::invalid_argument("temperature and mass must be positive");
    const double sigma_v = std::sqrt(kB_si * temperature_k / mass_kg);
    std::vector<VelocityNode> out;
    for (const auto& node : gauss_hermite(n))
        out.push_back({std::sqrt(2.0) * sigma_v * node.x, node.w});
    return out;
}

/// 1/e half-width of the Doppler profile in angular frequency, k*sqrt(2kT/m).
inline double doppler_width_rad(double wavenumber, double temperature_k, double mass_kg) {
    return wavenumber * std::sqrt(2.0 * kB_si * temperature_k / mass_kg);
}

} // namespace rbrelax
