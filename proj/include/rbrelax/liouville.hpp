#pragma once

// Master-equation machinery for the 16-level system.
//
// The density matrix is propagated through piecewise-constant segments as
// rho' = unvec(exp(L dt) vec(rho)) with column-stacked vec() and a cached
// matrix exponential per (L, dt). The Liouvillian collects
//   - the rotating-frame Hamiltonian (one co-rotating frame per segment; all
//     laser components must imply the same optical frequency, far-detuned
//     hyperfine partners are kept as constant detunings),
//   - radiative decay as three Lindblad jump operators, one per photon
//     polarization, which transfers excited Zeeman coherences correctly,
//   - pressure dephasing of optical coherences (pure dephasing, Lindblad-safe),
//   - the uniform ground-state reset gamma0*(thermal*Tr_g(rho) - rho_g).
//
// With every laser off the ground block is closed: dark stretches are evolved
// on the 8x8 ground sector (64x64 superoperator), which the full-dimension
// path must and does reproduce (see tests).

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "rbrelax/fields.hpp"
#include "rbrelax/level_scheme.hpp"

namespace rbrelax {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct PositivityError : std::runtime_error {
    explicit PositivityError(double min_eig)
        : std::runtime_error("density matrix lost positivity (min eigenvalue " +
                             std::to_string(min_eig) + ")") {}
};

struct FrameError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// --- vec/unvec (column stacking) -------------------------------------------

template <int N>
Eigen::Vector<cd, N * N> vec(const Eigen::Matrix<cd, N, N>& m) {
    return Eigen::Map<const Eigen::Vector<cd, N * N>>(m.data());
}

template <int N>
Eigen::Matrix<cd, N, N> unvec(const Eigen::Vector<cd, N * N>& v) {
    return Eigen::Map<const Eigen::Matrix<cd, N, N>>(v.data());
}

inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// -i (1 x H - H^T x 1): commutator part of the superoperator.
inline MatrixXcd commutator_superop(const MatrixXcd& h) {
    const auto n = h.rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    return cd(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
}

/// Lindblad dissipator D[C] in superoperator form.
inline MatrixXcd lindblad_superop(const MatrixXcd& c) {
    const auto n = c.rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    const MatrixXcd cdc = c.adjoint() * c;
    return kron(c.conjugate(), c) - 0.5 * (kron(id, cdc) + kron(cdc.transpose(), id));
}

// --- Hamiltonian -------------------------------------------------------------

/// Optical frequency (rad/s, modulo the carrier) implied by a laser component:
/// hyperfine offset of the target transition plus its detuning.
inline double implied_frame_frequency(const LevelScheme& scheme, const LaserComponent& l) {
    const int gi = scheme.index_of(false, l.ground_F, 0);
    const int ei = scheme.index_of(true, l.excited_F, 0);
    return scheme.energy(ei) - scheme.energy(gi) + l.detuning_rad;
}

/// Rotating-frame Hamiltonian for one segment. `velocity` is the atom's
/// velocity projection on the beam axis (m/s); it Doppler-shifts the laser by
/// -k*v in the atom frame, which appears as +k*v on the excited diagonal.
inline Matrix16 build_hamiltonian(const LevelScheme& scheme, const TransitionTable& table,
                                  const FieldConfig& fields, double velocity = 0.0) {
    Matrix16 h = Matrix16::Zero();
    for (int i = 0; i < n_levels; ++i)
        h(i, i) = scheme.energy(i) + scheme.zeeman_shift(i, fields.bz_gauss);

    std::optional<double> frame;
    for (const auto& l : fields.lasers) {
        if (l.rabi_rad == 0.0) continue;
        if (l.ground_F < 1 || l.ground_F > 2 || l.excited_F < 1 || l.excited_F > 2)
            throw std::invalid_argument("laser target transition out of range");
        if (l.rabi_rad < 0.0) throw std::invalid_argument("Rabi frequency must be non-negative");
        const double w = implied_frame_frequency(scheme, l);
        if (!frame) {
            frame = w;
        } else if (std::abs(*frame - w) > 1.0) {
            // 1 rad/s absolute: far below any physical rate here, far above
            // double rounding on ~1e10 rad/s hyperfine sums
            throw FrameError("laser components imply inconsistent rotating frames");
        }
        for (int gi = 0; gi < n_ground; ++gi) {
            for (int ei = 0; ei < n_excited; ++ei) {
                cd v = 0.0;
                for (int q = -1; q <= 1; ++q) {
                    const double a = table.amplitude(gi, ei, q);
                    if (a != 0.0) v += 0.5 * l.rabi_rad * l.pol.component(q) * a;
                }
                if (v != cd(0.0)) {
                    h(n_ground + ei, gi) += v;
                    h(gi, n_ground + ei) += std::conj(v);
                }
            }
        }
    }

    if (frame) {
        const double k = scheme.data().wavenumber();
        const double shift = *frame - k * velocity;
        for (int i = n_ground; i < n_levels; ++i) h(i, i) -= shift;
    }
    return h;
}

// --- Dissipators -------------------------------------------------------------

/// Radiative decay: jump operators C_q = sqrt(Gamma) sum_{g,e} A(g,e,q)|g><e|.
/// The amplitude convention makes sum_{g,q}|A|^2 = 1 per excited level, so the
/// total decay rate of every excited sublevel is exactly Gamma.
inline MatrixXcd build_optical_decay(const LevelScheme& scheme, const TransitionTable& table) {
    const double gamma = scheme.data().gamma_natural_rad();
    MatrixXcd l = MatrixXcd::Zero(n_levels * n_levels, n_levels * n_levels);
    for (int q = -1; q <= 1; ++q) {
        MatrixXcd c = MatrixXcd::Zero(n_levels, n_levels);
        for (int gi = 0; gi < n_ground; ++gi)
            for (int ei = 0; ei < n_excited; ++ei)
                c(gi, n_ground + ei) = std::sqrt(gamma) * table.amplitude(gi, ei, q);
        l += lindblad_superop(c);
    }
    return l;
}

/// Pure dephasing of all optical (ground-excited) coherences at rate gamma_p.
/// Equivalent to D[sqrt(gamma_p/2)(P_g - P_e)], hence completely positive.
inline MatrixXcd build_pressure_dephasing(double gamma_p_rad) {
    if (gamma_p_rad < 0) throw std::invalid_argument("gamma_p must be non-negative");
    MatrixXcd l = MatrixXcd::Zero(n_levels * n_levels, n_levels * n_levels);
    for (int col = 0; col < n_levels; ++col)
        for (int row = 0; row < n_levels; ++row) {
            const bool mixed = (row < n_ground) != (col < n_ground);
            if (mixed) l(col * n_levels + row, col * n_levels + row) = -gamma_p_rad;
        }
    return l;
}

/// Uniform ground relaxation gamma0 * (thermal * Tr_g(rho) - rho_g); the
/// excited block and optical coherences are untouched.
inline MatrixXcd build_uniform_relaxation(double gamma0_rad) {
    if (gamma0_rad < 0) throw std::invalid_argument("gamma0 must be non-negative");
    MatrixXcd l = MatrixXcd::Zero(n_levels * n_levels, n_levels * n_levels);
    for (int col = 0; col < n_ground; ++col)
        for (int row = 0; row < n_ground; ++row)
            l(col * n_levels + row, col * n_levels + row) -= gamma0_rad;
    for (int i = 0; i < n_ground; ++i)
        for (int j = 0; j < n_ground; ++j)
            l(i * n_levels + i, j * n_levels + j) += gamma0_rad / n_ground;
    return l;
}

/// Full 256x256 generator. Optional extra term (e.g. frozen-mean-field spin
/// exchange) is added as-is.
inline MatrixXcd assemble_liouvillian(const LevelScheme& scheme, const TransitionTable& table,
                                      const FieldConfig& fields, const RelaxationConfig& relax,
                                      double velocity = 0.0,
                                      const MatrixXcd* extra = nullptr) {
    const Matrix16 h = build_hamiltonian(scheme, table, fields, velocity);
    MatrixXcd l = commutator_superop(h);
    l += build_optical_decay(scheme, table);
    if (relax.gamma_p_rad > 0) l += build_pressure_dephasing(relax.gamma_p_rad);
    if (relax.gamma0_rad > 0) l += build_uniform_relaxation(relax.gamma0_rad);
    if (extra) l += *extra;
    return l;
}

// --- Ground sector -----------------------------------------------------------

inline Matrix8 ground_block(const Matrix16& rho) { return rho.topLeftCorner<8, 8>(); }

inline Matrix16 embed_ground(const Matrix8& g) {
    Matrix16 rho = Matrix16::Zero();
    rho.topLeftCorner<8, 8>() = g;
    return rho;
}

/// Ground Hamiltonian: hyperfine offsets plus Zeeman shifts (8x8 diagonal).
inline Matrix8 build_ground_hamiltonian(const LevelScheme& scheme, double bz_gauss) {
    Matrix8 h = Matrix8::Zero();
    for (int i = 0; i < n_ground; ++i)
        h(i, i) = scheme.energy(i) + scheme.zeeman_shift(i, bz_gauss);
    return h;
}

/// Uniform relaxation restricted to the ground sector (64x64).
inline MatrixXcd build_uniform_relaxation_ground(double gamma0_rad) {
    MatrixXcd l = -gamma0_rad * MatrixXcd::Identity(n_ground * n_ground, n_ground * n_ground);
    for (int i = 0; i < n_ground; ++i)
        for (int j = 0; j < n_ground; ++j)
            l(i * n_ground + i, j * n_ground + j) += gamma0_rad / n_ground;
    return l;
}

// --- Propagation -------------------------------------------------------------

struct PropagationStats {
    long hermiticity_fixes = 0;
    long trace_fixes = 0;
    double max_trace_drift = 0.0;
    double min_eigenvalue = 0.0;
};

namespace detail {

template <int N>
void sanitize(Eigen::Matrix<cd, N, N>& rho, PropagationStats* stats, bool check_positivity) {
    const double herm_drift = (rho - rho.adjoint()).template lpNorm<Eigen::Infinity>();
    if (herm_drift > 1e-12) {
        rho = 0.5 * (rho + rho.adjoint()).eval();
        if (stats) ++stats->hermiticity_fixes;
    }
    const double tr_drift = std::abs(rho.trace() - cd(1.0));
    if (stats) stats->max_trace_drift = std::max(stats->max_trace_drift, tr_drift);
    if (tr_drift > 1e-12) {
        rho /= rho.trace().real();
        if (stats) ++stats->trace_fixes;
    }
    if (check_positivity) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cd, N, N>> es(rho, Eigen::EigenvaluesOnly);
        const double mn = es.eigenvalues().minCoeff();
        if (stats) stats->min_eigenvalue = std::min(stats->min_eigenvalue, mn);
        if (mn < -1e-6) throw PositivityError(mn);
    }
}

} // namespace detail

/// One cached exponential exp(L*dt); apply() is a matrix-vector product.
class Propagator {
public:
    Propagator() = default;
    Propagator(const MatrixXcd& liouvillian, double dt) : dt_(dt), dim_(liouvillian.rows()) {
        if (dt < 0) throw std::invalid_argument("dt must be non-negative");
        exp_ = (liouvillian * dt).exp();
    }

    double dt() const { return dt_; }
    bool valid() const { return dim_ > 0; }

    Matrix16 apply(const Matrix16& rho, PropagationStats* stats = nullptr,
                   bool check_positivity = true) const {
        if (dim_ != n_levels * n_levels) throw std::logic_error("propagator dimension mismatch");
        Matrix16 out = unvec<n_levels>((exp_ * vec<n_levels>(rho)).eval());
        detail::sanitize<n_levels>(out, stats, check_positivity);
        return out;
    }

    Matrix8 apply_ground(const Matrix8& rho, PropagationStats* stats = nullptr,
                         bool check_positivity = true) const {
        if (dim_ != n_ground * n_ground) throw std::logic_error("propagator dimension mismatch");
        Matrix8 out = unvec<n_ground>((exp_ * vec<n_ground>(rho)).eval());
        detail::sanitize<n_ground>(out, stats, check_positivity);
        return out;
    }

private:
    MatrixXcd exp_;
    double dt_ = 0.0;
    Eigen::Index dim_ = 0;
};

/// Convenience single-shot propagation (tests and small jobs; protocol code
/// holds Propagator objects so each exponential is computed once).
inline Matrix16 propagate(const Matrix16& rho, const MatrixXcd& liouvillian, double dt,
                          PropagationStats* stats = nullptr) {
    return Propagator(liouvillian, dt).apply(rho, stats);
}

/// d rho/dt for a frozen generator; used for steady-state residuals.
inline Matrix16 apply_liouvillian(const MatrixXcd& liouvillian, const Matrix16& rho) {
    return unvec<n_levels>((liouvillian * vec<n_levels>(rho)).eval());
}

} // namespace rbrelax
