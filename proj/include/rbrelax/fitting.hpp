#pragma once

// Least-squares fitting of relaxation traces.
//
// Three trace models cover the protocols: a single exponential with floor
// (hyperfine population decay), a double exponential (polarized pumping,
// where a fast refill overshoots the steady state and relaxes back slowly),
// and an exponentially damped sinusoid (Zeeman coherence beats). All three
// share one damped Gauss-Newton core with analytic Jacobians and a fixed,
// documented lambda schedule so fits are reproducible bit for bit.
//
// Parameter layouts:
//   exp         (A, gamma, C)                    y = A exp(-gamma t) + C
//   double_exp  (A1, gamma1, A2, gamma2, C)      gamma1 > gamma2 on output
//   damped_sin  (A, gamma, omega, phi, C)        y = A exp(-gamma t) sin(omega t + phi) + C

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbrelax/spin_exchange.hpp"
#include "rbrelax/trace.hpp"

namespace rbrelax {

struct FitResult {
    std::string model;
    Eigen::VectorXd p;       ///< fitted parameters, layout per model
    Eigen::VectorXd sigma;   ///< 1-sigma uncertainties (linearized covariance)
    double rms = 0.0;        ///< RMS residual at the optimum
    bool converged = false;
    bool identifiable = true; ///< false when double-exp rates collapse together
    int iterations = 0;
    std::string message;
};

namespace detail {

using ModelFn = std::function<double(double, const Eigen::VectorXd&)>;
using JacobianFn = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline double cost_of(const Eigen::VectorXd& r) { return r.squaredNorm(); }

inline Eigen::VectorXd residuals(const std::vector<double>& t, const std::vector<double>& y,
                                 const ModelFn& f, const Eigen::VectorXd& p) {
    Eigen::VectorXd r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r(i) = f(t[i], p) - y[i];
    return r;
}

/// Damped Gauss-Newton: lambda starts at 1e-3, x10 on a rejected step,
/// /10 on an accepted one; stops on relative cost change < 1e-10 or
/// gradient norm < 1e-8, hard cap 200 iterations.
inline FitResult damped_least_squares(const std::vector<double>& t, const std::vector<double>& y,
                                      const ModelFn& f, const JacobianFn& df,
                                      Eigen::VectorXd p, const std::string& model) {
    const auto n = static_cast<Eigen::Index>(t.size());
    const auto k = p.size();
    FitResult out;
    out.model = model;
    out.sigma = Eigen::VectorXd::Zero(k);

    Eigen::VectorXd r = residuals(t, y, f, p);
    double cost = cost_of(r);
    double lambda = 1e-3;
    Eigen::MatrixXd jac(n, k);
    Eigen::VectorXd row(k);

    int it = 0;
    for (; it < 200; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            df(t[i], p, row);
            jac.row(i) = row;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-8) {
            out.converged = true;
            break;
        }
        // Marquardt scaling; floor keeps flat directions solvable instead of
        // blowing up the step along them
        Eigen::VectorXd d = jtj.diagonal();
        const double dmax = d.maxCoeff();
        if (!(dmax > 0.0) || !std::isfinite(dmax)) {
            out.message = "singular Jacobian";
            break;
        }
        for (Eigen::Index j = 0; j < k; ++j) d(j) = std::max(d(j), 1e-14 * dmax);

        bool accepted = false;
        while (lambda < 1e14) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * d;
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            if (step.allFinite()) {
                const Eigen::VectorXd trial = p + step;
                const Eigen::VectorXd rt = residuals(t, y, f, trial);
                const double ct = cost_of(rt);
                if (std::isfinite(ct) && ct <= cost) {
                    const double rel = (cost - ct) / std::max(cost, 1e-300);
                    p = trial;
                    r = rt;
                    lambda = std::max(lambda * 0.1, 1e-12);
                    if (rel < 1e-10) out.converged = true;
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            out.message = "no descent step found";
            break;
        }
        cost = cost_of(r);
        if (out.converged) break;
    }

    out.iterations = it;
    out.p = p;
    out.rms = n > 0 ? std::sqrt(cost / static_cast<double>(n)) : 0.0;
    if (out.converged && n > k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            df(t[i], p, row);
            jac.row(i) = row;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const double s2 = cost / static_cast<double>(n - k);
        const Eigen::MatrixXd cov = s2 * jtj.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
        for (Eigen::Index j = 0; j < k; ++j)
            out.sigma(j) = cov(j, j) > 0.0 && std::isfinite(cov(j, j)) ? std::sqrt(cov(j, j)) : 0.0;
    }
    if (!out.converged && out.message.empty()) out.message = "iteration cap reached";
    return out;
}

inline void check_fit_input(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw std::invalid_argument("time and value arrays differ in length");
    if (t.size() < 8) throw std::invalid_argument("fits need at least 8 samples");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw std::invalid_argument("time stamps must increase strictly");
}

inline double exp_model(double t, const Eigen::VectorXd& p) {
    return p(0) * std::exp(-p(1) * t) + p(2);
}

inline void exp_jacobian(double t, const Eigen::VectorXd& p, Eigen::VectorXd& row) {
    const double e = std::exp(-p(1) * t);
    row(0) = e;
    row(1) = -p(0) * t * e;
    row(2) = 1.0;
}

inline double double_exp_model(double t, const Eigen::VectorXd& p) {
    return p(0) * std::exp(-p(1) * t) + p(2) * std::exp(-p(3) * t) + p(4);
}

inline void double_exp_jacobian(double t, const Eigen::VectorXd& p, Eigen::VectorXd& row) {
    const double e1 = std::exp(-p(1) * t);
    const double e2 = std::exp(-p(3) * t);
    row(0) = e1;
    row(1) = -p(0) * t * e1;
    row(2) = e2;
    row(3) = -p(2) * t * e2;
    row(4) = 1.0;
}

inline double damped_sin_model(double t, const Eigen::VectorXd& p) {
    return p(0) * std::exp(-p(1) * t) * std::sin(p(2) * t + p(3)) + p(4);
}

inline void damped_sin_jacobian(double t, const Eigen::VectorXd& p, Eigen::VectorXd& row) {
    const double e = std::exp(-p(1) * t);
    const double s = std::sin(p(2) * t + p(3));
    const double c = std::cos(p(2) * t + p(3));
    row(0) = e * s;
    row(1) = -p(0) * t * e * s;
    row(2) = p(0) * e * c * t;
    row(3) = p(0) * e * c;
    row(4) = 1.0;
}

/// C from the tail mean, gamma from a log-linear fit of |y - C|, A scaled
/// back to t = 0 from the first sample.
inline bool init_exponential(const std::vector<double>& t, const std::vector<double>& y,
                             Eigen::VectorXd& p0) {
    const std::size_t n = t.size();
    const std::size_t tail = std::max<std::size_t>(3, n / 5);
    double c = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) c += y[i];
    c /= static_cast<double>(tail);

    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(y[i] - c));
    if (dmax < 1e-10 * std::max(1.0, std::abs(c))) return false; // flat trace, nothing to fit

    double lead = 0.0;
    for (std::size_t i = 0; i < 3; ++i) lead += y[i] - c;
    const double sign = lead >= 0.0 ? 1.0 : -1.0;

    double st = 0, sl = 0, stt = 0, stl = 0;
    int m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = sign * (y[i] - c);
        if (d < 1e-3 * dmax) continue;
        const double l = std::log(d);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++m;
    }
    double gamma = 0.0;
    if (m >= 2) {
        const double det = m * stt - st * st;
        if (std::abs(det) > 0.0) gamma = -(m * stl - st * sl) / det;
    }
    if (!std::isfinite(gamma)) gamma = 0.0;
    const double a = (y[0] - c) * std::exp(gamma * t[0]);
    p0.resize(3);
    p0 << a, gamma, c;
    return true;
}

} // namespace detail

/// y = A exp(-gamma t) + C. A flat trace comes back flagged instead of
/// inventing a rate.
inline FitResult fit_exponential(const std::vector<double>& t, const std::vector<double>& y) {
    detail::check_fit_input(t, y);
    Eigen::VectorXd p0;
    if (!detail::init_exponential(t, y, p0)) {
        FitResult out;
        out.model = "exp";
        out.p = Eigen::VectorXd::Zero(3);
        double c = 0.0;
        for (double v : y) c += v;
        out.p(2) = c / static_cast<double>(y.size());
        out.sigma = Eigen::VectorXd::Zero(3);
        out.message = "amplitude indistinguishable from zero; rate unidentifiable";
        return out;
    }
    return detail::damped_least_squares(t, y, detail::exp_model, detail::exp_jacobian, p0, "exp");
}

/// y = A1 exp(-gamma1 t) + A2 exp(-gamma2 t) + C with gamma1 > gamma2 on
/// output; amplitudes of either sign (the overshoot shape has A1, A2 with
/// opposite signs). Initialized by peeling: single-exp fit of the tail
/// first, then of what remains. Rates within x1.5 of each other at the
/// optimum are reported but flagged unidentifiable; the expected use is
/// rate separations of 3x and more.
inline FitResult fit_double_exponential(const std::vector<double>& t, const std::vector<double>& y) {
    detail::check_fit_input(t, y);

    const std::size_t n = t.size();
    const std::size_t half = n / 2;
    std::vector<double> t2(t.begin() + half, t.end());
    std::vector<double> y2(y.begin() + half, y.end());
    Eigen::VectorXd slow_p0;
    FitResult slow;
    bool have_slow = t2.size() >= 8 && detail::init_exponential(t2, y2, slow_p0);
    if (have_slow) {
        slow = detail::damped_least_squares(t2, y2, detail::exp_model, detail::exp_jacobian,
                                            slow_p0, "exp");
        have_slow = slow.converged;
    }
    if (!have_slow) {
        slow.p = Eigen::VectorXd::Zero(3);
        double c = 0.0;
        for (double v : y2) c += v;
        slow.p(2) = y2.empty() ? 0.0 : c / static_cast<double>(y2.size());
    }

    std::vector<double> peeled(n);
    for (std::size_t i = 0; i < n; ++i)
        peeled[i] = y[i] - detail::exp_model(t[i], slow.p);
    Eigen::VectorXd fast_p0;
    const bool have_fast = detail::init_exponential(t, peeled, fast_p0);

    Eigen::VectorXd p0(5);
    if (have_fast)
        p0 << fast_p0(0), std::max(fast_p0(1), 2.0 * std::abs(slow.p(1))), slow.p(0), slow.p(1),
            slow.p(2) + fast_p0(2);
    else
        p0 << 0.0, 2.0 * std::abs(slow.p(1)) + 1.0 / (t.back() - t.front()), slow.p(0), slow.p(1),
            slow.p(2);

    FitResult out = detail::damped_least_squares(t, y, detail::double_exp_model,
                                                 detail::double_exp_jacobian, p0, "double_exp");
    if (out.p(1) < out.p(3)) {
        std::swap(out.p(0), out.p(2));
        std::swap(out.p(1), out.p(3));
        std::swap(out.sigma(0), out.sigma(2));
        std::swap(out.sigma(1), out.sigma(3));
    }
    const double fast_rate = std::abs(out.p(1));
    const double slow_rate = std::abs(out.p(3));
    if (fast_rate < 1.5 * slow_rate) {
        out.identifiable = false;
        if (out.message.empty()) out.message = "decay rates collapsed; two-rate model unidentifiable";
    }
    return out;
}

/// y = A exp(-gamma t) sin(omega t + phi) + C. omega comes from the peak of
/// the discrete spectrum of the mean-subtracted trace, phase and amplitude
/// from quadrature projections at that frequency, gamma from the envelope
/// decay between the two half-windows.
inline FitResult fit_decaying_sinusoid(const std::vector<double>& t, const std::vector<double>& y) {
    detail::check_fit_input(t, y);
    const std::size_t n = t.size();
    const double span = t.back() - t.front();

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - mean;

    // frequency scan on the grid k / span, k cycles across the window
    const std::size_t kmax = n / 2;
    std::vector<double> power(kmax + 1, 0.0);
    std::size_t kpeak = 0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        const double w = 2.0 * pi * static_cast<double>(k) / span;
        double s = 0.0, c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += z[i] * std::sin(w * (t[i] - t.front()));
            c += z[i] * std::cos(w * (t[i] - t.front()));
        }
        power[k] = s * s + c * c;
        if (power[k] > power[kpeak]) kpeak = k;
    }
    std::vector<double> sorted(power.begin() + 1, power.end());
    std::sort(sorted.begin(), sorted.end());
    const double floor = sorted[sorted.size() / 2];
    FitResult out;
    if (kpeak < 2) {
        out.model = "damped_sin";
        out.p = Eigen::VectorXd::Zero(5);
        out.sigma = Eigen::VectorXd::Zero(5);
        out.message = "fewer than two oscillation periods in the window";
        return out;
    }
    if (power[kpeak] < 5.0 * std::max(floor, 1e-300)) {
        out.model = "damped_sin";
        out.p = Eigen::VectorXd::Zero(5);
        out.sigma = Eigen::VectorXd::Zero(5);
        out.message = "no spectral peak above the noise floor";
        return out;
    }

    const double w0 = 2.0 * pi * static_cast<double>(kpeak) / span;
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += z[i] * std::sin(w0 * t[i]);
        c += z[i] * std::cos(w0 * t[i]);
    }
    const double a_quad = 2.0 * s / static_cast<double>(n);
    const double b_quad = 2.0 * c / static_cast<double>(n);
    double amp = std::hypot(a_quad, b_quad);
    const double phi = std::atan2(b_quad, a_quad);

    // envelope decay from the rms of the two half-windows
    double r1 = 0.0, r2 = 0.0, t1 = 0.0, t2 = 0.0;
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) {
        r1 += z[i] * z[i];
        t1 += t[i];
    }
    for (std::size_t i = half; i < n; ++i) {
        r2 += z[i] * z[i];
        t2 += t[i];
    }
    r1 = std::sqrt(r1 / static_cast<double>(half));
    r2 = std::sqrt(r2 / static_cast<double>(n - half));
    t1 /= static_cast<double>(half);
    t2 /= static_cast<double>(n - half);
    double gamma = r1 > 0.0 && r2 > 0.0 && t2 > t1 ? std::log(r1 / r2) / (t2 - t1) : 0.0;
    if (!std::isfinite(gamma) || gamma < 0.0) gamma = 0.1 / span;

    double damp = 0.0;
    for (std::size_t i = 0; i < n; ++i) damp += std::exp(-gamma * t[i]);
    damp /= static_cast<double>(n);
    if (damp > 0.0) amp /= damp;

    Eigen::VectorXd p0(5);
    p0 << amp, gamma, w0, phi, mean;
    out = detail::damped_least_squares(t, y, detail::damped_sin_model, detail::damped_sin_jacobian,
                                       p0, "damped_sin");
    // canonical sign: positive amplitude, phase in (-pi, pi]
    if (out.p(0) < 0.0) {
        out.p(0) = -out.p(0);
        out.p(3) += pi;
    }
    out.p(3) = std::remainder(out.p(3), 2.0 * pi);
    if (out.p(2) < 0.0) {
        out.p(2) = -out.p(2);
        out.p(3) = std::remainder(pi - out.p(3), 2.0 * pi);
    }
    return out;
}

inline FitResult fit_exponential(const DecayTrace& tr, bool raw = false) {
    tr.validate();
    return fit_exponential(tr.time_s, raw ? tr.alpha_raw : tr.alpha_norm);
}

inline FitResult fit_double_exponential(const DecayTrace& tr, bool raw = false) {
    tr.validate();
    return fit_double_exponential(tr.time_s, raw ? tr.alpha_raw : tr.alpha_norm);
}

inline FitResult fit_decaying_sinusoid(const DecayTrace& tr, bool raw = false) {
    tr.validate();
    return fit_decaying_sinusoid(tr.time_s, raw ? tr.alpha_raw : tr.alpha_norm);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero(); ///< (slope, intercept) covariance
    double r_squared = 0.0;
};

/// Weighted least squares y = slope * x + intercept, closed form. Empty
/// weights mean equal weights; covariance is scaled by the residual
/// variance so uncertainties stay meaningful when weights are relative.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                            std::vector<double> w = {}) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("linear fit needs at least 2 points");
    if (w.empty()) w.assign(n, 1.0);
    if (w.size() != n) throw std::invalid_argument("weights differ in length");

    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(w[i] > 0.0)) throw std::invalid_argument("weights must be positive");
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 1e-30 * std::max(1.0, sw * sxx)))
        throw std::invalid_argument("abscissas are degenerate, slope undefined");

    LinearFit out;
    out.slope = (sw * sxy - sx * sy) / det;
    out.intercept = (sxx * sy - sx * sxy) / det;

    double chi2 = 0.0, syy_dev = 0.0;
    const double ybar = sy / sw;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (out.slope * x[i] + out.intercept);
        chi2 += w[i] * r * r;
        syy_dev += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    out.r_squared = syy_dev > 0.0 ? 1.0 - chi2 / syy_dev : 1.0;
    const double s2 = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    out.cov(0, 0) = s2 * sw / det;
    out.cov(1, 1) = s2 * sxx / det;
    out.cov(0, 1) = out.cov(1, 0) = -s2 * sx / det;
    return out;
}

struct CrossSectionFit {
    double sigma_cm2 = 0.0;
    double uncertainty_cm2 = 0.0;
    double intercept_s = 0.0;        ///< rate at zero density, the field-free floor
    double intercept_sigma_s = 0.0;
    double r_squared = 0.0;
};

/// Invert rate = n * sigma * vbar_rel + floor from measured (density, rate)
/// pairs: weighted linear fit, slope divided by the mean relative thermal
/// speed. Pass rate uncertainties to weight the fit, or empty for equal
/// weights.
inline CrossSectionFit extract_cross_section(const std::vector<double>& density_cm3,
                                             const std::vector<double>& rate_s,
                                             const std::vector<double>& rate_sigma_s,
                                             double temperature_k, double mass_kg) {
    if (density_cm3.size() < 3)
        throw std::invalid_argument("cross-section extraction needs at least 3 density points");
    std::vector<double> w;
    if (!rate_sigma_s.empty()) {
        if (rate_sigma_s.size() != rate_s.size())
            throw std::invalid_argument("rate uncertainties differ in length");
        w.resize(rate_sigma_s.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!(rate_sigma_s[i] > 0.0))
                throw std::invalid_argument("rate uncertainties must be positive");
            w[i] = 1.0 / (rate_sigma_s[i] * rate_sigma_s[i]);
        }
    }
    const LinearFit fit = linear_fit(density_cm3, rate_s, w);
    if (!(fit.slope > 0.0))
        throw std::runtime_error("rates do not grow with density, no cross-section to extract");
    const double vbar_cm = 1e2 * mean_relative_speed(temperature_k, mass_kg);
    CrossSectionFit out;
    out.sigma_cm2 = fit.slope / vbar_cm;
    out.uncertainty_cm2 = std::sqrt(std::max(fit.cov(0, 0), 0.0)) / vbar_cm;
    out.intercept_s = fit.intercept;
    out.intercept_sigma_s = std::sqrt(std::max(fit.cov(1, 1), 0.0));
    out.r_squared = fit.r_squared;
    return out;
}

} // namespace rbrelax
