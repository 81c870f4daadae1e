#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rbrelax/constants.hpp"
#include "rbrelax/fitting.hpp"

using namespace rbrelax;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> time_grid(int n, double dt, double t0 = 0.0) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t0 + i * dt;
    return t;
}

std::vector<double> sample(const std::vector<double>& t,
                           double (*f)(double, const Eigen::VectorXd&),
                           const Eigen::VectorXd& p) {
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) y[i] = f(t[i], p);
    return y;
}

} // namespace

TEST_CASE("single exponential recovers noiseless parameters") {
    const auto t = time_grid(200, 5e-5);
    Eigen::VectorXd p(3);
    p << 1.0, 300.0, 0.0;
    const auto y = sample(t, detail::exp_model, p);
    const FitResult fit = fit_exponential(t, y);
    REQUIRE(fit.converged);
    CHECK_THAT(fit.p(0), WithinRel(1.0, 1e-8));
    CHECK_THAT(fit.p(1), WithinRel(300.0, 1e-8));
    CHECK_THAT(fit.p(2), WithinAbs(0.0, 1e-8));
    CHECK(fit.rms < 1e-10);

    // nonzero floor and negative amplitude (refill shape)
    p << -0.7, 120.0, 1.0;
    const auto y2 = sample(t, detail::exp_model, p);
    const FitResult fit2 = fit_exponential(t, y2);
    REQUIRE(fit2.converged);
    CHECK_THAT(fit2.p(0), WithinRel(-0.7, 1e-6));
    CHECK_THAT(fit2.p(1), WithinRel(120.0, 1e-6));
    CHECK_THAT(fit2.p(2), WithinRel(1.0, 1e-6));
}

TEST_CASE("constant trace is flagged instead of inventing a rate") {
    const auto t = time_grid(50, 1e-4);
    const std::vector<double> y(t.size(), 0.37);
    const FitResult fit = fit_exponential(t, y);
    CHECK_FALSE(fit.converged);
    CHECK_THAT(fit.p(0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(fit.p(2), WithinRel(0.37, 1e-12));
    CHECK_FALSE(fit.message.empty());
}

TEST_CASE("exponential rate survives measurement noise") {
    const auto t = time_grid(200, 5e-5);
    Eigen::VectorXd p(3);
    p << 1.0, 300.0, 0.05;
    const auto clean = sample(t, detail::exp_model, p);
    std::mt19937 rng(20260815);
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<double> errors;
    for (int draw = 0; draw < 200; ++draw) {
        auto y = clean;
        for (auto& v : y) v += noise(rng);
        const FitResult fit = fit_exponential(t, y);
        REQUIRE(fit.converged);
        errors.push_back(std::abs(fit.p(1) / 300.0 - 1.0));
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] < 0.02);      // typical accuracy well inside 5%
    CHECK(errors[errors.size() * 95 / 100] < 0.05);
    CHECK(errors.back() < 0.10);
}

TEST_CASE("double exponential recovers the overshoot shape exactly") {
    const auto t = time_grid(400, 1e-4);
    Eigen::VectorXd p(5);
    p << -0.8, 300.0, 0.3, 50.0, 1.0;
    const auto y = sample(t, detail::double_exp_model, p);
    const FitResult fit = fit_double_exponential(t, y);
    REQUIRE(fit.converged);
    CHECK(fit.identifiable);
    CHECK_THAT(fit.p(0), WithinRel(-0.8, 1e-6));
    CHECK_THAT(fit.p(1), WithinRel(300.0, 1e-6));
    CHECK_THAT(fit.p(2), WithinRel(0.3, 1e-6));
    CHECK_THAT(fit.p(3), WithinRel(50.0, 1e-6));
    CHECK_THAT(fit.p(4), WithinRel(1.0, 1e-6));
}

TEST_CASE("double exponential orders the fast rate first") {
    const auto t = time_grid(400, 1e-4);
    Eigen::VectorXd p(5);
    p << 0.25, 40.0, 0.6, 500.0, 0.1; // generator lists the slow branch first
    const auto y = sample(t, detail::double_exp_model, p);
    const FitResult fit = fit_double_exponential(t, y);
    REQUIRE(fit.converged);
    CHECK(fit.p(1) > fit.p(3));
    CHECK_THAT(fit.p(1), WithinRel(500.0, 1e-6));
    CHECK_THAT(fit.p(0), WithinRel(0.6, 1e-6));
    CHECK_THAT(fit.p(3), WithinRel(40.0, 1e-6));
    CHECK_THAT(fit.p(2), WithinRel(0.25, 1e-6));
}

TEST_CASE("double exponential degrades gracefully to one rate") {
    const auto t = time_grid(300, 1e-4);
    Eigen::VectorXd p(3);
    p << 1.0, 300.0, 0.2;
    const auto y = sample(t, detail::exp_model, p);
    const FitResult fit = fit_double_exponential(t, y);
    // the dominant-amplitude branch must carry the true rate; the other
    // amplitude is free to vanish
    const bool first_dominant = std::abs(fit.p(0)) >= std::abs(fit.p(2));
    const double gamma = first_dominant ? fit.p(1) : fit.p(3);
    const double spurious = first_dominant ? std::abs(fit.p(2)) : std::abs(fit.p(0));
    CHECK_THAT(gamma, WithinRel(300.0, 1e-3));
    CHECK(spurious < 1e-3);
}

TEST_CASE("collapsed rates are flagged unidentifiable") {
    const auto t = time_grid(300, 1e-4);
    Eigen::VectorXd p(5);
    p << 0.5, 100.0, 0.5, 80.0, 0.0;
    const auto y = sample(t, detail::double_exp_model, p);
    const FitResult fit = fit_double_exponential(t, y);
    CHECK_FALSE(fit.identifiable);
}

TEST_CASE("damped sinusoid recovers noiseless parameters") {
    const auto t = time_grid(400, 1e-5);
    Eigen::VectorXd p(5);
    p << 1.0, 300.0, two_pi * 1400.0, pi / 2.0, 0.0;
    const auto y = sample(t, detail::damped_sin_model, p);
    const FitResult fit = fit_decaying_sinusoid(t, y);
    REQUIRE(fit.converged);
    CHECK_THAT(fit.p(0), WithinRel(1.0, 1e-6));
    CHECK_THAT(fit.p(1), WithinRel(300.0, 1e-6));
    CHECK_THAT(fit.p(2), WithinRel(two_pi * 1400.0, 1e-6));
    CHECK_THAT(fit.p(3), WithinRel(pi / 2.0, 1e-6));
    CHECK_THAT(fit.p(4), WithinAbs(0.0, 1e-8));
}

TEST_CASE("sinusoid decay rate ignores the time origin and frequency the scale") {
    Eigen::VectorXd p(5);
    p << 0.8, 250.0, two_pi * 1400.0, 0.3, 0.1;
    const auto t0 = time_grid(400, 1e-5);
    const auto y0 = sample(t0, detail::damped_sin_model, p);
    const FitResult base = fit_decaying_sinusoid(t0, y0);
    REQUIRE(base.converged);

    const auto t1 = time_grid(400, 1e-5, 2.7e-3);
    const auto y1 = sample(t1, detail::damped_sin_model, p);
    const FitResult shifted = fit_decaying_sinusoid(t1, y1);
    REQUIRE(shifted.converged);
    CHECK_THAT(shifted.p(1), WithinRel(base.p(1), 1e-6));

    auto y2 = y0;
    for (auto& v : y2) v *= 17.0;
    const FitResult scaled = fit_decaying_sinusoid(t0, y2);
    REQUIRE(scaled.converged);
    CHECK_THAT(scaled.p(2), WithinRel(base.p(2), 1e-9));
}

TEST_CASE("non-oscillating input does not produce a bogus frequency") {
    const auto t = time_grid(200, 1e-4);
    Eigen::VectorXd p(3);
    p << 1.0, 150.0, 0.0;
    const auto y = sample(t, detail::exp_model, p);
    const FitResult fit = fit_decaying_sinusoid(t, y);
    CHECK_FALSE(fit.converged);
    CHECK_FALSE(fit.message.empty());
}

TEST_CASE("analytic Jacobians match central finite differences") {
    struct Case {
        double (*f)(double, const Eigen::VectorXd&);
        void (*df)(double, const Eigen::VectorXd&, Eigen::VectorXd&);
        int k;
    };
    const Case cases[] = {
        {detail::exp_model, detail::exp_jacobian, 3},
        {detail::double_exp_model, detail::double_exp_jacobian, 5},
        {detail::damped_sin_model, detail::damped_sin_jacobian, 5},
    };
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& c : cases) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd p(c.k);
            // keep rates positive and frequencies in a sane band
            for (int j = 0; j < c.k; ++j) p(j) = u(rng);
            if (c.k >= 3) p(1) = 100.0 + 400.0 * std::abs(u(rng));
            if (c.k == 5 && c.f == detail::double_exp_model) p(3) = 10.0 + 50.0 * std::abs(u(rng));
            if (c.f == detail::damped_sin_model) p(2) = two_pi * (500.0 + 2000.0 * std::abs(u(rng)));
            const double t = 1e-3 * std::abs(u(rng)) + 1e-4;
            Eigen::VectorXd row(c.k);
            c.df(t, p, row);
            for (int j = 0; j < c.k; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(p(j)));
                Eigen::VectorXd pp = p, pm = p;
                pp(j) += h;
                pm(j) -= h;
                const double fd = (c.f(t, pp) - c.f(t, pm)) / (2.0 * h);
                const double scale = std::max(1.0, std::abs(fd));
                CHECK(std::abs(row(j) - fd) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("linear fit closed form") {
    std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 * v + 1.0);
    const LinearFit fit = linear_fit(x, y);
    CHECK_THAT(fit.slope, WithinRel(2.0, 1e-12));
    CHECK_THAT(fit.intercept, WithinRel(1.0, 1e-12));
    CHECK(fit.cov(0, 0) < 1e-20); // noiseless data carries no uncertainty
    CHECK_THAT(fit.r_squared, WithinAbs(1.0, 1e-12));

    CHECK_THROWS_AS(linear_fit({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(linear_fit({1.0}, {2.0}), std::invalid_argument);

    // a heavily weighted point pulls the line its way
    std::vector<double> y2 = {1.0, 3.0, 5.0, 7.0, 100.0};
    const LinearFit loose = linear_fit(x, y2);
    const LinearFit pinned = linear_fit(x, y2, {1.0, 1.0, 1.0, 1.0, 1e6});
    CHECK(std::abs(pinned.slope * 4.0 + pinned.intercept - 100.0) <
          std::abs(loose.slope * 4.0 + loose.intercept - 100.0));
}

TEST_CASE("cross-section round trips through the rate-vs-density line") {
    const double sigma = 2.05e-14;
    const double temp = 333.0;
    const double mass = 86.909180531 * amu_si;
    const std::vector<double> n = {1e11, 3e11, 5e11, 7e11, 9e11};
    std::vector<double> rates;
    for (double ni : n) rates.push_back(spin_exchange_rate(ni, sigma, temp, mass) + 50.0);

    const CrossSectionFit fit = extract_cross_section(n, rates, {}, temp, mass);
    CHECK_THAT(fit.sigma_cm2, WithinRel(sigma, 1e-10));
    CHECK_THAT(fit.intercept_s, WithinRel(50.0, 1e-8));
    CHECK(fit.r_squared > 1.0 - 1e-12);

    std::vector<double> falling = {500.0, 400.0, 300.0, 200.0, 100.0};
    CHECK_THROWS_AS(extract_cross_section(n, falling, {}, temp, mass), std::runtime_error);
    CHECK_THROWS_AS(extract_cross_section({1e11, 2e11}, {1.0, 2.0}, {}, temp, mass),
                    std::invalid_argument);
}

TEST_CASE("cross-section estimate is honest about multiplicative noise") {
    const double sigma = 2.05e-14;
    const double temp = 333.0;
    const double mass = 86.909180531 * amu_si;
    const std::vector<double> n = {1e11, 3e11, 5e11, 7e11, 9e11};
    std::vector<double> clean;
    for (double ni : n) clean.push_back(spin_exchange_rate(ni, sigma, temp, mass) + 50.0);

    std::mt19937 rng(42);
    std::normal_distribution<double> noise(0.0, 0.05);
    int covered = 0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        std::vector<double> rates, sigmas;
        for (double r : clean) {
            const double f = 1.0 + noise(rng);
            rates.push_back(r * f);
            sigmas.push_back(0.05 * r);
        }
        const CrossSectionFit fit = extract_cross_section(n, rates, sigmas, temp, mass);
        if (std::abs(fit.sigma_cm2 - sigma) < 2.0 * fit.uncertainty_cm2) ++covered;
    }
    // the error bar is scaled by a 3-dof residual variance, so 2-sigma
    // coverage follows Student-t: ~86%, not the Gaussian 95%
    CHECK(covered > static_cast<int>(0.78 * draws));
    CHECK(covered < draws); // and the bars are not so wide they always cover
}
