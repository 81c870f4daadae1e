#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rbrelax/constants.hpp"
#include "rbrelax/doppler.hpp"

using namespace rbrelax;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("order-1 rule is the stationary atom") {
    const auto nodes = gauss_hermite(1);
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0].x == 0.0);
    CHECK(nodes[0].w == 1.0);
    CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("nodes are symmetric with unit total weight") {
    for (int n : {2, 5, 8, 16, 32}) {
        const auto nodes = gauss_hermite(n);
        REQUIRE(static_cast<int>(nodes.size()) == n);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += nodes[i].w;
            CHECK(nodes[i].w > 0.0);
            CHECK_THAT(nodes[i].x, WithinAbs(-nodes[n - 1 - i].x, 1e-12));
        }
        CHECK_THAT(sum, WithinAbs(1.0, 1e-13));
    }
}

TEST_CASE("Gaussian moments integrate exactly up to degree 2n-1") {
    // int x^(2k) exp(-x^2) dx / sqrt(pi) = (2k-1)!! / 2^k
    const double exact[] = {1.0,         0.5,          0.75,        15.0 / 8.0,
                            105.0 / 16.0, 945.0 / 32.0, 10395.0 / 64.0, 135135.0 / 128.0};
    const auto nodes = gauss_hermite(8);
    for (int k = 0; k <= 7; ++k) {
        double s = 0.0, s_odd = 0.0;
        for (const auto& nd : nodes) {
            s += nd.w * std::pow(nd.x, 2 * k);
            s_odd += nd.w * std::pow(nd.x, 2 * k + 1);
        }
        CAPTURE(k);
        CHECK_THAT(s, WithinRel(exact[k], 1e-12));
        CHECK_THAT(s_odd, WithinAbs(0.0, 1e-10));
    }
}

TEST_CASE("velocity grid reproduces thermal moments") {
    const double T = 340.0, m = 86.909180531 * amu_si;
    const auto grid = thermal_velocity_grid(16, T, m);
    double w = 0.0, v1 = 0.0, v2 = 0.0;
    for (const auto& g : grid) {
        w += g.w;
        v1 += g.w * g.v;
        v2 += g.w * g.v * g.v;
    }
    CHECK_THAT(w, WithinAbs(1.0, 1e-13));
    CHECK_THAT(v1, WithinAbs(0.0, 1e-8));
    CHECK_THAT(v2, WithinRel(kB_si * T / m, 1e-12));
    CHECK(thermal_velocity_grid(1, T, m)[0].v == 0.0);
    CHECK_THROWS_AS(thermal_velocity_grid(4, -1.0, m), std::invalid_argument);
}

TEST_CASE("quadrature reproduces a pressure-broadened absorption profile") {
    // Lorentzian of HWHM comparable to the Doppler width, the regime a
    // buffer-gas cell lives in; reference via dense trapezoidal integration.
    const double T = 340.0, m = 86.909180531 * amu_si;
    const double k = two_pi / 794.978e-9;
    const double sigma_v = std::sqrt(kB_si * T / m);
    const double hwhm = 0.66 * k * sigma_v;

    auto lorentz = [&](double detuning, double v) {
        const double x = detuning - k * v;
        return hwhm * hwhm / (hwhm * hwhm + x * x);
    };

    for (double detuning : {0.0, 0.5 * k * sigma_v, 2.0 * k * sigma_v}) {
        double dense = 0.0;
        const int n_dense = 200000;
        const double vmax = 8.0 * sigma_v;
        for (int i = 0; i < n_dense; ++i) {
            const double v = -vmax + (2.0 * vmax * i) / (n_dense - 1);
            const double gauss =
                std::exp(-v * v / (2 * sigma_v * sigma_v)) / std::sqrt(two_pi * sigma_v * sigma_v);
            dense += lorentz(detuning, v) * gauss * (2.0 * vmax / (n_dense - 1));
        }

        for (int order : {16, 32}) {
            double quad = 0.0;
            for (const auto& g : thermal_velocity_grid(order, T, m)) quad += g.w * lorentz(detuning, g.v);
            CAPTURE(detuning / (k * sigma_v), order);
            // Hermite convergence on a Lorentzian is slow (heavy tails):
            // measured errors are ~1.8% at 16 nodes, ~0.2% at 32
            CHECK_THAT(quad, WithinRel(dense, order >= 32 ? 5e-3 : 3e-2));
        }
    }
}

TEST_CASE("Doppler width matches the defining formula") {
    const double T = 340.0, m = 86.909180531 * amu_si;
    const double k = two_pi / 794.978e-9;
    CHECK_THAT(doppler_width_rad(k, T, m), WithinRel(k * std::sqrt(2.0 * kB_si * T / m), 1e-14));
    // about 2 pi * 320 MHz for this line at 340 K
    CHECK_THAT(doppler_width_rad(k, T, m) / two_pi / 1e6, WithinAbs(320.0, 10.0));
}
