#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rbrelax/wigner.hpp"

using namespace rbrelax;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double tol = 1e-13;
}

TEST_CASE("3j symbols match tabulated exact values") {
    struct Case {
        double j1, j2, j3, m1, m2, m3, expected;
    };
    // expected values generated independently with exact rational arithmetic
    const std::vector<Case> cases = {
        {1, 1, 0, 0, 0, 0, -std::sqrt(3.0) / 3.0},
        {2, 2, 0, 1, -1, 0, -std::sqrt(5.0) / 5.0},
        {1, 1, 2, 1, 1, -2, std::sqrt(5.0) / 5.0},
        {2, 1, 1, 0, 0, 0, std::sqrt(30.0) / 15.0},
        {0.5, 0.5, 1, 0.5, 0.5, -1, -std::sqrt(3.0) / 3.0},
        {1.5, 1, 0.5, 0.5, 0, -0.5, std::sqrt(6.0) / 6.0},
        {2, 2, 4, 2, 2, -4, 1.0 / 3.0},
        {1.5, 1.5, 2, 1.5, -0.5, -1, -std::sqrt(10.0) / 10.0},
        {1, 2, 3, 1, 2, -3, std::sqrt(7.0) / 7.0},
        {2, 1, 2, -1, 1, 0, std::sqrt(10.0) / 10.0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.j1, c.j2, c.j3, c.m1, c.m2, c.m3);
        CHECK_THAT(wigner_3j(c.j1, c.j2, c.j3, c.m1, c.m2, c.m3), WithinAbs(c.expected, tol));
    }
}

TEST_CASE("3j selection rules give zero") {
    CHECK(wigner_3j(1, 1, 3, 0, 0, 0) == 0.0);    // triangle violated
    CHECK(wigner_3j(1, 1, 1, 1, 1, -1) == 0.0);   // m's don't sum to zero
    CHECK(wigner_3j(1, 1, 1, 0, 0, 0) == 0.0);    // odd J sum with all m = 0
    CHECK(wigner_3j(1.5, 1.5, 1, 1.5, 0.5, -1) == 0.0); // m's don't sum to zero
    CHECK(wigner_3j(2, 1, 1, 3, -2, -1) == 0.0);  // |m1| > j1
}

TEST_CASE("3j permutation and reflection symmetries") {
    const double js[] = {0.5, 1.0, 1.5, 2.0};
    for (double j1 : js)
        for (double j2 : js)
            for (double j3 : js) {
                if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) continue;
                if (std::fmod(j1 + j2 + j3, 1.0) != 0.0) continue;
                for (double m1 = -j1; m1 <= j1; ++m1)
                    for (double m2 = -j2; m2 <= j2; ++m2) {
                        const double m3 = -m1 - m2;
                        if (std::abs(m3) > j3) continue;
                        const double base = wigner_3j(j1, j2, j3, m1, m2, m3);
                        const double cyc = wigner_3j(j2, j3, j1, m2, m3, m1);
                        const double swap = wigner_3j(j2, j1, j3, m2, m1, m3);
                        const double refl = wigner_3j(j1, j2, j3, -m1, -m2, -m3);
                        const double sign = std::pow(-1.0, j1 + j2 + j3);
                        CAPTURE(j1, j2, j3, m1, m2);
                        CHECK_THAT(cyc, WithinAbs(base, tol));
                        CHECK_THAT(swap, WithinAbs(sign * base, tol));
                        CHECK_THAT(refl, WithinAbs(sign * base, tol));
                    }
            }
}

TEST_CASE("3j orthogonality over magnetic quantum numbers") {
    const double j1 = 1.5, j2 = 1.0;
    for (double j3 = 0.5; j3 <= 2.5; ++j3)
        for (double j3p = 0.5; j3p <= 2.5; ++j3p)
            for (double m3 = -j3; m3 <= j3; ++m3) {
                if (std::abs(m3) > j3p) continue;
                double sum = 0.0;
                for (double m1 = -j1; m1 <= j1; ++m1)
                    for (double m2 = -j2; m2 <= j2; ++m2)
                        sum += (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m2, m3) *
                               wigner_3j(j1, j2, j3p, m1, m2, m3);
                CAPTURE(j3, j3p, m3);
                CHECK_THAT(sum, WithinAbs(j3 == j3p ? 1.0 : 0.0, 1e-12));
            }
}

TEST_CASE("6j symbols match tabulated exact values") {
    struct Case {
        double a, b, c, d, e, f, expected;
    };
    const std::vector<Case> cases = {
        {1, 1, 1, 1, 1, 1, 1.0 / 6.0},
        {1, 2, 3, 0, 3, 2, std::sqrt(35.0) / 35.0},
        {0.5, 0.5, 1, 0.5, 0.5, 1, 1.0 / 6.0},
        {0.5, 1, 0.5, 0.5, 1, 0.5, 1.0 / 6.0},
        {0.5, 2, 1.5, 2, 0.5, 1, -std::sqrt(5.0) / 10.0},
        {0.5, 1, 1.5, 1, 0.5, 1, -1.0 / 6.0},
        {0.5, 1, 1.5, 2, 0.5, 1, std::sqrt(3.0) / 6.0},
        {0.5, 2, 1.5, 1, 0.5, 1, std::sqrt(3.0) / 6.0},
        {1, 1, 2, 1, 1, 2, 1.0 / 30.0},
        {2, 2, 2, 2, 2, 2, -3.0 / 70.0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.a, c.b, c.c, c.d, c.e, c.f);
        CHECK_THAT(wigner_6j(c.a, c.b, c.c, c.d, c.e, c.f), WithinAbs(c.expected, tol));
    }
}

TEST_CASE("6j with one zero argument reduces to closed form") {
    // {a b c; 0 c b} = (-1)^(a+b+c) / sqrt((2b+1)(2c+1))
    const double triples[][3] = {{1, 2, 3}, {0.5, 1, 1.5}, {2, 2, 2}, {1.5, 1.5, 1}};
    for (const auto& t : triples) {
        const double a = t[0], b = t[1], c = t[2];
        const double expected =
            std::pow(-1.0, a + b + c) / std::sqrt((2 * b + 1) * (2 * c + 1));
        CAPTURE(a, b, c);
        CHECK_THAT(wigner_6j(a, b, c, 0, c, b), WithinAbs(expected, tol));
    }
}

TEST_CASE("6j orthogonality relation") {
    // sum_x (2x+1) {a b x; c d p} {a b x; c d q} = delta_pq / (2p+1),
    // for p, q satisfying the (a,d,p) and (b,c,p) triangle rules
    const double a = 1.0, b = 1.5, c = 0.5, d = 1.0;
    for (double p = 1.0; p <= 2.0; ++p)
        for (double q = 1.0; q <= 2.0; ++q) {
            double sum = 0.0;
            for (double x = 0.5; x <= 3.5; ++x)
                sum += (2 * x + 1) * wigner_6j(a, b, x, c, d, p) * wigner_6j(a, b, x, c, d, q);
            CAPTURE(p, q);
            CHECK_THAT(sum, WithinAbs(p == q ? 1.0 / (2 * p + 1) : 0.0, 1e-12));
        }
}

TEST_CASE("Clebsch-Gordan coefficients match tabulated exact values") {
    struct Case {
        double j1, m1, j2, m2, J, M, expected;
    };
    const std::vector<Case> cases = {
        {1.5, 1.5, 0.5, 0.5, 2, 2, 1.0},
        {1.5, 1.5, 0.5, -0.5, 1, 1, std::sqrt(3.0) / 2.0},
        {1.5, 0.5, 0.5, 0.5, 1, 1, -0.5},
        {1.5, 0.5, 0.5, -0.5, 2, 0, std::sqrt(2.0) / 2.0},
        {1.5, -0.5, 0.5, 0.5, 2, 0, std::sqrt(2.0) / 2.0},
        {1.5, 0.5, 0.5, -0.5, 1, 0, std::sqrt(2.0) / 2.0},
        {1.5, -0.5, 0.5, 0.5, 1, 0, -std::sqrt(2.0) / 2.0},
        {1, 0, 1, 0, 2, 0, std::sqrt(6.0) / 3.0},
        {1, 1, 1, -1, 0, 0, std::sqrt(3.0) / 3.0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.j1, c.m1, c.j2, c.m2, c.J, c.M);
        CHECK_THAT(clebsch_gordan(c.j1, c.m1, c.j2, c.m2, c.J, c.M), WithinAbs(c.expected, tol));
    }
}

TEST_CASE("Clebsch-Gordan completeness for I=3/2 (x) S=1/2") {
    // each uncoupled state decomposes with unit total weight
    for (double mi = -1.5; mi <= 1.5; ++mi)
        for (double ms = -0.5; ms <= 0.5; ++ms) {
            double sum = 0.0;
            for (double F = 1; F <= 2; ++F) {
                const double m = mi + ms;
                if (std::abs(m) > F) continue;
                const double c = clebsch_gordan(1.5, mi, 0.5, ms, F, m);
                sum += c * c;
            }
            CAPTURE(mi, ms);
            CHECK_THAT(sum, WithinAbs(1.0, tol));
        }
}

TEST_CASE("invalid angular momenta are rejected") {
    CHECK_THROWS_AS(wigner_3j(0.3, 1, 1, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(wigner_3j(1, 1, 1, 0.2, 0, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(wigner_3j(-1, 1, 1, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(wigner_6j(1, 1, 1, 1, 1, 0.7), std::invalid_argument);
    // m not half-integral offset from j
    CHECK_THROWS_AS(wigner_3j(0.5, 0.5, 1, 0, 0, 0), std::invalid_argument);
}
