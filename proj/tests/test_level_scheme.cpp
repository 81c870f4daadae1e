#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rbrelax/fields.hpp"
#include "rbrelax/kvconfig.hpp"
#include "rbrelax/level_scheme.hpp"
#include "rbrelax/wigner.hpp"

using namespace rbrelax;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent route to the dipole amplitudes: expand both hyperfine states in
// the uncoupled |m_J, m_I> basis and apply the electronic matrix element
// directly. The production code goes through a 6j recoupling instead; the two
// must agree to machine precision.
double dipole_amplitude_oracle(const Level& g, const Level& e, int q) {
    const double J = 0.5, Jp = 0.5, I = 1.5;
    const double c = std::sqrt(2.0 * Jp + 1.0);
    double total = 0.0;
    for (double mJ = -J; mJ <= J; ++mJ) {
        const double mI = g.m - mJ;
        if (std::abs(mI) > I) continue;
        const double mJp = e.m - mI;
        if (std::abs(mJp) > Jp) continue;
        const double cg_g = clebsch_gordan(J, mJ, I, mI, g.F, g.m);
        const double cg_e = clebsch_gordan(Jp, mJp, I, mI, e.F, e.m);
        const double elec = std::pow(-1.0, Jp - mJp) * wigner_3j(Jp, 1.0, J, -mJp, q, mJ);
        total += cg_g * cg_e * elec;
    }
    return c * total;
}

} // namespace

TEST_CASE("level indexing round-trips and orders F=1 before F=2") {
    const LevelScheme scheme;
    int expected = 0;
    for (int excited = 0; excited <= 1; ++excited)
        for (int F = 1; F <= 2; ++F)
            for (int m = -F; m <= F; ++m) {
                const int i = scheme.index_of(excited != 0, F, m);
                CHECK(i == expected++);
                CHECK(scheme.level(i).excited == (excited != 0));
                CHECK(scheme.level(i).F == F);
                CHECK(scheme.level(i).m == m);
            }
    CHECK(expected == n_levels);
    CHECK_THROWS_AS(scheme.index_of(false, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(scheme.index_of(false, 1, 2), std::invalid_argument);
}

TEST_CASE("hyperfine energies sit at 0 and 2*pi*splitting") {
    const LevelScheme scheme;
    CHECK(scheme.energy(scheme.index_of(false, 1, 0)) == 0.0);
    CHECK_THAT(scheme.energy(scheme.index_of(false, 2, 0)),
               WithinRel(two_pi * 6.834682610904e9, 1e-14));
    CHECK(scheme.energy(scheme.index_of(true, 1, 0)) == 0.0);
    CHECK_THAT(scheme.energy(scheme.index_of(true, 2, 0)), WithinRel(two_pi * 814.5e6, 1e-14));
}

TEST_CASE("Lande g-factors have the right magnitude and sign") {
    const LevelScheme scheme;
    const double gj = 2.00233113;
    CHECK_THAT(scheme.g_F(scheme.index_of(false, 2, 0)), WithinRel(gj / 4.0, 1e-12));
    CHECK_THAT(scheme.g_F(scheme.index_of(false, 1, 0)), WithinRel(-gj / 4.0, 1e-12));
    CHECK_THAT(scheme.g_F(scheme.index_of(true, 2, 0)), WithinRel(0.666 / 4.0, 1e-12));
    CHECK_THAT(scheme.g_F(scheme.index_of(true, 1, 0)), WithinRel(-0.666 / 4.0, 1e-12));
}

TEST_CASE("Zeeman shift of the stretched ground state at 1 mG") {
    const LevelScheme scheme;
    const double shift = scheme.zeeman_shift(scheme.index_of(false, 2, 2), 1e-3);
    // 1.3996246 MHz/G * (g_J/4) * m=2 * 1e-3 G = 1401.256 Hz
    CHECK_THAT(shift / two_pi, WithinAbs(1401.256, 0.01));
    // opposite sign in F=1 (electron spin anti-aligned)
    const double shift1 = scheme.zeeman_shift(scheme.index_of(false, 1, 1), 1e-3);
    CHECK(shift1 < 0.0);
    CHECK_THAT(shift1 / two_pi, WithinAbs(-1401.256 / 2.0, 0.01));
}

TEST_CASE("dipole table matches the uncoupled-basis oracle everywhere") {
    const LevelScheme scheme;
    const TransitionTable table(scheme);
    for (int gi = 0; gi < n_ground; ++gi)
        for (int ei = 0; ei < n_excited; ++ei)
            for (int q = -1; q <= 1; ++q) {
                const double got = table.amplitude(gi, ei, q);
                const double want =
                    dipole_amplitude_oracle(scheme.level(gi), scheme.level(n_ground + ei), q);
                CAPTURE(gi, ei, q);
                CHECK_THAT(got, WithinAbs(want, 1e-13));
            }
}

TEST_CASE("sigma+ amplitudes out of F=1 toward F'=2 are 1/12, 1/4, 1/2") {
    const LevelScheme scheme;
    const TransitionTable table(scheme);
    const double expected[] = {1.0 / 12.0, 1.0 / 4.0, 1.0 / 2.0};
    for (int m = -1; m <= 1; ++m) {
        const double a =
            table.amplitude(scheme.index_of(false, 1, m), scheme.index_of(true, 2, m + 1) - n_ground, 1);
        CHECK_THAT(a * a, WithinAbs(expected[m + 1], 1e-14));
    }
}

TEST_CASE("every excited sublevel decays with unit total branching") {
    const LevelScheme scheme;
    const TransitionTable table(scheme);
    for (int ei = 0; ei < n_excited; ++ei) {
        double sum = 0.0;
        for (int gi = 0; gi < n_ground; ++gi)
            for (int q = -1; q <= 1; ++q) {
                const double a = table.amplitude(gi, ei, q);
                sum += a * a;
            }
        CAPTURE(ei);
        CHECK_THAT(sum, WithinAbs(1.0, 1e-13));
    }
}

TEST_CASE("amplitudes vanish for dipole-forbidden combinations") {
    const LevelScheme scheme;
    const TransitionTable table(scheme);
    // q must equal m_e - m_g
    for (int gi = 0; gi < n_ground; ++gi)
        for (int ei = 0; ei < n_excited; ++ei)
            for (int q = -1; q <= 1; ++q) {
                if (scheme.level(n_ground + ei).m - scheme.level(gi).m != q)
                    CHECK(table.amplitude(gi, ei, q) == 0.0);
            }
    // F=2,m=+-2 <-> F'=1 has no partner level
    CHECK(table.amplitude(scheme.index_of(false, 2, 2), scheme.index_of(true, 1, 1) - n_ground, 1) == 0.0);
}

TEST_CASE("superposition states dark and bright under linear light on F=2 -> F'=1") {
    const LevelScheme scheme;
    const TransitionTable table(scheme);
    const Polarization lin = Polarization::linear();

    auto coupling_norm = [&](const std::array<double, 5>& psi) {
        // |psi> lives in F=2 (m=-2..2); return the norm of V|psi> in F'=1
        double total = 0.0;
        for (int me = -1; me <= 1; ++me) {
            cd amp = 0.0;
            for (int m = -2; m <= 2; ++m) {
                const int q = me - m;
                if (q < -1 || q > 1) continue;
                amp += lin.component(q) *
                       table.amplitude(scheme.index_of(false, 2, m),
                                       scheme.index_of(true, 1, me) - n_ground, q) *
                       psi[static_cast<std::size_t>(m + 2)];
            }
            total += std::norm(amp);
        }
        return std::sqrt(total);
    };

    const double s2 = 1.0 / std::sqrt(2.0), s8 = 1.0 / std::sqrt(8.0);
    const std::array<double, 5> lambda = {0.0, s2, 0.0, s2, 0.0};
    const std::array<double, 5> lambda_bright = {0.0, s2, 0.0, -s2, 0.0};
    const std::array<double, 5> m_state = {s8, 0.0, std::sqrt(6.0) * s8, 0.0, s8};

    CHECK_THAT(coupling_norm(lambda), WithinAbs(0.0, 1e-14));
    CHECK_THAT(coupling_norm(m_state), WithinAbs(0.0, 1e-14));
    CHECK_THAT(coupling_norm(lambda_bright), WithinAbs(0.5, 1e-13));
}

TEST_CASE("thermal state is the fully mixed ground state") {
    const Matrix16 rho = thermal_state();
    CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-15));
    for (int i = 0; i < n_levels; ++i)
        for (int j = 0; j < n_levels; ++j) {
            if (i == j && i < n_ground)
                CHECK(rho(i, j) == cd(0.125, 0.0));
            else if (i != j || i >= n_ground)
                CHECK(rho(i, j) == cd(0.0, 0.0));
        }
}

TEST_CASE("atom data loads from config with defaults for missing keys") {
    const auto cfg = KeyValueConfig::parse("[atom]\n"
                                           "hyperfine_ground_hz = 6.8e9\n"
                                           "mass_amu = 86.909180531\n");
    const AtomData d = load_atom_data(cfg);
    CHECK(d.hyperfine_ground_hz == 6.8e9);
    CHECK_THAT(d.mass_kg, WithinRel(86.909180531 * amu_si, 1e-12));
    CHECK(d.gamma_natural_hz == 5.75e6); // default retained
    CHECK_THROWS_AS(LevelScheme(AtomData{.wavelength_m = -1.0}), std::invalid_argument);
}
