#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "rbrelax/csv.hpp"
#include "rbrelax/trace.hpp"

using namespace rbrelax;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DecayTrace awkward_trace() {
    // values chosen to stress the serializer: subnormal-ish, negative,
    // repeating binary fractions, large magnitudes
    DecayTrace tr;
    tr.meta.protocol = "C";
    tr.meta.density_cm3 = 3.8e11;
    tr.meta.bz_gauss = 1e-3;
    tr.meta.delay_s = 1e-4;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double t = 0.0;
    for (int i = 0; i < 57; ++i) {
        t += 1e-5 * (1.0 + 0.3 * u(rng));
        tr.time_s.push_back(t);
        tr.alpha_raw.push_back(0.1 * std::exp(3.0 * u(rng)) * (u(rng) > 0 ? 1 : -1));
        tr.alpha_norm.push_back(u(rng) / 3.0);
    }
    return tr;
}

} // namespace

TEST_CASE("normalization maps the trace span to [1, 0]") {
    const std::vector<double> alpha = {0.8, 0.5, 0.31, 0.3};
    const auto norm = normalize_trace(alpha, 0.3, 0.8);
    CHECK_THAT(norm.front(), WithinAbs(1.0, 1e-15));
    CHECK_THAT(norm.back(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(norm[1], WithinRel(0.4, 1e-12));
    // overshoot values land below zero instead of being clamped
    const auto over = normalize_trace({0.9, 0.2}, 0.3, 0.8);
    CHECK(over[1] < 0.0);
    CHECK_THROWS_AS(normalize_trace(alpha, 0.5, 0.5 + 1e-12), std::invalid_argument);
}

TEST_CASE("trace validation catches shape errors") {
    DecayTrace tr;
    tr.time_s = {0.0, 1.0, 2.0};
    tr.alpha_raw = {1.0, 2.0, 3.0};
    tr.alpha_norm = {1.0, 2.0};
    CHECK_THROWS_AS(tr.validate(), std::invalid_argument);
    tr.alpha_norm = {1.0, 2.0, 3.0};
    CHECK_NOTHROW(tr.validate());
    tr.time_s = {0.0, 2.0, 2.0};
    CHECK_THROWS_AS(tr.validate(), std::invalid_argument);
}

TEST_CASE("subtracting traces cancels the common background") {
    DecayTrace a = awkward_trace();
    DecayTrace b = a;
    for (auto& v : b.alpha_raw) v += 0.25;
    for (auto& v : b.alpha_norm) v += 0.5;
    const DecayTrace d = subtract_traces(b, a);
    CHECK(d.meta.protocol == "C-diff");
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK_THAT(d.alpha_raw[i], WithinRel(0.25, 1e-9));
        CHECK_THAT(d.alpha_norm[i], WithinRel(0.5, 1e-9));
    }
    DecayTrace shifted = a;
    for (auto& t : shifted.time_s) t += 1e-3;
    CHECK_THROWS_AS(subtract_traces(a, shifted), std::invalid_argument);
}

TEST_CASE("csv round trip is bit exact") {
    const DecayTrace tr = awkward_trace();
    std::ostringstream first;
    write_trace_csv(tr, first);
    std::istringstream in(first.str());
    const DecayTrace back = read_trace_csv(in);

    REQUIRE(back.size() == tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(back.time_s[i] == tr.time_s[i]);
        CHECK(back.alpha_raw[i] == tr.alpha_raw[i]);
        CHECK(back.alpha_norm[i] == tr.alpha_norm[i]);
    }
    CHECK(back.meta.protocol == tr.meta.protocol);
    CHECK(back.meta.density_cm3 == tr.meta.density_cm3);
    CHECK(back.meta.bz_gauss == tr.meta.bz_gauss);
    CHECK(back.meta.delay_s == tr.meta.delay_s);

    // writing the reread trace reproduces the file byte for byte
    std::ostringstream second;
    write_trace_csv(back, second);
    CHECK(second.str() == first.str());
}

TEST_CASE("empty trace writes header and metadata only") {
    DecayTrace tr;
    tr.meta.protocol = "A";
    std::ostringstream os;
    write_trace_csv(tr, os);
    std::istringstream in(os.str());
    const DecayTrace back = read_trace_csv(in);
    CHECK(back.size() == 0);
    CHECK(back.meta.protocol == "A");
}

TEST_CASE("metadata lines parse in any order") {
    const char* scrambled =
        "# delay_s=0.0001\n"
        "time_s,alpha_raw,alpha_norm\n"
        "0.001,0.5,1\n"
        "0.002,0.25,0.5\n";
    const char* plain =
        "# protocol=C\n"
        "time_s,alpha_raw,alpha_norm\n"
        "0.001,0.5,1\n"
        "0.002,0.25,0.5\n";
    std::istringstream a(std::string("# protocol=C\n") + scrambled);
    std::istringstream b(std::string(plain).insert(13, "# delay_s=0.0001\n"));
    const DecayTrace ta = read_trace_csv(a);
    const DecayTrace tb = read_trace_csv(b);
    CHECK(ta.meta.protocol == tb.meta.protocol);
    CHECK(ta.meta.delay_s == tb.meta.delay_s);
    CHECK(ta.time_s == tb.time_s);
}

TEST_CASE("malformed csv reports the offending line") {
    auto read_str = [](const std::string& s) {
        std::istringstream in(s);
        return read_trace_csv(in, "trace.csv");
    };
    const std::string head = "time_s,alpha_raw,alpha_norm\n";
    CHECK_THROWS_WITH(read_str(head + "0.001,0.5\n"),
                      Catch::Matchers::ContainsSubstring("trace.csv:2"));
    CHECK_THROWS_WITH(read_str(head + "0.001,0.5,a,b\n"),
                      Catch::Matchers::ContainsSubstring("3 columns"));
    CHECK_THROWS_WITH(read_str(head + "0.001,zebra,1\n"),
                      Catch::Matchers::ContainsSubstring("not a number"));
    CHECK_THROWS_WITH(read_str("t,alpha\n"), Catch::Matchers::ContainsSubstring("header"));
    CHECK_THROWS_WITH(read_str(""), Catch::Matchers::ContainsSubstring("header"));
}

TEST_CASE("file round trip through the filesystem") {
    const DecayTrace tr = awkward_trace();
    const std::string path = "trace_io_roundtrip.csv";
    write_trace_csv(tr, path);
    const DecayTrace back = read_trace_csv(path);
    CHECK(back.time_s == tr.time_s);
    CHECK(back.alpha_raw == tr.alpha_raw);
    CHECK(back.alpha_norm == tr.alpha_norm);
    std::remove(path.c_str());
    CHECK_THROWS_WITH(read_trace_csv("does_not_exist_anywhere.csv"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
}
