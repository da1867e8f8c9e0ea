#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cbp/config.hpp"
#include "cbp/model.hpp"

using namespace cbp;

TEST_CASE("validate accepts and rejects instances") {
    CHECK_NOTHROW(validate({100, 0.05, 2, 5, 3, 1}));
    CHECK_THROWS_AS(validate({10, 0.05, 2, 8, 3, 1}), HardInvariantViolation);
    CHECK_THROWS_AS(validate({10, 0.0, 2, 1, 1, 1}), HardInvariantViolation);
    CHECK_THROWS_AS(validate({10, 1.0, 2, 1, 1, 1}), HardInvariantViolation);
    CHECK_THROWS_AS(validate({10, 0.5, 1, 1, 1, 1}), HardInvariantViolation);
}

TEST_CASE("validate warns only outside the asymptotic window") {
    // 1e-5 < 1e-4 < 1 / (sqrt(1e5) * ln 1e5) = 2.75e-4
    CHECK(validate({100000, 1e-4, 2, 1000, 375, 1}).clean());
    CHECK_FALSE(validate({1000, 5e-4, 2, 10, 5, 1}).clean());   // n p <= 1
    CHECK_FALSE(validate({100000, 1e-3, 2, 10, 5, 1}).clean());  // p too large
}

TEST_CASE("g_critical examples") {
    CHECK(g_critical(1000000, 1e-4, 2) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(g_critical(100000, 1e-4, 2) == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(g_critical(1, 1.0, 2) == doctest::Approx(0.5));
    // r = 3: (2/3) * sqrt(2 / (n p^3))
    CHECK(g_critical(1000000, 1e-3, 3) == doctest::Approx(2.0 / 3.0 * std::sqrt(2000.0)));
}

TEST_CASE("g_critical decreases in n and p") {
    RngStream rng(9, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto n = 1000 + static_cast<std::int64_t>(rng.uniform_below(1000000));
        const double p = 1e-6 + rng.uniform() * 1e-3;
        const int r = 2 + static_cast<int>(rng.uniform_below(3));
        CHECK(g_critical(n + 1 + static_cast<std::int64_t>(rng.uniform_below(1000)), p, r) < g_critical(n, p, r));
        CHECK(g_critical(n, p * (1.0 + 0.5 * rng.uniform() + 1e-6), r) < g_critical(n, p, r));
    }
}

TEST_CASE("regime parsing round-trips") {
    for (auto r : {Regime::QEqualsG, Regime::GMuchLessQMuchLessPInv, Regime::QEqualsPInv,
                   Regime::PInvMuchLessQMuchLessN})
        CHECK(parse_regime(to_string(r)) == r);
    CHECK_THROWS_AS(parse_regime("q_equals_n"), ConfigError);
}

TEST_CASE("RegimeSpec rejects equal or inverted densities") {
    CHECK_THROWS_AS(RegimeSpec(Regime::QEqualsG, 1.0, 1.0, 10), HardInvariantViolation);
    CHECK_THROWS_AS(RegimeSpec(Regime::QEqualsG, 1.0, 1.0 + 1e-14, 10), HardInvariantViolation);
    CHECK_THROWS_AS(RegimeSpec(Regime::QEqualsG, 0.5, 0.7, 10), HardInvariantViolation);
    CHECK_THROWS_AS(RegimeSpec(Regime::QEqualsG, 0.5, 0.0, 10), HardInvariantViolation);
    CHECK_NOTHROW(RegimeSpec(Regime::QEqualsG, 0.8, 0.5, 10));
}

TEST_CASE("RegimeSpec picks q from the instance") {
    const auto a = RegimeSpec::for_instance(Regime::QEqualsG, 2, 0.75, 100000, 1e-4, 2);
    CHECK(a.q() == doctest::Approx(500.0));
    const auto b = RegimeSpec::for_instance(Regime::QEqualsPInv, 2, 0.75, 100000, 1e-4, 2);
    CHECK(b.q() == doctest::Approx(10000.0));
    CHECK_THROWS(RegimeSpec::for_instance(Regime::GMuchLessQMuchLessPInv, 2, 0.75, 100000, 1e-4, 2));
    CHECK_THROWS(RegimeSpec::for_instance(Regime::QEqualsG, 2, 0.75, 100000, 1e-4, 2, 800.0));
    CHECK(RegimeSpec::for_instance(Regime::GMuchLessQMuchLessPInv, 1.5, 1, 100000, 1e-4, 2, 2000.0).q() == 2000.0);
}

TEST_CASE("seed counts use floor with a round-off allowance") {
    CHECK(seed_count(0.8, 500) == 400);
    CHECK(seed_count(0.75, 500) == 375);
    CHECK(seed_count(2.0, 499.999999999999) == 1000);
    CHECK(seed_count(0.75, 499.999999999999) == 375);
    CHECK(seed_count(1.9999, 500) == 999);
    CHECK(seed_count(0.0, 500) == 0);
}

TEST_CASE("seed sets are disjoint with the requested sizes") {
    RngStream rng(17, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto n = 1 + static_cast<std::int64_t>(rng.uniform_below(200));
        const auto a_R = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n) + 1));
        const auto a_B = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n - a_R) + 1));
        const ModelParams params{n, 0.1, 2, a_R, a_B, 1};
        const auto seeds = make_seeds(params, rng);
        REQUIRE(static_cast<std::int64_t>(seeds.red.size()) == a_R);
        REQUIRE(static_cast<std::int64_t>(seeds.black.size()) == a_B);
        std::set<NodeId> all(seeds.red.begin(), seeds.red.end());
        all.insert(seeds.black.begin(), seeds.black.end());
        CHECK(static_cast<std::int64_t>(all.size()) == a_R + a_B);
        for (auto v : all) CHECK(static_cast<std::int64_t>(v) < n);
    }
}

TEST_CASE("seed edge cases") {
    RngStream rng(1, 1);
    const auto empty = make_seeds({10, 0.1, 2, 0, 0, 1}, rng);
    CHECK(empty.red.empty());
    CHECK(empty.black.empty());
    auto full = make_seeds({10, 0.1, 2, 10, 0, 1}, rng).red;
    std::sort(full.begin(), full.end());
    for (NodeId v = 0; v < 10; ++v) CHECK(full[v] == v);
}

TEST_CASE("seeds are deterministic in the stream") {
    const ModelParams params{1000, 0.01, 2, 30, 20, 5};
    RngStream a(5, 0), b(5, 0);
    const auto x = make_seeds(params, a);
    const auto y = make_seeds(params, b);
    CHECK(x.red == y.red);
    CHECK(x.black == y.black);
}

TEST_CASE("nested seeds are ordered") {
    RngStream rng(23, 0);
    for (int i = 0; i < 500; ++i) {
        const std::int64_t n = 100;
        const auto a_R1 = static_cast<std::int64_t>(rng.uniform_below(20));
        const auto a_R2 = a_R1 + static_cast<std::int64_t>(rng.uniform_below(10));
        const auto a_B2 = static_cast<std::int64_t>(rng.uniform_below(20));
        const auto a_B1 = a_B2 + static_cast<std::int64_t>(rng.uniform_below(10));
        const auto [s1, s2] = make_nested_seeds(n, a_R1, a_B1, a_R2, a_B2, rng);
        const std::set<NodeId> r2(s2.red.begin(), s2.red.end()), b1(s1.black.begin(), s1.black.end());
        for (auto v : s1.red) CHECK(r2.count(v));
        for (auto v : s2.black) CHECK(b1.count(v));
        std::set<NodeId> u1(s1.red.begin(), s1.red.end());
        for (auto v : s1.black) CHECK_FALSE(u1.count(v));
        CHECK(static_cast<std::int64_t>(s1.red.size()) == a_R1);
        CHECK(static_cast<std::int64_t>(s2.black.size()) == a_B2);
    }
    CHECK_THROWS(make_nested_seeds(10, 3, 1, 2, 1, rng));
}
