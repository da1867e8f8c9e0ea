#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "cbp/config.hpp"

using namespace cbp;

TEST_CASE("key-value parsing handles comments, blanks and repeats") {
    const auto kv = KeyValues::parse("# instance\nn = 100\n\np=0.05   # inline\nn = 200\n");
    CHECK(kv.get("n") == "200");
    CHECK(kv.get("p") == "0.05");
    CHECK_FALSE(kv.has("r"));
    CHECK(kv.entries().size() == 2);
}

TEST_CASE("malformed lines are config errors") {
    CHECK_THROWS_AS(KeyValues::parse("n 100"), ConfigError);
    CHECK_THROWS_AS(KeyValues::parse("= 3"), ConfigError);
}

TEST_CASE("overrides are last-wins") {
    auto kv = KeyValues::parse("n = 100\n");
    kv.apply_overrides({"n=5", "p = 0.1", "n=7"});
    CHECK(kv.get("n") == "7");
    CHECK(kv.get("p") == "0.1");
    CHECK_THROWS_AS(kv.apply_overrides({"novalue"}), ConfigError);
}

TEST_CASE("unknown keys are rejected") {
    const auto kv = KeyValues::parse("n = 1\nbogus = 2\nsweep.p = 1,2\n");
    CHECK_THROWS_AS(kv.require_known(model_keys()), ConfigError);
    CHECK_THROWS_AS(kv.require_known(model_keys(), {"sweep."}), ConfigError);
    CHECK_NOTHROW(KeyValues::parse("n = 1\nsweep.p = 1\n").require_known(model_keys(), {"sweep."}));
}

TEST_CASE("missing file error names the path") {
    try {
        KeyValues::load("/definitely/not/here.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/definitely/not/here.cfg") != std::string::npos);
    }
}

TEST_CASE("model config derives seeds from densities") {
    const auto cfg = model_from_config(
        KeyValues::parse("n = 1e5\np = 1e-4\nr = 2\nregime = q_equals_g\nalpha_R = 0.8\nalpha_B = 0.5\nseed = 9\n"));
    CHECK(cfg.params.n == 100000);
    CHECK(cfg.params.a_R == 400);
    CHECK(cfg.params.a_B == 250);
    CHECK(cfg.params.seed == 9);
    CHECK(cfg.seeds_from_alpha);
    REQUIRE(cfg.regime);
    CHECK(cfg.regime->q() == doctest::Approx(500));
}

TEST_CASE("explicit seed counts win over densities") {
    const auto cfg = model_from_config(
        KeyValues::parse("n = 1e5\np = 1e-4\nr = 2\nregime = q_equals_g\nalpha_R = 2\nalpha_B = 0.75\na_R = 7\n"));
    CHECK(cfg.params.a_R == 7);
    CHECK(cfg.params.a_B == 375);
}

TEST_CASE("model config errors") {
    CHECK_THROWS_AS(model_from_config(KeyValues::parse("p = 0.1\nr = 2\n")), ConfigError);
    CHECK_THROWS_AS(model_from_config(KeyValues::parse("n = 10\np = x\nr = 2\n")), ConfigError);
    CHECK_THROWS_AS(model_from_config(KeyValues::parse("n = 10.5\np = 0.1\nr = 2\n")), ConfigError);
    CHECK_THROWS_AS(model_from_config(KeyValues::parse("n = 10\np = 0.1\nr = 2\nalpha_R = 1\n")), ConfigError);
    CHECK_THROWS_AS(model_from_config(KeyValues::parse("n = 10\np = 0.1\nr = 2\nregime = q_equals_g\nalpha_R = 1\n")),
                    ConfigError);
    CHECK_THROWS_AS(model_from_config(
                        KeyValues::parse("n = 10\np = 0.1\nr = 2\nregime = q_equals_g\nalpha_R = 1\nalpha_B = 1\n")),
                    ConfigError);
}

TEST_CASE("config text round-trips") {
    const auto cfg = model_from_config(KeyValues::parse(
        "n = 100000\np = 1e-4\nr = 2\nregime = g_lt_q_lt_pinv\nq = 2000\nalpha_R = 1.5\nalpha_B = 1\nseed = 3\n"));
    const auto again = model_from_config(KeyValues::parse(to_config_text(cfg.params, cfg.regime)));
    CHECK(again.params == cfg.params);
    CHECK(again.regime == cfg.regime);
}

TEST_CASE("number parsing") {
    CHECK(parse_int("n", "100000") == 100000);
    CHECK(parse_int("n", "1e5") == 100000);
    CHECK_THROWS_AS(parse_int("n", "1.5"), ConfigError);
    CHECK(parse_real("p", "1e-4") == 1e-4);
    CHECK_THROWS_AS(parse_real("p", "0.1x"), ConfigError);
    CHECK_THROWS_AS(parse_real("p", "inf"), ConfigError);
    CHECK(parse_real_list("a", "1, 2.5,3") == std::vector<double>{1, 2.5, 3});
    CHECK_THROWS_AS(parse_real_list("a", "1,,2"), ConfigError);
    CHECK_THROWS_AS(parse_u64("seed", "-1"), ConfigError);
}
