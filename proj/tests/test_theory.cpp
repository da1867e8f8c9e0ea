#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cbp/stats.hpp"
#include "cbp/theory.hpp"

using namespace cbp;
using namespace cbp::theory;

namespace {

BetaSpec qg(double aR, double aB, int r = 2) { return {Regime::QEqualsG, r, aR, aB}; }

// Independent r = 2, q = g oracles, from beta(y) = ((y + alpha)^2 - 4 y) / 4.
double oracle_z(double a) { return 2 - a - 2 * std::sqrt(1 - a); }

double oracle_kappa_g(double a) {
    // int_0^inf 4 dy / ((y + a - 2)^2 + 4(a - 1))
    const double s = 2 * std::sqrt(a - 1);
    return 4 / s * (std::numbers::pi / 2 - std::atan((a - 2) / s));
}

// Solves int_0^G 4 dy / ((y - z)(y - w)) = kappa for alpha_B < 1 (zeros z < w).
double oracle_terminal(double aB, double kappa) {
    const double z = 2 - aB - 2 * std::sqrt(1 - aB), w = 2 - aB + 2 * std::sqrt(1 - aB);
    const double e = std::exp(kappa * (w - z) / 4);
    return z * w * (e - 1) / (e * w - z);
}

// P(Po(l1) - Po(l2) >= r) by plain double summation.
double oracle_skellam(double l1, double l2, int r) {
    double s = 0;
    double p2 = std::exp(-l2);
    for (int j = 0; j < 200; ++j) {
        double p1 = std::exp(-l1), tail = 0;
        for (int i = 0; i < 400; ++i) {
            if (i >= j + r) tail += p1;
            p1 *= l1 / (i + 1);
        }
        s += p2 * tail;
        p2 *= l2 / (j + 1);
    }
    return s;
}

}  // namespace

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(qg(0.5, 0.5).check(), DomainError);
    CHECK_THROWS_AS(qg(0.5, 0.7).check(), DomainError);
    CHECK_THROWS_AS(qg(0.5, 0.2, 1).check(), DomainError);
    CHECK_NOTHROW(qg(0.8, 0.5).check());
}

TEST_CASE("c_r") {
    CHECK(c_r(2) == doctest::Approx(0.25));
    CHECK(c_r(3) == doctest::Approx(1.0 / 3 * 4.0 / 9));
}

TEST_CASE("beta for q = g, r = 2") {
    const auto spec = qg(0.8, 0.5);
    for (double x : {0.0, 0.1, 0.7, 3.0}) {
        const auto b = beta(spec, x, 2 * x);
        CHECK(b[0] == doctest::Approx(((x + 0.8) * (x + 0.8) - 4 * x) / 4));
        CHECK(b[1] == doctest::Approx(((2 * x + 0.5) * (2 * x + 0.5) - 8 * x) / 4));
    }
}

TEST_CASE("skellam tail against direct summation") {
    for (auto [l1, l2, r] : {std::tuple{0.5, 0.2, 2}, std::tuple{3.0, 1.0, 2}, std::tuple{10.0, 7.5, 3},
                             std::tuple{1.0, 0.0, 2}, std::tuple{20.0, 18.0, 2}}) {
        CAPTURE(l1);
        CHECK(skellam_tail(l1, l2, r) == doctest::Approx(oracle_skellam(l1, l2, r)).epsilon(1e-9));
    }
}

TEST_CASE("zeros of beta") {
    for (double a : {0.1, 0.5, 0.75, 0.95}) {
        CAPTURE(a);
        const auto z = beta_zeros(qg(1.5, a), Color::Black);
        REQUIRE(z.z);
        CHECK(*z.z == doctest::Approx(oracle_z(a)).epsilon(1e-10));
        CHECK(*z.w == doctest::Approx(2 - a + 2 * std::sqrt(1 - a)).epsilon(1e-9));
        const auto c = beta_zeros_r2(a);
        CHECK(*c.z == doctest::Approx(oracle_z(a)).epsilon(1e-12));
    }
    CHECK_FALSE(beta_zeros(qg(1.5, 0.5), Color::Red).z);
    CHECK_FALSE(beta_zeros_r2(1.2).z);
    // subcritical example: z_R + alpha_R and z_B + alpha_B
    CHECK(oracle_z(0.8) + 0.8 == doctest::Approx(1.1056).epsilon(1e-4));
    CHECK(oracle_z(0.5) + 0.5 == doctest::Approx(0.5858).epsilon(1e-4));
    CHECK_THROWS_AS(beta_zeros({Regime::QEqualsPInv, 2, 1.5, 0.5}, Color::Black), DomainError);
}

TEST_CASE("kappa_g against the arctangent closed form") {
    for (double a : {1.2, 1.5, 2.0, 3.3, 4.7}) {
        CAPTURE(a);
        CHECK(*kappa_g(qg(a, 0.5)) == doctest::Approx(oracle_kappa_g(a)).epsilon(1e-9));
    }
    CHECK(*kappa_g(qg(2, 0.75)) == doctest::Approx(std::numbers::pi).epsilon(1e-10));
    CHECK_FALSE(kappa_g(qg(0.8, 0.5)));
    CHECK_FALSE(kappa_g({Regime::QEqualsPInv, 2, 2, 0.75}));
}

TEST_CASE("black value at the red blow-up") {
    CHECK(solve_terminal(qg(2, 0.75), Color::Black, std::numbers::pi) ==
          doctest::Approx(oracle_terminal(0.75, std::numbers::pi)).epsilon(1e-9));
    CHECK(oracle_terminal(0.75, std::numbers::pi) + 0.75 == doctest::Approx(0.9527).epsilon(1e-4));
    const auto p = predict(qg(2, 0.75));
    CHECK(*p.g_B_at_kappa_g == doctest::Approx(oracle_terminal(0.75, std::numbers::pi)).epsilon(1e-9));
    CHECK(p.limit_AB_over_q == doctest::Approx(0.952712300029).epsilon(1e-9));
    CHECK(p.ar_scale == "n");
}

TEST_CASE("closed form and numeric route agree") {
    for (auto [aR, aB] : {std::pair{2.0, 0.75}, std::pair{1.2, 1.1}, std::pair{1.2, 0.95}, std::pair{4.7, 2.9},
                          std::pair{3.3, 0.15}}) {
        CAPTURE(aR);
        CAPTURE(aB);
        const auto c = closed_form_r2(aR, aB);
        const auto n = predict(qg(aR, aB));
        CHECK(*c.kappa_g == doctest::Approx(*n.kappa_g).epsilon(1e-9));
        CHECK(c.limit_AB_over_q == doctest::Approx(n.limit_AB_over_q).epsilon(1e-8));
    }
    CHECK_THROWS_AS(closed_form_r2(0.8, 0.5), DomainError);
    CHECK_THROWS_AS(closed_form_r2(2.0, 1.0), DomainError);
}

TEST_CASE("figure endpoints") {
    // alpha_R -> 1 recovers alpha_B + z_B; at alpha_B = 1 both branches give 1 + kappa/(kappa + 4).
    CHECK(std::abs(closed_form_r2(1.05, 0.75).limit_AB_over_q - 1.0) < 0.05);
    CHECK(closed_form_r2(1.05, 0.75).limit_AB_over_q < 1.0);
    const double k3 = std::sqrt(2.0) * (std::numbers::pi / 2 - std::atan(1 / (2 * std::sqrt(2.0))));
    const double at_one = 1 + k3 / (k3 + 4);
    CHECK(closed_form_r2(3.0, 1 - 1e-7).limit_AB_over_q == doctest::Approx(at_one).epsilon(1e-5));
    CHECK(closed_form_r2(3.0, 1 + 1e-7).limit_AB_over_q == doctest::Approx(at_one).epsilon(1e-5));
}

TEST_CASE("black limit decreases in alpha_R") {
    for (double aB : {0.3, 0.5, 0.75, 0.9}) {
        double prev = 10;
        for (double aR = 1.2; aR < 6; aR += 0.05) {
            const double v = closed_form_r2(aR, aB).limit_AB_over_q;
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("ODE blow-up matches kappa_g and the terminal value") {
    const auto spec = qg(2, 0.75);
    const auto g = solve_g(spec, 10.0);
    REQUIRE(g.kappa);
    CHECK(*g.kappa == doctest::Approx(std::numbers::pi).epsilon(1e-5));
    CHECK(g.ode_terminal_B == doctest::Approx(oracle_terminal(0.75, std::numbers::pi)).epsilon(1e-6));
}

TEST_CASE("g solves its ODE") {
    const auto spec = qg(1.5, 0.6);
    const auto g = solve_g(spec, 1.0);
    for (std::size_t i = 0; i < g.grid.size(); i += 7) {
        const auto b = beta(spec, g.values[i][0], g.values[i][1]);
        CHECK(g.derivatives[i][0] == doctest::Approx(b[0]).epsilon(1e-10));
        CHECK(g.derivatives[i][1] == doctest::Approx(b[1]).epsilon(1e-10));
    }
}

TEST_CASE("subcritical f ends at the zeros") {
    const auto spec = qg(0.8, 0.5);
    REQUIRE(kappa_f(spec));
    CHECK(*kappa_f(spec) == doctest::Approx(oracle_z(0.8) + oracle_z(0.5)).epsilon(1e-10));
    const auto p = predict(spec);
    CHECK(p.ar_scale == "q");
    CHECK(p.limit_AR_over_scale == doctest::Approx(oracle_z(0.8) + 0.8).epsilon(1e-10));
    CHECK(p.limit_AB_over_q == doctest::Approx(oracle_z(0.5) + 0.5).epsilon(1e-10));
    const auto f = solve_f(spec, *kappa_f(spec));
    CHECK(f.values.back()[0] == doctest::Approx(oracle_z(0.8)).epsilon(1e-5));
    CHECK(f.values.back()[1] == doctest::Approx(oracle_z(0.5)).epsilon(1e-5));
}

TEST_CASE("f by the ODE and by transfer from g agree") {
    const auto spec = qg(2, 0.75);
    const auto a = solve_f(spec, 5.0);
    const auto b = solve_f_transfer(spec, 5.0, 201);
    for (double x : {0.1, 1.0, 2.5, 4.9}) {
        const auto va = a.value_at(x), vb = b.value_at(x);
        CHECK(va[0] == doctest::Approx(vb[0]).epsilon(1e-7));
        CHECK(va[1] == doctest::Approx(vb[1]).epsilon(1e-7));
    }
}

TEST_CASE("decoupled closed form for g << q << 1/p") {
    const BetaSpec spec{Regime::GMuchLessQMuchLessPInv, 2, 1.5, 1.0};
    CHECK(*kappa_g(spec) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
    CHECK(kappa_h(1.5, 2) == doctest::Approx(4.0 / 3.0));
    CHECK(h_closed(1.5, 2, 0.5) == doctest::Approx(1.0 / (1.0 / 1.5 - 0.25) - 1.5));
    CHECK(predict(spec).lim_f_B == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("timing integral identity") {
    const auto spec = qg(2, 0.75);
    const auto f = solve_f(spec, 20.0);
    for (double k : {0.2, 1.0, 3.0}) CHECK(timing_tau_color(spec, f, Color::Red, k) == doctest::Approx(separable_time(spec, Color::Red, k)).epsilon(1e-7));
    CHECK(timing_tau_color(spec, f, Color::Black, 0.1) ==
          doctest::Approx(separable_time(spec, Color::Black, 0.1)).epsilon(1e-7));
    CHECK(timing_tau(spec, 1.0) == doctest::Approx(0.8511600531).epsilon(1e-8));
    CHECK_THROWS_AS(timing_tau(qg(0.8, 0.5), 5.0), DomainError);
    CHECK_THROWS_AS(timing_tau(spec, -1.0), DomainError);
}

TEST_CASE("eta") {
    CHECK(eta(Regime::QEqualsG, 100000, 1e-4, 500, 2) == 1.0);
    CHECK(eta(Regime::GMuchLessQMuchLessPInv, 100000, 1e-4, 2000, 2) == doctest::Approx(100000 * 0.04 / 2000));
    CHECK(eta(Regime::QEqualsPInv, 100000, 1e-4, 10000, 2) == doctest::Approx(10));
}

TEST_CASE("pi_S against a direct double sum") {
    const ModelParams params{500, 0.02, 2, 20, 10, 1};
    for (auto [kR, kB] : {std::pair<std::int64_t, std::int64_t>{0, 0}, {30, 12}, {100, 200}}) {
        const auto pmf_r = stats::binomial_pmf(kR + 20, 0.02), pmf_b = stats::binomial_pmf(kB + 10, 0.02);
        double red = 0, black = 0;
        for (std::size_t i = 0; i < pmf_r.size(); ++i)
            for (std::size_t j = 0; j < pmf_b.size(); ++j) {
                const auto d = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j);
                if (d >= 2) red += pmf_r[i] * pmf_b[j];
                if (-d >= 2) black += pmf_r[i] * pmf_b[j];
            }
        CHECK(pi_S(params, Color::Red, kR, kB) == doctest::Approx(red).epsilon(1e-10));
        CHECK(pi_S(params, Color::Black, kR, kB) == doctest::Approx(black).epsilon(1e-10));
    }
    CHECK_THROWS_AS(pi_S(params, Color::Red, -1, 0), DomainError);
}

TEST_CASE("zeta and tail bounds dominate exact tails") {
    CHECK(zeta(0) == 1.0);
    CHECK(zeta(1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(zeta(-0.1), DomainError);
    for (auto [m, q] : {std::pair{100.0, 0.1}, std::pair{1000.0, 0.02}, std::pair{50.0, 0.5}}) {
        const auto pmf = stats::binomial_pmf(static_cast<std::int64_t>(m), q);
        const double mu = m * q;
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            double upper = 0, lower = 0;
            for (std::size_t i = k; i < pmf.size(); ++i) upper += pmf[i];
            for (std::size_t i = 0; i <= k; ++i) lower += pmf[i];
            const double kk = static_cast<double>(k);
            if (kk >= mu) CHECK(upper <= tail_bound(TailKind::BinomialUpper, m, q, kk) * (1 + 1e-9));
            if (kk >= std::exp(2.0) * mu)
                CHECK(upper <= tail_bound(TailKind::BinomialUpperLarge, m, q, kk) * (1 + 1e-9));
            if (kk <= mu) CHECK(lower <= tail_bound(TailKind::BinomialLower, m, q, kk) * (1 + 1e-9));
        }
    }
    CHECK_THROWS_AS(tail_bound(TailKind::BinomialUpper, 100, 0.1, 5), DomainError);
    CHECK_THROWS_AS(tail_bound(TailKind::BinomialLower, 100, 0.1, 50), DomainError);
}

TEST_CASE("fluid table rows") {
    CHECK(table_row(qg(0.8, 0.5)).label == "(i)");
    CHECK(table_row(qg(2, 0.75)).label == "(ii)");
    CHECK_FALSE(table_row(qg(2, 0.75)).kappa_f);
    const auto iv = table_row({Regime::QEqualsPInv, 2, 2, 0.75});
    CHECK(iv.estimated);
    CHECK(iv.lim_f_B > 0);
    const auto v = table_row({Regime::PInvMuchLessQMuchLessN, 2, 2, 0.75});
    CHECK(v.lim_f_B == 0.0);
}

TEST_CASE("terminal value near a tiny zero") {
    // z_B ~ 0.006 at alpha_B = 0.15; the closed-form terminal value is z w (e - 1) / (e w - z).
    const auto spec = qg(1.2, 0.15);
    const auto t = predict(spec);
    const double z = oracle_z(0.15);
    CHECK(*t.z_B == doctest::Approx(z).epsilon(1e-10));
    CHECK(*t.g_B_at_kappa_g == doctest::Approx(oracle_terminal(0.15, *t.kappa_g)).epsilon(1e-9));
    CHECK(*t.g_B_at_kappa_g < z);
}
