#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "cbp/chain_sim.hpp"
#include "cbp/exact_sim.hpp"
#include "cbp/stats.hpp"

using namespace cbp;

namespace {

ModelParams random_params(RngStream& rng) {
    ModelParams p;
    p.n = 10 + static_cast<std::int64_t>(rng.uniform_below(290));
    p.r = 2 + static_cast<int>(rng.uniform_below(2));
    p.p = std::min(0.9, (1.0 + 10.0 * rng.uniform()) / static_cast<double>(p.n));
    p.a_R = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(p.n / 4) + 1));
    p.a_B = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(p.n / 4) + 1));
    return p;
}

}  // namespace

TEST_CASE("chain invariants with auditing on random instances") {
    RngStream meta(5, 0);
    for (int i = 0; i < 300; ++i) {
        const auto params = random_params(meta);
        CAPTURE(params.n);
        for (const auto& mode : {RunMode::standard(), RunMode::prolonged(), RunMode::stopped(StopAtStep{4}),
                                 RunMode::stopped(StopAtTime{0.3}), RunMode::stopped(StopAtRedCount{3})})
            for (auto scope : {MarkScope::WhiteOnly, MarkScope::AllNonSeed}) {
                if (mode.kind == ModeKind::Prolonged && scope == MarkScope::WhiteOnly) continue;
                ChainOptions opt;
                opt.audit = true;
                opt.marks = scope;
                RngStream rng(5, stream_id({1, static_cast<std::uint64_t>(i)}));
                const auto res = run_chain(params, std::nullopt, rng, mode, opt);
                CHECK_NOTHROW(check_final_invariants(res, params));
                if (mode.kind == ModeKind::Prolonged) {
                    REQUIRE(res.prolonged_r);
                    CHECK(*res.prolonged_r + *res.prolonged_b == params.n);
                }
            }
    }
}

TEST_CASE("prolonged mode marks every non-seed node") {
    const ModelParams params{200, 0.03, 2, 10, 5, 1};
    RngStream rng(1, 0);
    ChainProcess proc(params, rng, RunMode::prolonged());
    CHECK(proc.mark_scope() == MarkScope::AllNonSeed);
    ChainOptions opt;
    opt.marks = MarkScope::WhiteOnly;
    CHECK_THROWS_AS(ChainProcess(params, rng, RunMode::prolonged(), opt), std::invalid_argument);
    RngStream rng2(1, 0);
    ChainProcess plain(params, rng2, RunMode::standard());
    CHECK(plain.mark_scope() == MarkScope::WhiteOnly);
    CHECK_THROWS_AS(plain.susceptible_counts(), std::logic_error);
    CHECK_THROWS_AS(plain.q_counters(), std::logic_error);
}

TEST_CASE("Q counters stay within their bounds and match the enabled sets before termination") {
    const ModelParams params{500, 0.02, 2, 20, 10, 1};
    for (std::uint64_t s = 0; s < 20; ++s) {
        RngStream rng(9, s);
        ChainOptions opt;
        bool ok = true;
        opt.observer = [&](const StepSnapshot& snap) {
            const auto k = snap.k;
            for (int c = 0; c < 2; ++c) {
                const auto sus = c == 0 ? *snap.susceptible_R : *snap.susceptible_B;
                const auto q = c == 0 ? *snap.q_R : *snap.q_B;
                ok &= sus - k <= q && q <= sus;
            }
            if (!snap.past_termination) {
                ok &= *snap.q_R == snap.enabled_R;
                ok &= *snap.q_B == snap.enabled_B;
            }
        };
        ChainProcess proc(params, rng, RunMode::prolonged(), opt);
        proc.run();
        CHECK(ok);
    }
}

TEST_CASE("next color follows the enabled counts") {
    const ModelParams params{2000, 0.004, 2, 60, 40, 1};
    RngStream rng(2, 2);
    ChainProcess proc(params, rng, RunMode::standard());
    double dev = 0, var = 0;
    int steps = 0;
    while (!proc.finished()) {
        const double pr = proc.next_red_probability();
        CHECK(pr == doctest::Approx(static_cast<double>(proc.supra_count(Color::Red)) /
                                    static_cast<double>(proc.supra_count(Color::Red) + proc.supra_count(Color::Black))));
        const auto ev = proc.step();
        if (!ev) break;
        dev += (ev->color == Color::Red ? 1.0 : 0.0) - pr;
        var += pr * (1 - pr);
        ++steps;
    }
    CHECK(steps > 0);
    CHECK(std::abs(dev) <= 4.5 * std::sqrt(std::max(var, 1.0)));
}

TEST_CASE("initial marks are binomial") {
    const ModelParams params{20000, 5e-4, 2, 600, 300, 1};
    RngStream rng(3, 3);
    ChainProcess proc(params, rng, RunMode::standard());
    std::vector<std::int64_t> hist(params.a_R + 1, 0);
    for (NodeId v = 0; v < params.n_white(); ++v) ++hist[static_cast<std::size_t>(proc.marks(Color::Red, v))];
    CHECK(stats::chi_square_gof(hist, stats::binomial_pmf(params.a_R, params.p)).p_value > 1e-4);
}

TEST_CASE("chain runs are deterministic") {
    const ModelParams params{5000, 0.002, 2, 80, 40, 1};
    ChainOptions opt;
    opt.record_trajectory = true;
    RngStream a(4, 1), b(4, 1);
    const auto x = run_chain(params, std::nullopt, a, RunMode::standard(), opt);
    const auto y = run_chain(params, std::nullopt, b, RunMode::standard(), opt);
    CHECK(x.a_r_star == y.a_r_star);
    CHECK(x.t_k_star == y.t_k_star);
    CHECK(*x.trajectory == *y.trajectory);
}

TEST_CASE("trajectory thinning keeps the first and terminal records") {
    const ModelParams params{5000, 0.002, 2, 80, 40, 1};
    ChainOptions opt;
    opt.record_trajectory = true;
    opt.record_every = 7;
    RngStream rng(4, 2);
    const auto res = run_chain(params, std::nullopt, rng, RunMode::standard(), opt);
    const auto& tr = *res.trajectory;
    REQUIRE(tr.size() >= 2);
    CHECK(tr.front().k == 0);
    CHECK(tr.back().k == res.k_star);
    for (std::size_t i = 1; i + 1 < tr.size(); ++i) CHECK(tr[i].k % 7 == 0);
    CHECK_THROWS_AS(embedded_chain(res), MissingTrajectory);
}

TEST_CASE("stop rules in the chain") {
    const ModelParams params{3000, 0.003, 2, 60, 20, 1};
    for (std::uint64_t s = 0; s < 20; ++s) {
        RngStream a(6, s), b(6, s);
        const auto none = run_chain(params, std::nullopt, a, RunMode::stopped(StopAtStep{0}));
        CHECK(none.a_r_star == params.a_R);
        const auto capped = run_chain(params, std::nullopt, b, RunMode::stopped(StopAtRedCount{10}));
        CHECK(capped.a_r_star - params.a_R <= 10);
    }
}

TEST_CASE("requested step times") {
    const ModelParams params{5000, 0.002, 2, 80, 40, 1};
    ChainOptions opt;
    opt.step_times = {1, 10, 1000000};
    RngStream rng(7, 7);
    const auto res = run_chain(params, std::nullopt, rng, RunMode::standard(), opt);
    REQUIRE(res.step_times.size() == 3);
    CHECK(res.step_times[0].second > 0);
    CHECK(res.step_times[1].second >= res.step_times[0].second);
    CHECK(std::isnan(res.step_times[2].second));
}

TEST_CASE("chain and exact simulators agree in law on a small instance") {
    const ModelParams params{6, 0.5, 2, 2, 1, 1};
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> exact, chain;
    double t_exact = 0, t_chain = 0;
    const int runs = 40000;
    for (int i = 0; i < runs; ++i) {
        RngStream a(21, stream_id({0, static_cast<std::uint64_t>(i)}));
        RngStream b(21, stream_id({1, static_cast<std::uint64_t>(i)}));
        const auto x = run_exact(params, a, RunMode::standard());
        const auto y = run_chain(params, std::nullopt, b, RunMode::standard());
        ++exact[{x.a_r_star, x.a_b_star}];
        ++chain[{y.a_r_star, y.a_b_star}];
        t_exact += x.t_k_star;
        t_chain += y.t_k_star;
    }
    CHECK(stats::tv_distance(exact, chain) < 0.02);
    CHECK(t_chain / runs == doctest::Approx(t_exact / runs).epsilon(0.03));
}
