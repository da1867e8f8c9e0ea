#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "cbp/experiments.hpp"
#include "cbp/theory.hpp"

using namespace cbp;

namespace {

ExperimentPlan plan_of(const std::string& text) { return ExperimentPlan::from_config(KeyValues::parse(text)); }

const char* kSmall =
    "n = 2000\np = 0.005\nr = 2\nregime = q_equals_g\nalpha_R = 1.5\nalpha_B = 0.5\nseed = 4\n"
    "replications = 6\nstatistics = AR_over_q,AB_over_q,AR_over_n,K_over_q\n";

std::string csv(const AggregateResult& res) {
    std::ostringstream out;
    write_summary_csv(out, res);
    write_runs_csv(out, res);
    return out.str();
}

}  // namespace

TEST_CASE("plan parsing") {
    const auto plan = plan_of(std::string(kSmall) + "sweep.alpha_R = 1.5,2\nsweep.n = 2000,3000,4000\n");
    CHECK(plan.replications == 6);
    CHECK(plan.point_count() == 6);
    CHECK(plan.run_count() == 36);
    CHECK(plan.master_seed() == 4);
    const auto v = plan.point_values(1);
    CHECK(v[0].second == 1.5);
    CHECK(v[1].second == 3000);
    const auto cfg = plan.point(4);
    CHECK(cfg.params.n == 3000);
    CHECK(cfg.regime->alpha_R() == 2.0);
    CHECK(cfg.params.a_R == seed_count(2.0, g_critical(3000, 0.005, 2)));
    // canonical text parses back to the same plan
    const auto again = ExperimentPlan::from_config(KeyValues::parse(plan.to_text()));
    CHECK(again.to_text() == plan.to_text());
}

TEST_CASE("plan errors") {
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "sweep.seed = 1,2\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "statistics = nope\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "statistics = eta_T\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "replications = 0\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "mode = stopped\n"), ConfigError);
    CHECK_THROWS_AS(plan_of(std::string(kSmall) + "stop = step:3\n"), ConfigError);
    CHECK_THROWS_AS(plan_of("n = 100\np = 0.05\nr = 2\na_R = 5\na_B = 2\nstatistics = AR_over_q\n"), ConfigError);
    CHECK_NOTHROW(plan_of("n = 100\np = 0.05\nr = 2\na_R = 5\na_B = 2\nstatistics = AR_over_n\n"));
}

TEST_CASE("budget") {
    const auto plan = plan_of(std::string(kSmall) + "sweep.n = 2000,3000\nbudget = 11\n");
    CHECK_THROWS_AS(plan.check_budget(), BudgetExceeded);
    CHECK_THROWS_AS(run_plan(plan, 1), BudgetExceeded);
}

TEST_CASE("single replication leaves the spread undefined") {
    const auto res = run_plan(plan_of("n = 30\np = 0.2\nr = 2\na_R = 3\na_B = 2\nsimulator = exact\n"
                                      "statistics = AR_over_n\n"),
                              1);
    REQUIRE(res.points.size() == 1);
    const auto& s = res.points[0].statistics[0].summary;
    CHECK(s.count == 1);
    CHECK_FALSE(s.std);
    CHECK(csv(res).find(",1,") != std::string::npos);
}

TEST_CASE("counts, theory column and discrepancy") {
    const auto res = run_plan(plan_of(kSmall), 1);
    const auto& pt = res.points.at(0);
    for (const auto& s : pt.statistics) CHECK(s.summary.count == 6);
    const auto theory = theory::predict({Regime::QEqualsG, 2, 1.5, 0.5});
    const auto& ab = pt.statistics[1];
    REQUIRE(ab.theory);
    CHECK(*ab.theory == doctest::Approx(theory.limit_AB_over_q));
    CHECK(*ab.discrepancy == doctest::Approx((ab.summary.mean - *ab.theory) / *ab.theory));
    CHECK_FALSE(pt.statistics[0].theory);  // A_R is of order n here
    CHECK(*pt.statistics[2].theory == 1.0);
}

TEST_CASE("output is reproducible and independent of the thread count") {
    const auto plan = plan_of(std::string(kSmall) + "sweep.alpha_B = 0.3,0.5\n");
    const auto a = csv(run_plan(plan, 1));
    const auto b = csv(run_plan(plan, 1));
    const auto c = csv(run_plan(plan, 3));
    CHECK(a == b);
    CHECK(a == c);
    CHECK(summary_json(run_plan(plan, 2)) == summary_json(run_plan(plan, 1)));
}

TEST_CASE("outputs embed build id, seed and plan") {
    const auto plan = plan_of(kSmall);
    const auto res = run_plan(plan, 1);
    const auto text = csv(res);
    CHECK(text.find("# build_id: " + build_id()) != std::string::npos);
    CHECK(text.find("# master_seed: 4") != std::string::npos);
    CHECK(text.find("#   replications = 6") != std::string::npos);
    const auto json = summary_json(res);
    CHECK(json.find("\"master_seed\": 4") != std::string::npos);
    CHECK(json.find("replications = 6") != std::string::npos);
}

TEST_CASE("mean red count grows with red seeds") {
    const auto res = run_plan(plan_of("n = 3000\np = 0.004\nr = 2\na_B = 10\nseed = 2\nreplications = 40\n"
                                      "statistics = AR_over_n\nsweep.a_R = 20,40,80\n"),
                              1);
    for (std::size_t i = 1; i < res.points.size(); ++i) {
        const auto& prev = res.points[i - 1].statistics[0].summary;
        const auto& cur = res.points[i].statistics[0].summary;
        CHECK(*cur.ci_hi >= *prev.ci_lo);
    }
}

TEST_CASE("timing statistic") {
    const auto plan = plan_of("n = 20000\np = 0.0005\nr = 2\nregime = q_equals_g\nalpha_R = 2\nalpha_B = 0.75\n"
                              "replications = 5\nstatistics = eta_T\nkappa = 0.5\n");
    const auto res = run_plan(plan, 1);
    const auto& s = res.points[0].statistics[0];
    CHECK(s.summary.mean > 0);
    REQUIRE(s.theory);
    CHECK(*s.theory == doctest::Approx(theory::timing_tau({Regime::QEqualsG, 2, 2, 0.75}, 0.5)));
}

TEST_CASE("figure grids are checked against the regime") {
    FigureSpec spec;
    spec.alpha_R = {1.5, 2.0};
    spec.alpha_B = {0.5};
    const auto rows = figure_data(spec, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].theory_limit > rows[1].theory_limit);
    CHECK(rows[0].sim.count == 0);
    spec.alpha_B = {1.2};
    CHECK_THROWS_AS(figure_data(spec, 1), theory::DomainError);
    spec.which = Figure::Fig2;
    spec.alpha_R = {1.1};
    CHECK_THROWS_AS(figure_data(spec, 1), theory::DomainError);
    spec.alpha_R = {2.0};
    CHECK_NOTHROW(figure_data(spec, 1));
}

TEST_CASE("figure row for the reference pair") {
    FigureSpec spec;
    spec.alpha_R = {2.0};
    spec.alpha_B = {0.75};
    spec.n = 20000;
    spec.p = 0.0005;
    spec.replications = 4;
    const auto rows = figure_data(spec, 1);
    CHECK(rows[0].theory_limit == doctest::Approx(0.9527).epsilon(1e-4));
    CHECK(rows[0].sim.count == 4);
    std::ostringstream out;
    write_figure_csv(out, spec, rows);
    CHECK(out.str().find("alpha_R,alpha_B,theory_limit,sim_mean,sim_ci_lo,sim_ci_hi,sim_std,count\n") !=
          std::string::npos);
}

TEST_CASE("suite names and defaults") {
    for (auto s : all_suites()) {
        CHECK(parse_suite(to_string(s)) == s);
        CHECK_FALSE(suite_defaults(s).empty());
    }
    CHECK_THROWS_AS(parse_suite("everything"), ConfigError);
}

TEST_CASE("small couplings suite passes") {
    SuiteOptions opt;
    opt.overrides.set("pairs", "100");
    opt.threads = 1;
    const auto rep = theorem_checks(Suite::Couplings, opt);
    CHECK(rep.passed());
    CHECK(rep.checks.size() == 2);
    CHECK(report_text(rep).find("PASS") != std::string::npos);
}

TEST_CASE("suites reject keys they do not use") {
    SuiteOptions opt;
    opt.overrides.set("pairs", "3");
    CHECK_THROWS_AS(theorem_checks(Suite::Subcritical, opt), ConfigError);
    SuiteOptions bad;
    bad.overrides.set("color", "red");
    CHECK_THROWS_AS(theorem_checks(Suite::Couplings, bad), ConfigError);
}

TEST_CASE("default thread count honours CB_THREADS") {
    CHECK(default_threads() >= 1);
}
