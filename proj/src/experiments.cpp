#include "cbp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cbp/chain_sim.hpp"
#include "cbp/exact_sim.hpp"
#include "cbp/theory.hpp"

#ifndef CBP_BUILD_ID
#define CBP_BUILD_ID "unknown"
#endif

namespace cbp {

namespace {

using json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x, int digits = 12) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::string opt_field(const std::optional<double>& x) { return x && std::isfinite(*x) ? fmt(*x) : std::string(); }

json opt_json(const std::optional<double>& x) { return x && std::isfinite(*x) ? json(*x) : json(nullptr); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
    }
    return out;
}

/// Runs body(i) for i in [0, count) on a pool; the first exception is rethrown.
template <class F>
void parallel_for(std::int64_t count, unsigned threads, F&& body) {
    if (threads == 0) threads = default_threads();
    if (count <= 0) return;
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, count));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

const std::set<std::string>& sweepable() {
    static const std::set<std::string> keys = {"n", "p", "r", "a_R", "a_B", "alpha_R", "alpha_B", "q"};
    return keys;
}

bool needs_regime(const std::string& stat) { return stat != "AR_over_n" && stat != "AB_over_n"; }

void preamble(std::ostream& out, const std::string& build, std::uint64_t seed, const std::string& plan) {
    out << "# build_id: " << build << "\n# master_seed: " << seed << "\n# seed_rounding: " << kSeedRounding
        << "\n# plan:\n";
    std::istringstream in(plan);
    std::string line;
    while (std::getline(in, line)) out << "#   " << line << "\n";
}

struct PointTheory {
    std::optional<theory::TheoryPrediction> pred;
    std::optional<double> tau;
};

PointTheory point_theory(const ModelConfig& cfg, const std::optional<double>& kappa) {
    PointTheory out;
    if (!cfg.regime) return out;
    const theory::BetaSpec spec{cfg.regime->regime(), cfg.params.r, cfg.regime->alpha_R(), cfg.regime->alpha_B()};
    try {
        out.pred = theory::predict(spec, cfg.params.n, cfg.params.p, cfg.regime->q());
        if (kappa) out.tau = theory::timing_tau(spec, *kappa);
    } catch (const theory::DomainError&) {
    }
    return out;
}

std::optional<double> theory_value(const std::string& stat, const PointTheory& th) {
    if (stat == "eta_T") return th.tau;
    if (!th.pred) return std::nullopt;
    const auto& p = *th.pred;
    const bool q_scale = p.ar_scale == "q";
    if (stat == "AR_over_q") return q_scale ? std::optional<double>(p.limit_AR_over_scale) : std::nullopt;
    if (stat == "AR_over_n") return q_scale ? 0.0 : 1.0;
    if (stat == "AB_over_q") return std::isfinite(p.limit_AB_over_q) ? std::optional<double>(p.limit_AB_over_q) : std::nullopt;
    if (stat == "AB_over_n") return 0.0;
    if (stat == "K_over_q" && q_scale) return p.limit_AR_over_scale + p.limit_AB_over_q - p.alpha_R - p.alpha_B;
    return std::nullopt;
}

double statistic_value(const std::string& stat, const RunRecord& rec, const ModelConfig& cfg, double eta) {
    const double n = static_cast<double>(cfg.params.n);
    const double q = cfg.regime ? cfg.regime->q() : kNaN;
    if (stat == "AR_over_q") return static_cast<double>(rec.a_r_star) / q;
    if (stat == "AB_over_q") return static_cast<double>(rec.a_b_star) / q;
    if (stat == "AR_over_n") return static_cast<double>(rec.a_r_star) / n;
    if (stat == "AB_over_n") return static_cast<double>(rec.a_b_star) / n;
    if (stat == "K_over_q") return static_cast<double>(rec.k_star) / q;
    if (stat == "eta_T") {
        if (std::isnan(rec.t_at_step))
            throw std::runtime_error("run " + std::to_string(rec.replication) + " at point " +
                                     std::to_string(rec.point) + " terminated before the timing step");
        return eta * rec.t_at_step;
    }
    throw std::logic_error("unknown statistic " + stat);
}

std::optional<std::int64_t> timing_step(const ExperimentPlan& plan, const ModelConfig& cfg) {
    if (std::find(plan.statistics.begin(), plan.statistics.end(), "eta_T") == plan.statistics.end())
        return std::nullopt;
    return static_cast<std::int64_t>(std::floor(*plan.kappa * cfg.regime->q()));
}

}  // namespace

std::string_view to_string(Simulator s) noexcept { return s == Simulator::Exact ? "exact" : "chain"; }

Simulator parse_simulator(std::string_view text) {
    if (text == "exact") return Simulator::Exact;
    if (text == "chain") return Simulator::Chain;
    throw ConfigError("unknown simulator '" + std::string(text) + "' (exact or chain)");
}

std::string build_id() { return CBP_BUILD_ID; }

unsigned default_threads() {
    if (const char* env = std::getenv("CB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

const std::vector<std::string>& known_statistics() {
    static const std::vector<std::string> names = {"AR_over_q", "AB_over_q", "AR_over_n",
                                                   "AB_over_n", "K_over_q",  "eta_T"};
    return names;
}

const std::set<std::string>& plan_keys() {
    static const std::set<std::string> keys = {"replications", "simulator", "mode",  "stop",
                                               "statistics",   "kappa",     "budget"};
    return keys;
}

ExperimentPlan ExperimentPlan::from_config(const KeyValues& kv) {
    std::set<std::string> allowed = model_keys();
    allowed.insert(plan_keys().begin(), plan_keys().end());
    kv.require_known(allowed, {"sweep."});

    ExperimentPlan plan;
    for (const auto& [k, v] : kv.entries()) {
        if (model_keys().count(k)) {
            plan.base.set(k, v);
        } else if (k.rfind("sweep.", 0) == 0) {
            const auto name = k.substr(6);
            if (!sweepable().count(name)) throw ConfigError("cannot sweep '" + name + "'");
            plan.sweep.emplace_back(name, parse_real_list(k, v));
        }
    }
    if (auto v = kv.get("replications")) plan.replications = parse_int("replications", *v);
    if (plan.replications < 1) throw ConfigError("replications must be at least 1");
    if (auto v = kv.get("simulator")) plan.simulator = parse_simulator(*v);
    if (auto v = kv.get("mode")) plan.mode.kind = parse_mode(*v);
    if (auto v = kv.get("stop")) {
        if (plan.mode.kind != ModeKind::Stopped) throw ConfigError("'stop' requires mode = stopped");
        plan.mode.stop = parse_stop_rule(*v);
    }
    if (plan.mode.kind == ModeKind::Stopped && !plan.mode.stop) throw ConfigError("mode = stopped needs a 'stop' rule");
    if (auto v = kv.get("statistics")) {
        plan.statistics = split_list(*v);
        if (plan.statistics.empty()) throw ConfigError("empty statistics list");
        for (const auto& s : plan.statistics)
            if (std::find(known_statistics().begin(), known_statistics().end(), s) == known_statistics().end())
                throw ConfigError("unknown statistic '" + s + "'");
    }
    if (auto v = kv.get("kappa")) plan.kappa = parse_real("kappa", *v);
    if (auto v = kv.get("budget")) plan.budget = parse_int("budget", *v);
    if (plan.budget < 1) throw ConfigError("budget must be positive");

    const bool timing = std::find(plan.statistics.begin(), plan.statistics.end(), "eta_T") != plan.statistics.end();
    if (timing && !(plan.kappa && *plan.kappa > 0)) throw ConfigError("statistic eta_T needs kappa > 0");
    const auto first = plan.point(0);
    for (const auto& s : plan.statistics)
        if (needs_regime(s) && !first.regime) throw ConfigError("statistic " + s + " needs a regime declaration");
    return plan;
}

std::uint64_t ExperimentPlan::master_seed() const {
    const auto v = base.get("seed");
    return v ? parse_u64("seed", *v) : ModelParams{}.seed;
}

std::int64_t ExperimentPlan::point_count() const {
    std::int64_t count = 1;
    for (const auto& [name, values] : sweep) count *= static_cast<std::int64_t>(values.size());
    return count;
}

void ExperimentPlan::check_budget() const {
    if (run_count() > budget)
        throw BudgetExceeded("plan needs " + std::to_string(run_count()) + " runs, budget is " + std::to_string(budget));
}

std::vector<std::pair<std::string, double>> ExperimentPlan::point_values(std::int64_t s) const {
    if (s < 0 || s >= point_count()) throw std::out_of_range("sweep point index out of range");
    std::vector<std::pair<std::string, double>> out(sweep.size());
    for (std::size_t i = sweep.size(); i-- > 0;) {
        const auto m = static_cast<std::int64_t>(sweep[i].second.size());
        out[i] = {sweep[i].first, sweep[i].second[static_cast<std::size_t>(s % m)]};
        s /= m;
    }
    return out;
}

ModelConfig ExperimentPlan::point(std::int64_t s) const {
    KeyValues kv = base;
    for (const auto& [name, value] : point_values(s)) kv.set(name, fmt(value, 17));
    auto cfg = model_from_config(kv);
    try {
        validate(cfg.params);
    } catch (const HardInvariantViolation& e) {
        throw ConfigError(std::string("sweep point ") + std::to_string(s) + ": " + e.what());
    }
    return cfg;
}

std::string ExperimentPlan::to_text() const {
    std::ostringstream out;
    out << base.to_text();
    for (const auto& [name, values] : sweep) {
        out << "sweep." << name << " = ";
        for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << fmt(values[i], 17);
        out << "\n";
    }
    out << "replications = " << replications << "\nsimulator = " << to_string(simulator)
        << "\nmode = " << to_string(mode.kind) << "\n";
    if (mode.stop) out << "stop = " << describe(*mode.stop) << "\n";
    out << "statistics = ";
    for (std::size_t i = 0; i < statistics.size(); ++i) out << (i ? "," : "") << statistics[i];
    out << "\n";
    if (kappa) out << "kappa = " << fmt(*kappa, 17) << "\n";
    out << "budget = " << budget << "\n";
    return out.str();
}

RunRecord replicate(const ModelConfig& cfg, Simulator simulator, const RunMode& mode, std::uint64_t master_seed,
                    std::int64_t point, std::int64_t replication, std::optional<std::int64_t> timing_step) {
    RngStream rng(master_seed,
                  stream_id({static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(replication)}));
    FinalResult res;
    if (simulator == Simulator::Exact) {
        ExactOptions opt;
        if (timing_step) opt.step_times = {*timing_step};
        res = run_exact(cfg.params, rng, mode, opt);
    } else {
        ChainOptions opt;
        if (timing_step) opt.step_times = {*timing_step};
        res = run_chain(cfg.params, cfg.regime, rng, mode, opt);
    }
    check_final_invariants(res, cfg.params);
    RunRecord rec{point, replication, res.a_r_star, res.a_b_star, res.k_star, res.t_k_star, kNaN};
    if (timing_step && !res.step_times.empty()) rec.t_at_step = res.step_times.front().second;
    return rec;
}

AggregateResult run_plan(const ExperimentPlan& plan, unsigned threads) {
    plan.check_budget();
    const std::int64_t points = plan.point_count();
    std::vector<ModelConfig> configs;
    configs.reserve(static_cast<std::size_t>(points));
    for (std::int64_t s = 0; s < points; ++s) configs.push_back(plan.point(s));

    const std::uint64_t seed = plan.master_seed();
    std::vector<RunRecord> runs(static_cast<std::size_t>(plan.run_count()));
    parallel_for(plan.run_count(), threads, [&](std::int64_t i) {
        const std::int64_t s = i / plan.replications;
        const auto& cfg = configs[static_cast<std::size_t>(s)];
        runs[static_cast<std::size_t>(i)] =
            replicate(cfg, plan.simulator, plan.mode, seed, s, i % plan.replications, timing_step(plan, cfg));
    });

    AggregateResult out;
    out.build = build_id();
    out.master_seed = seed;
    out.plan_text = plan.to_text();
    for (std::int64_t s = 0; s < points; ++s) {
        const auto& cfg = configs[static_cast<std::size_t>(s)];
        PointResult pr;
        pr.index = s;
        pr.values = plan.point_values(s);
        pr.params = cfg.params;
        pr.regime = cfg.regime;
        const auto th = point_theory(cfg, plan.kappa);
        const double eta = cfg.regime ? theory::eta(cfg.regime->regime(), cfg.params.n, cfg.params.p,
                                                    cfg.regime->q(), cfg.params.r)
                                      : kNaN;
        for (const auto& stat : plan.statistics) {
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(plan.replications));
            for (std::int64_t r = 0; r < plan.replications; ++r)
                values.push_back(statistic_value(stat, runs[static_cast<std::size_t>(s * plan.replications + r)], cfg, eta));
            StatisticResult sr;
            sr.name = stat;
            sr.summary = stats::summarize(values);
            sr.theory = theory_value(stat, th);
            if (sr.theory && *sr.theory != 0) sr.discrepancy = (sr.summary.mean - *sr.theory) / *sr.theory;
            pr.statistics.push_back(std::move(sr));
        }
        out.points.push_back(std::move(pr));
    }
    out.runs = std::move(runs);
    return out;
}

void write_summary_csv(std::ostream& out, const AggregateResult& result) {
    preamble(out, result.build, result.master_seed, result.plan_text);
    out << "point";
    if (!result.points.empty())
        for (const auto& [name, v] : result.points.front().values) out << "," << csv_field(name);
    out << ",n,p,r,a_R,a_B,statistic,count,mean,std,ci_lo,ci_hi,theory,discrepancy\n";
    for (const auto& pt : result.points)
        for (const auto& st : pt.statistics) {
            out << pt.index;
            for (const auto& [name, v] : pt.values) out << "," << fmt(v);
            out << "," << pt.params.n << "," << fmt(pt.params.p) << "," << pt.params.r << "," << pt.params.a_R << ","
                << pt.params.a_B << "," << csv_field(st.name) << "," << st.summary.count << "," << fmt(st.summary.mean)
                << "," << opt_field(st.summary.std) << "," << opt_field(st.summary.ci_lo) << ","
                << opt_field(st.summary.ci_hi) << "," << opt_field(st.theory) << "," << opt_field(st.discrepancy)
                << "\n";
        }
}

void write_runs_csv(std::ostream& out, const AggregateResult& result) {
    preamble(out, result.build, result.master_seed, result.plan_text);
    out << "point,replication,a_r_star,a_b_star,k_star,t_k_star,t_at_step\n";
    for (const auto& r : result.runs)
        out << r.point << "," << r.replication << "," << r.a_r_star << "," << r.a_b_star << "," << r.k_star << ","
            << fmt(r.t_k_star, 17) << "," << (std::isnan(r.t_at_step) ? "" : fmt(r.t_at_step, 17)) << "\n";
}

std::string summary_json(const AggregateResult& result) {
    json j;
    j["build_id"] = result.build;
    j["master_seed"] = result.master_seed;
    j["seed_rounding"] = std::string(kSeedRounding);
    j["plan"] = result.plan_text;
    json pts = json::array();
    for (const auto& pt : result.points) {
        json p;
        p["point"] = pt.index;
        json vals = json::object();
        for (const auto& [name, v] : pt.values) vals[name] = v;
        p["values"] = vals;
        p["params"] = {{"n", pt.params.n}, {"p", pt.params.p}, {"r", pt.params.r},
                       {"a_R", pt.params.a_R}, {"a_B", pt.params.a_B}};
        if (pt.regime)
            p["regime"] = {{"regime", std::string(to_string(pt.regime->regime()))},
                           {"alpha_R", pt.regime->alpha_R()},
                           {"alpha_B", pt.regime->alpha_B()},
                           {"q", pt.regime->q()}};
        json st = json::array();
        for (const auto& s : pt.statistics)
            st.push_back({{"name", s.name},
                          {"count", s.summary.count},
                          {"mean", s.summary.mean},
                          {"std", opt_json(s.summary.std)},
                          {"ci_lo", opt_json(s.summary.ci_lo)},
                          {"ci_hi", opt_json(s.summary.ci_hi)},
                          {"theory", opt_json(s.theory)},
                          {"discrepancy", opt_json(s.discrepancy)}});
        p["statistics"] = st;
        pts.push_back(p);
    }
    j["points"] = pts;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- figures

std::string_view to_string(Figure f) noexcept { return f == Figure::Fig1 ? "fig1" : "fig2"; }

Figure parse_figure(std::string_view text) {
    if (text == "fig1" || text == "1") return Figure::Fig1;
    if (text == "fig2" || text == "2") return Figure::Fig2;
    throw ConfigError("unknown figure '" + std::string(text) + "' (fig1 or fig2)");
}

std::vector<FigureRow> figure_data(const FigureSpec& spec, unsigned threads) {
    if (spec.alpha_R.empty() || spec.alpha_B.empty()) throw theory::DomainError("empty figure grid");
    std::vector<FigureRow> rows;
    std::vector<ModelConfig> configs;
    const double g = g_critical(spec.n, spec.p, 2);
    for (double ab : spec.alpha_B)
        for (double ar : spec.alpha_R) {
            const bool ok = spec.which == Figure::Fig1 ? (ar > 1 && ab < 1 && ab > 0) : (ar > ab && ab > 1);
            if (!ok)
                throw theory::DomainError("grid point (" + fmt(ar) + ", " + fmt(ab) + ") is outside the regime of " +
                                          std::string(to_string(spec.which)));
            FigureRow row;
            row.alpha_R = ar;
            row.alpha_B = ab;
            row.theory_limit = theory::closed_form_r2(ar, ab).limit_AB_over_q;
            rows.push_back(row);
            if (spec.replications > 0) {
                ModelConfig cfg;
                cfg.regime = RegimeSpec(Regime::QEqualsG, ar, ab, g);
                cfg.params = ModelParams{spec.n, spec.p, 2, seed_count(ar, g), seed_count(ab, g), spec.seed};
                validate(cfg.params);
                configs.push_back(cfg);
            }
        }
    if (spec.replications > 0) {
        const auto reps = spec.replications;
        std::vector<double> values(rows.size() * static_cast<std::size_t>(reps));
        parallel_for(static_cast<std::int64_t>(values.size()), threads, [&](std::int64_t i) {
            const std::int64_t s = i / reps;
            const auto rec = replicate(configs[static_cast<std::size_t>(s)], Simulator::Chain, RunMode::standard(),
                                       spec.seed, s, i % reps);
            values[static_cast<std::size_t>(i)] = static_cast<double>(rec.a_b_star) / g;
        });
        for (std::size_t s = 0; s < rows.size(); ++s)
            rows[s].sim = stats::summarize(
                std::span<const double>(values.data() + s * static_cast<std::size_t>(reps), static_cast<std::size_t>(reps)));
    }
    return rows;
}

void write_figure_csv(std::ostream& out, const FigureSpec& spec, const std::vector<FigureRow>& rows) {
    std::ostringstream plan;
    plan << "figure = " << to_string(spec.which) << "\nn = " << spec.n << "\np = " << fmt(spec.p, 17)
         << "\nr = 2\nregime = q_equals_g\nreplications = " << spec.replications << "\n";
    preamble(out, build_id(), spec.seed, plan.str());
    out << "alpha_R,alpha_B,theory_limit,sim_mean,sim_ci_lo,sim_ci_hi,sim_std,count\n";
    for (const auto& r : rows) {
        const bool sim = r.sim.count > 0;
        out << fmt(r.alpha_R) << "," << fmt(r.alpha_B) << "," << fmt(r.theory_limit) << ","
            << (sim ? fmt(r.sim.mean) : "") << "," << opt_field(r.sim.ci_lo) << "," << opt_field(r.sim.ci_hi) << ","
            << opt_field(r.sim.std) << "," << r.sim.count << "\n";
    }
}

// ---------------------------------------------------------------- suites

std::string_view to_string(Suite s) noexcept {
    switch (s) {
        case Suite::Subcritical: return "subcritical";
        case Suite::SupercriticalQG: return "supercritical_qg";
        case Suite::SupercriticalQGG: return "supercritical_qgg";
        case Suite::Timing: return "timing";
        case Suite::BinomialLaw: return "binomial_law";
        case Suite::Couplings: return "couplings";
    }
    return "?";
}

const std::vector<Suite>& all_suites() {
    static const std::vector<Suite> suites = {Suite::Subcritical, Suite::SupercriticalQG, Suite::SupercriticalQGG,
                                              Suite::Timing,      Suite::BinomialLaw,     Suite::Couplings};
    return suites;
}

Suite parse_suite(std::string_view text) {
    for (auto s : all_suites())
        if (text == to_string(s)) return s;
    throw ConfigError("unknown suite '" + std::string(text) +
                      "' (subcritical, supercritical_qg, supercritical_qgg, timing, binomial_law, couplings)");
}

bool SuiteReport::passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string suite_defaults(Suite suite) {
    const std::string qg = "n = 100000\np = 0.0001\nr = 2\nregime = q_equals_g\nseed = 1\n";
    switch (suite) {
        case Suite::Subcritical: return qg + "alpha_R = 0.8\nalpha_B = 0.5\nreplications = 200\n";
        case Suite::SupercriticalQG: return qg + "alpha_R = 2\nalpha_B = 0.75\nreplications = 200\n";
        case Suite::Timing: return qg + "alpha_R = 2\nalpha_B = 0.75\nreplications = 200\nkappa = 1\n";
        case Suite::SupercriticalQGG:
            return "n = 100000\np = 0.0001\nr = 2\nregime = g_lt_q_lt_pinv\nq = 2000\nalpha_R = 1.5\nalpha_B = 1\n"
                   "seed = 1\nreplications = 100\n";
        case Suite::BinomialLaw:
            return "n = 500\np = 0.02\nr = 2\na_R = 20\na_B = 10\nseed = 1\nreplications = 40000\nsteps = 10,40,120\n";
        case Suite::Couplings: return "seed = 1\npairs = 1000\nn_max = 300\n";
    }
    return {};
}

namespace {

KeyValues suite_config(Suite suite, const KeyValues& overrides) {
    KeyValues kv = KeyValues::parse(suite_defaults(suite), std::string(to_string(suite)) + " defaults");
    for (const auto& [k, v] : overrides.entries()) kv.set(k, v);
    std::set<std::string> allowed = model_keys();
    allowed.insert({"replications", "kappa", "steps", "pairs", "n_max"});
    kv.require_known(allowed);
    return kv;
}

CheckResult rel_check(std::string name, double measured, double target, double tol, std::string note = {}) {
    return {std::move(name), measured, target, "rel", tol, std::abs(measured - target) <= tol * std::abs(target),
            std::move(note)};
}

CheckResult bound_check(std::string name, double measured, std::string rel, double bound, std::string note = {}) {
    const bool ok = rel == ">=" ? measured >= bound : measured <= bound;
    return {std::move(name), measured, bound, std::move(rel), 0.0, ok, std::move(note)};
}

/// Plan over one point with the suite's statistics.
AggregateResult suite_plan(KeyValues kv, const std::string& statistics, unsigned threads) {
    kv.set("statistics", statistics);
    kv.set("simulator", "chain");
    for (const char* k : {"steps", "pairs", "n_max"})
        if (kv.has(k)) throw ConfigError(std::string("key '") + k + "' does not apply to this suite");
    return run_plan(ExperimentPlan::from_config(kv), threads);
}

const StatisticResult& stat(const AggregateResult& res, const std::string& name) {
    for (const auto& s : res.points.front().statistics)
        if (s.name == name) return s;
    throw std::logic_error("missing statistic " + name);
}

std::string ci_note(const StatisticResult& s) {
    return "n_runs=" + std::to_string(s.summary.count) + " ci=[" + opt_field(s.summary.ci_lo) + ", " +
           opt_field(s.summary.ci_hi) + "]";
}

void binomial_law(const KeyValues& kv, unsigned threads, SuiteReport& report) {
    KeyValues model;
    for (const auto& [k, v] : kv.entries())
        if (model_keys().count(k)) model.set(k, v);
    const auto cfg = model_from_config(model);
    validate(cfg.params);
    const auto reps = parse_int("replications", kv.get("replications").value_or("1"));
    std::vector<std::int64_t> steps;
    for (double s : parse_real_list("steps", kv.get("steps").value_or("")))
        steps.push_back(static_cast<std::int64_t>(s));
    const std::int64_t n_w = cfg.params.n_white();
    for (auto s : steps)
        if (s < 0 || s > n_w) throw ConfigError("steps must lie in [0, n - a_R - a_B]");

    // Per replication and step: N_R, N_B, |S_R|, |S_B|.
    const std::size_t m = steps.size();
    std::vector<std::array<std::int64_t, 4>> rows(static_cast<std::size_t>(reps) * m);
    parallel_for(reps, threads, [&](std::int64_t rep) {
        RngStream rng(cfg.params.seed, stream_id({0, static_cast<std::uint64_t>(rep)}));
        ChainOptions opt;
        opt.observer = [&](const StepSnapshot& snap) {
            for (std::size_t i = 0; i < m; ++i)
                if (snap.k == steps[i])
                    rows[static_cast<std::size_t>(rep) * m + i] = {snap.n_R, snap.n_B, *snap.susceptible_R,
                                                                   *snap.susceptible_B};
        };
        ChainProcess proc(cfg.params, rng, RunMode::prolonged(), opt);
        proc.run();
    });

    for (std::size_t i = 0; i < m; ++i) {
        std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
        for (std::int64_t rep = 0; rep < reps; ++rep) {
            const auto& row = rows[static_cast<std::size_t>(rep) * m + i];
            ++cells[{row[0], row[1]}];
        }
        const auto modal = std::max_element(cells.begin(), cells.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; })->first;
        for (Color c : {Color::Red, Color::Black}) {
            std::vector<std::int64_t> hist(static_cast<std::size_t>(n_w) + 1, 0);
            for (std::int64_t rep = 0; rep < reps; ++rep) {
                const auto& row = rows[static_cast<std::size_t>(rep) * m + i];
                if (row[0] == modal.first && row[1] == modal.second) ++hist[static_cast<std::size_t>(row[2 + idx(c)])];
            }
            const double pi = theory::pi_S(cfg.params, c, modal.first, modal.second);
            const auto pmf = stats::binomial_pmf(n_w, pi);
            const auto t = stats::chi_square_gof(hist, pmf);
            const std::string name = "k=" + std::to_string(steps[i]) + " |S_" + to_string(c) + "| given N=(" +
                                     std::to_string(modal.first) + "," + std::to_string(modal.second) + ")";
            report.checks.push_back({name, t.p_value, 0.001, "p>", 0.0, t.p_value > 0.001,
                                     "chi2=" + fmt(t.statistic, 6) + " dof=" + fmt(t.dof, 4) + " conditioned_runs=" +
                                         std::to_string(cells[modal]) + " pi=" + fmt(pi, 6)});
        }
    }
}

void couplings(const KeyValues& kv, unsigned threads, SuiteReport& report) {
    const auto seed = parse_u64("seed", kv.get("seed").value_or("1"));
    const auto pairs = parse_int("pairs", kv.get("pairs").value_or("1000"));
    const auto n_max = parse_int("n_max", kv.get("n_max").value_or("300"));
    if (pairs < 1 || n_max < 20) throw ConfigError("couplings needs pairs >= 1 and n_max >= 20");
    std::vector<std::array<bool, 2>> ok(static_cast<std::size_t>(pairs));
    parallel_for(pairs, threads, [&](std::int64_t i) {
        RngStream rng(seed, stream_id({static_cast<std::uint64_t>(i)}));
        const auto n = 20 + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n_max - 19)));
        const int r = 2 + static_cast<int>(rng.uniform_below(2));
        const double p = std::min(0.9, (1.0 + 11.0 * rng.uniform()) / static_cast<double>(n));
        auto draw = [&](std::int64_t hi) { return static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(hi) + 1)); };
        const auto a_R1 = draw(n / 5), a_B2 = draw(n / 5);
        const auto a_R2 = a_R1 + draw(n / 10), a_B1 = a_B2 + draw(n / 10);
        const auto graph = generate_graph(n, p, rng);
        const auto [s1, s2] = make_nested_seeds(n, a_R1, a_B1, a_R2, a_B2, rng);
        const ExactKeys keys{rng.next_u64(), rng.next_u64()};
        const auto r1 = run_exact(graph, s1, r, keys, RunMode::standard());
        const auto r2 = run_exact(graph, s2, r, keys, RunMode::standard());
        ok[static_cast<std::size_t>(i)][0] = r1.a_r_star <= r2.a_r_star && r2.a_b_star <= r1.a_b_star;

        StopRule rule;
        switch (rng.uniform_below(3)) {
            case 0: rule = StopAtTime{rng.uniform() * r1.t_k_star}; break;
            case 1: rule = StopAtStep{draw(r1.k_star)}; break;
            default: rule = StopAtRedCount{draw(r1.a_r_star - a_R1)}; break;
        }
        const auto st = run_exact(graph, s1, r, keys, RunMode::stopped(rule));
        ok[static_cast<std::size_t>(i)][1] = st.a_b_star >= r1.a_b_star && st.a_r_star <= r1.a_r_star;
    });
    for (int j = 0; j < 2; ++j) {
        const auto held = std::count_if(ok.begin(), ok.end(), [j](const auto& o) { return o[static_cast<std::size_t>(j)]; });
        const double frac = static_cast<double>(held) / static_cast<double>(pairs);
        report.checks.push_back(bound_check(j == 0 ? "nested seeds: A_R1 <= A_R2 and A_B2 <= A_B1"
                                                   : "stopped red: A_B(stopped) >= A_B and A_R(stopped) <= A_R",
                                            frac, ">=", 1.0,
                                            std::to_string(held) + " of " + std::to_string(pairs) + " pairs"));
    }
}

}  // namespace

SuiteReport theorem_checks(Suite suite, const SuiteOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    SuiteReport report;
    report.suite = suite;
    const KeyValues kv = suite_config(suite, options.overrides);
    report.instance = kv.to_text();
    switch (suite) {
        case Suite::Subcritical: {
            const auto res = suite_plan(kv, "AR_over_q,AB_over_q", options.threads);
            for (const char* name : {"AR_over_q", "AB_over_q"}) {
                const auto& s = stat(res, name);
                if (!s.theory) throw theory::DomainError("instance has no subcritical limit for " + std::string(name));
                report.checks.push_back(rel_check(std::string("mean ") + name, s.summary.mean, *s.theory, 0.10, ci_note(s)));
            }
            break;
        }
        case Suite::SupercriticalQG: {
            const auto res = suite_plan(kv, "AR_over_n,AB_over_q", options.threads);
            const auto& ar = stat(res, "AR_over_n");
            const auto& ab = stat(res, "AB_over_q");
            report.checks.push_back(bound_check("mean AR_over_n", ar.summary.mean, ">=", 0.99, ci_note(ar)));
            if (!ab.theory) throw theory::DomainError("instance has no black limit");
            report.checks.push_back(rel_check("mean AB_over_q", ab.summary.mean, *ab.theory, 0.15, ci_note(ab)));
            break;
        }
        case Suite::SupercriticalQGG: {
            const auto res = suite_plan(kv, "AR_over_n,AB_over_n", options.threads);
            const auto& ar = stat(res, "AR_over_n");
            const auto& ab = stat(res, "AB_over_n");
            report.checks.push_back(bound_check("mean AR_over_n", ar.summary.mean, ">=", 0.99, ci_note(ar)));
            report.checks.push_back(bound_check("mean AB_over_n", ab.summary.mean, "<=", 0.05, ci_note(ab)));
            break;
        }
        case Suite::Timing: {
            if (!kv.has("kappa")) throw ConfigError("timing suite needs kappa");
            const auto res = suite_plan(kv, "eta_T", options.threads);
            const auto& s = stat(res, "eta_T");
            if (!s.theory) throw theory::DomainError("kappa lies outside the timing domain");
            report.checks.push_back(rel_check("mean eta_T", s.summary.mean, *s.theory, 0.15, ci_note(s)));
            break;
        }
        case Suite::BinomialLaw: binomial_law(kv, options.threads, report); break;
        case Suite::Couplings: couplings(kv, options.threads, report); break;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string report_text(const SuiteReport& report) {
    std::ostringstream out;
    out << "suite " << to_string(report.suite) << ": " << (report.passed() ? "PASS" : "FAIL") << " ("
        << fmt(report.seconds, 3) << " s)\n";
    for (const auto& c : report.checks) {
        out << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << ": measured " << fmt(c.measured, 6);
        if (c.relation == "rel")
            out << ", target " << fmt(c.target, 6) << " within " << fmt(100 * c.tolerance, 3) << "%";
        else
            out << ", required " << c.relation << " " << fmt(c.target, 6);
        if (!c.note.empty()) out << " [" << c.note << "]";
        out << "\n";
    }
    return out.str();
}

std::string report_json(const std::vector<SuiteReport>& reports) {
    json j;
    j["build_id"] = build_id();
    json arr = json::array();
    for (const auto& r : reports) {
        json checks = json::array();
        for (const auto& c : r.checks)
            checks.push_back({{"name", c.name},
                              {"measured", c.measured},
                              {"target", c.target},
                              {"relation", c.relation},
                              {"tolerance", c.tolerance},
                              {"passed", c.passed},
                              {"note", c.note}});
        arr.push_back({{"suite", std::string(to_string(r.suite))},
                       {"passed", r.passed()},
                       {"seconds", r.seconds},
                       {"instance", r.instance},
                       {"checks", checks}});
    }
    j["suites"] = arr;
    j["passed"] = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed(); });
    return j.dump(2) + "\n";
}

double joint_law_tv(const ModelParams& params, std::int64_t runs, unsigned threads) {
    if (runs < 1) throw std::invalid_argument("runs must be positive");
    validate(params);
    ModelConfig cfg;
    cfg.params = params;
    std::vector<std::pair<std::int64_t, std::int64_t>> out(static_cast<std::size_t>(2 * runs));
    parallel_for(2 * runs, threads, [&](std::int64_t i) {
        const auto sim = i < runs ? Simulator::Exact : Simulator::Chain;
        const auto rec = replicate(cfg, sim, RunMode::standard(), params.seed, i < runs ? 0 : 1, i % runs);
        out[static_cast<std::size_t>(i)] = {rec.a_r_star, rec.a_b_star};
    });
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> a, b;
    for (std::int64_t i = 0; i < 2 * runs; ++i) ++(i < runs ? a : b)[out[static_cast<std::size_t>(i)]];
    return stats::tv_distance(a, b);
}

}  // namespace cbp
