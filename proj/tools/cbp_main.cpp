// cbp: command-line front end for the competing bootstrap percolation toolkit.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbp/chain_sim.hpp"
#include "cbp/config.hpp"
#include "cbp/exact_sim.hpp"
#include "cbp/experiments.hpp"
#include "cbp/model.hpp"
#include "cbp/run.hpp"
#include "cbp/theory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

int verbosity = 0;

void log(int level, const std::string& msg) {
    if (verbosity >= level) std::cerr << "cbp: " << msg << "\n";
}

/// Flags shared by every subcommand: config file, overrides and per-key shortcuts.
struct KeyFlags {
    std::string config;
    std::string out;
    CLI::Option* set = nullptr;
    std::map<CLI::Option*, std::string> keys;  // option -> config key

    void attach(CLI::App* app, const std::vector<std::pair<std::string, std::string>>& key_flags) {
        app->add_option("--config", config, "Flat key = value config file")->check(CLI::ExistingFile);
        set = app->add_option("--set", "Override a config key (key=value); repeatable, last wins")
                  ->type_name("KEY=VALUE")
                  ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        for (const auto& [flag, key] : key_flags) {
            auto* o = app->add_option("--" + flag)
                          ->description("Set config key '" + key + "'")
                          ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
            keys[o] = key;
        }
        app->add_option("--out", out, "Output directory (created if missing); all files are written here");
    }

    /// Config file first, then flags in command-line order.
    cbp::KeyValues resolve(const CLI::App* app) const {
        cbp::KeyValues kv = config.empty() ? cbp::KeyValues{} : cbp::KeyValues::load(config);
        std::map<const CLI::Option*, std::size_t> used;
        for (const CLI::Option* o : app->parse_order()) {
            const std::size_t i = used[o]++;
            const auto& res = o->results();
            if (i >= res.size()) continue;
            if (o == set)
                kv.apply_overrides({res[i]});
            else if (auto it = keys.find(const_cast<CLI::Option*>(o)); it != keys.end())
                kv.set(it->second, res[i]);
        }
        return kv;
    }

    /// Output path under --out, creating the directory; nullopt without --out.
    std::optional<fs::path> out_file(const std::string& name) const {
        if (out.empty()) return std::nullopt;
        fs::create_directories(out);
        return fs::path(out) / name;
    }
};

const std::vector<std::pair<std::string, std::string>> kModelFlags = {
    {"n", "n"},         {"p", "p"},             {"r", "r"},             {"a_r", "a_R"}, {"a_b", "a_B"},
    {"seed", "seed"},   {"regime", "regime"},   {"alpha_r", "alpha_R"}, {"alpha_b", "alpha_B"},
    {"q", "q"},
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw cbp::ConfigError("cannot write '" + path.string() + "'");
    f << content;
    log(1, "wrote " + path.string());
}

json params_json(const cbp::ModelParams& p) {
    return {{"n", p.n}, {"p", p.p}, {"r", p.r}, {"a_R", p.a_R}, {"a_B", p.a_B}};
}

json opt(const std::optional<double>& x) { return x && std::isfinite(*x) ? json(*x) : json(nullptr); }

json num(double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : "nan"); }

std::string show(const std::optional<double>& x) {
    if (!x) return "+inf";
    std::ostringstream s;
    s << std::setprecision(10) << *x;
    return s.str();
}

std::string show(double x) { return std::isinf(x) ? "+inf" : show(std::optional<double>(x)); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string simulator;
    std::string mode;
    std::string stop;
    bool trajectory = false;
};

int simulate(const CLI::App* app, const KeyFlags& flags, const SimulateArgs& args) {
    auto kv = flags.resolve(app);
    auto allowed = cbp::model_keys();
    allowed.insert({"simulator", "mode", "stop"});
    kv.require_known(allowed);
    if (!args.simulator.empty()) kv.set("simulator", args.simulator);
    if (!args.mode.empty()) kv.set("mode", args.mode);
    if (!args.stop.empty()) kv.set("stop", args.stop);

    cbp::KeyValues model;
    for (const auto& [k, v] : kv.entries())
        if (cbp::model_keys().count(k)) model.set(k, v);
    const auto cfg = cbp::model_from_config(model);
    const auto report = cbp::validate(cfg.params);
    for (const auto& w : report.warnings) log(1, "warning: " + w);

    const auto simulator = cbp::parse_simulator(kv.get("simulator").value_or("chain"));
    cbp::RunMode mode;
    mode.kind = cbp::parse_mode(kv.get("mode").value_or("standard"));
    if (auto s = kv.get("stop")) {
        if (mode.kind != cbp::ModeKind::Stopped) throw cbp::ConfigError("--stop requires --mode stopped");
        mode.stop = cbp::parse_stop_rule(*s);
    }
    if (mode.kind == cbp::ModeKind::Stopped && !mode.stop) throw cbp::ConfigError("--mode stopped needs --stop");
    if (args.trajectory && flags.out.empty()) throw cbp::ConfigError("--trajectory needs --out");

    cbp::RngStream rng(cfg.params.seed, cbp::stream_id({0, 0}));
    log(1, "running " + std::string(cbp::to_string(simulator)) + " simulator, mode " +
               std::string(cbp::to_string(mode.kind)));
    cbp::FinalResult res;
    if (simulator == cbp::Simulator::Exact) {
        cbp::ExactOptions o;
        o.record_trajectory = args.trajectory;
        res = cbp::run_exact(cfg.params, rng, mode, o);
    } else {
        cbp::ChainOptions o;
        o.record_trajectory = args.trajectory;
        res = cbp::run_chain(cfg.params, cfg.regime, rng, mode, o);
    }
    cbp::check_final_invariants(res, cfg.params);

    json j;
    j["a_r_star"] = res.a_r_star;
    j["a_b_star"] = res.a_b_star;
    j["k_star"] = res.k_star;
    j["t_k_star"] = res.t_k_star;
    if (res.prolonged_r) j["prolonged_r"] = *res.prolonged_r;
    if (res.prolonged_b) j["prolonged_b"] = *res.prolonged_b;
    j["params"] = params_json(cfg.params);
    j["seed"] = cfg.params.seed;
    j["mode"] = std::string(cbp::to_string(mode.kind));
    j["stop_rule"] = mode.stop ? json(cbp::describe(*mode.stop)) : json(nullptr);
    j["simulator"] = std::string(cbp::to_string(simulator));
    if (cfg.regime)
        j["regime"] = {{"regime", std::string(cbp::to_string(cfg.regime->regime()))},
                       {"alpha_R", cfg.regime->alpha_R()},
                       {"alpha_B", cfg.regime->alpha_B()},
                       {"q", cfg.regime->q()}};
    j["seed_rounding"] = std::string(cbp::kSeedRounding);
    j["warnings"] = report.warnings;
    j["build_id"] = cbp::build_id();
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (auto path = flags.out_file("result.json")) write_file(*path, text);
    if (args.trajectory && res.trajectory) {
        std::ostringstream csv;
        cbp::write_trajectory_csv(csv, *res.trajectory);
        write_file(*flags.out_file("trajectory.csv"), csv.str());
    }
    return kExitOk;
}

// ---------------------------------------------------------------- theory

int theory_cmd(const CLI::App* app, const KeyFlags& flags) {
    auto kv = flags.resolve(app);
    kv.require_known(cbp::model_keys());
    auto need = [&](const char* key) {
        auto v = kv.get(key);
        if (!v) throw cbp::ConfigError(std::string("theory needs '") + key + "'");
        return *v;
    };
    cbp::theory::BetaSpec spec;
    spec.regime = cbp::parse_regime(need("regime"));
    spec.r = static_cast<int>(cbp::parse_int("r", kv.get("r").value_or("2")));
    spec.alpha_R = cbp::parse_real("alpha_R", need("alpha_R"));
    spec.alpha_B = cbp::parse_real("alpha_B", need("alpha_B"));
    spec.check();

    std::optional<std::int64_t> n;
    std::optional<double> p, q;
    if (kv.has("n") && kv.has("p")) {
        n = cbp::parse_int("n", *kv.get("n"));
        p = cbp::parse_real("p", *kv.get("p"));
        std::optional<double> given;
        if (auto v = kv.get("q")) given = cbp::parse_real("q", *v);
        try {
            q = cbp::RegimeSpec::for_instance(spec.regime, spec.alpha_R, spec.alpha_B, *n, *p, spec.r, given).q();
        } catch (const cbp::HardInvariantViolation& e) {
            throw cbp::ConfigError(e.what());
        }
    }
    const auto t = cbp::theory::predict(spec, n, p, q);
    const auto row = cbp::theory::table_row(spec);
    const bool explicit_f = spec.regime == cbp::Regime::PInvMuchLessQMuchLessN;

    std::ostringstream out;
    out << "case | parameters | kappa_f | lim f_R | lim f_B | f_R(x) | f_B(x)\n";
    out << row.label << " | " << row.parameters << " (alpha_R=" << spec.alpha_R << ", alpha_B=" << spec.alpha_B
        << ", r=" << spec.r << ") | " << show(row.kappa_f) << " | " << show(row.lim_f_R) << " | " << show(row.lim_f_B)
        << (row.estimated ? " (estimated)" : "") << " | " << (explicit_f ? "x" : "-") << " | "
        << (explicit_f ? "0" : "-") << "\n\n";
    auto line = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
    if (t.z_R) line("z_R", show(t.z_R));
    if (t.z_B) line("z_B", show(t.z_B));
    if (t.w_B) line("w_B", show(t.w_B));
    line("kappa_g", show(t.kappa_g));
    if (t.g_B_at_kappa_g) line("g_B(kappa_g)", show(t.g_B_at_kappa_g));
    line("kappa_f", show(t.kappa_f));
    line("limit_AR_over_" + t.ar_scale, show(t.limit_AR_over_scale));
    line("limit_AB_over_q", show(t.limit_AB_over_q) + (t.lim_f_B_estimated ? " (estimated)" : "") + " [" +
                                t.ab_statement + "]");
    if (t.eta) line("eta", show(t.eta));
    std::cout << out.str();

    if (auto path = flags.out_file("theory.json")) {
        json j;
        j["regime"] = std::string(cbp::to_string(spec.regime));
        j["r"] = spec.r;
        j["alpha_R"] = spec.alpha_R;
        j["alpha_B"] = spec.alpha_B;
        j["z_R"] = opt(t.z_R);
        j["z_B"] = opt(t.z_B);
        j["w_B"] = opt(t.w_B);
        j["kappa_g"] = t.kappa_g ? json(*t.kappa_g) : json("inf");
        j["g_B_at_kappa_g"] = opt(t.g_B_at_kappa_g);
        j["kappa_f"] = t.kappa_f ? json(*t.kappa_f) : json("inf");
        j["lim_f_R"] = num(t.lim_f_R);
        j["lim_f_B"] = num(t.lim_f_B);
        j["lim_f_B_estimated"] = t.lim_f_B_estimated;
        j["limit_AR_over_scale"] = num(t.limit_AR_over_scale);
        j["ar_scale"] = t.ar_scale;
        j["limit_AB_over_q"] = num(t.limit_AB_over_q);
        j["ab_statement"] = t.ab_statement;
        j["eta"] = opt(t.eta);
        // f on a window short of kappa_f, as parallel arrays.
        const double x_max = t.kappa_f ? *t.kappa_f * (1 - 1e-6) : 10.0;
        const auto f = cbp::theory::solve_f(spec, x_max);
        json fx = json::array(), fr = json::array(), fb = json::array();
        for (std::size_t i = 0; i < f.grid.size(); ++i) {
            fx.push_back(f.grid[i]);
            fr.push_back(f.values[i][0]);
            fb.push_back(f.values[i][1]);
        }
        j["f"] = {{"x", fx}, {"f_R", fr}, {"f_B", fb}};
        write_file(*path, j.dump(2) + "\n");
    }
    return kExitOk;
}

// ---------------------------------------------------------------- sweep

int sweep(const CLI::App* app, const KeyFlags& flags) {
    const auto plan = cbp::ExperimentPlan::from_config(flags.resolve(app));
    plan.check_budget();
    log(1, std::to_string(plan.point_count()) + " point(s) x " + std::to_string(plan.replications) +
               " replication(s), " + std::to_string(cbp::default_threads()) + " thread(s)");
    const auto res = cbp::run_plan(plan);
    std::ostringstream summary;
    cbp::write_summary_csv(summary, res);
    std::cout << summary.str();
    if (auto path = flags.out_file("summary.csv")) {
        write_file(*path, summary.str());
        std::ostringstream runs;
        cbp::write_runs_csv(runs, res);
        write_file(*flags.out_file("runs.csv"), runs.str());
        write_file(*flags.out_file("summary.json"), cbp::summary_json(res));
    }
    return kExitOk;
}

// ---------------------------------------------------------------- check

int check(const CLI::App* app, const KeyFlags& flags, const std::vector<std::string>& suites) {
    std::vector<cbp::Suite> chosen;
    for (const auto& s : suites) {
        if (s == "all")
            chosen.insert(chosen.end(), cbp::all_suites().begin(), cbp::all_suites().end());
        else
            chosen.push_back(cbp::parse_suite(s));
    }
    if (chosen.empty()) throw cbp::ConfigError("check needs --suite");
    cbp::SuiteOptions options;
    options.overrides = flags.resolve(app);
    std::vector<cbp::SuiteReport> reports;
    for (auto s : chosen) {
        log(1, "running suite " + std::string(cbp::to_string(s)));
        reports.push_back(cbp::theorem_checks(s, options));
        std::cout << cbp::report_text(reports.back()) << std::flush;
    }
    if (auto path = flags.out_file("check.json")) write_file(*path, cbp::report_json(reports));
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed(); });
    return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- figure

int figure(const CLI::App* app, const KeyFlags& flags, const std::string& which) {
    auto kv = flags.resolve(app);
    kv.require_known({"n", "p", "alpha_R", "alpha_B", "replications", "seed"});
    cbp::FigureSpec spec;
    spec.which = cbp::parse_figure(which);
    const bool fig1 = spec.which == cbp::Figure::Fig1;
    spec.alpha_R = cbp::parse_real_list("alpha_R", kv.get("alpha_R").value_or(fig1 ? "1.3,1.8,2.4,3,3.7" : "2,2.5,3,3.5,4"));
    spec.alpha_B = cbp::parse_real_list("alpha_B", kv.get("alpha_B").value_or(fig1 ? "0.5,0.75" : "1.2,1.5"));
    if (auto v = kv.get("n")) spec.n = cbp::parse_int("n", *v);
    if (auto v = kv.get("p")) spec.p = cbp::parse_real("p", *v);
    spec.replications = cbp::parse_int("replications", kv.get("replications").value_or("100"));
    if (spec.replications < 0) throw cbp::ConfigError("replications must be non-negative");
    if (auto v = kv.get("seed")) spec.seed = cbp::parse_u64("seed", *v);
    const auto rows = cbp::figure_data(spec);
    std::ostringstream csv;
    cbp::write_figure_csv(csv, spec, rows);
    std::cout << csv.str();
    if (auto path = flags.out_file(std::string(cbp::to_string(spec.which)) + ".csv")) write_file(*path, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competing two-color bootstrap percolation on G(n,p): simulation, fluid limits and checks", "cbp"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", verbosity, "Log progress to stderr (repeat for more, up to 3)");
    app.set_version_flag("--version", cbp::build_id());

    KeyFlags sim_flags, th_flags, sw_flags, ck_flags, fig_flags;
    SimulateArgs sim_args;
    std::vector<std::string> suites;
    std::string which = "fig1";

    auto* sim = app.add_subcommand("simulate", "Run one replication and print its final result as JSON");
    sim_flags.attach(sim, kModelFlags);
    sim->add_option("--simulator", sim_args.simulator, "exact (explicit graph) or chain (embedded chain); default chain");
    sim->add_option("--mode", sim_args.mode, "standard, stopped or prolonged; default standard");
    sim->add_option("--stop", sim_args.stop, "Stop rule for --mode stopped: time:<t>, step:<k> or red:<m>");
    sim->add_flag("--trajectory", sim_args.trajectory, "Also write trajectory.csv under --out");

    auto* th = app.add_subcommand("theory", "Print fluid-limit quantities for a regime");
    th_flags.attach(th, kModelFlags);

    auto* sw = app.add_subcommand("sweep", "Run a replicated parameter sweep from a plan file");
    auto sweep_flags = kModelFlags;
    sweep_flags.insert(sweep_flags.end(), {{"replications", "replications"}, {"simulator", "simulator"},
                                           {"mode", "mode"}, {"stop", "stop"}, {"statistics", "statistics"},
                                           {"kappa", "kappa"}, {"budget", "budget"}});
    sw_flags.attach(sw, sweep_flags);

    auto* ck = app.add_subcommand("check", "Run theorem-level check suites; exit 1 if any check fails");
    auto check_flags = kModelFlags;
    check_flags.insert(check_flags.end(), {{"replications", "replications"}, {"kappa", "kappa"}, {"steps", "steps"},
                                           {"pairs", "pairs"}, {"n_max", "n_max"}});
    ck_flags.attach(ck, check_flags);
    ck->add_option("--suite", suites,
                   "subcritical, supercritical_qg, supercritical_qgg, timing, binomial_law, couplings or all")
        ->required();

    auto* fig = app.add_subcommand("figure", "Emit the data behind the A_B*/q versus alpha_R figures");
    fig_flags.attach(fig, {{"n", "n"},
                           {"p", "p"},
                           {"alpha_r", "alpha_R"},
                           {"alpha_b", "alpha_B"},
                           {"replications", "replications"},
                           {"seed", "seed"}});
    fig->add_option("--which", which, "fig1 (alpha_B < 1) or fig2 (alpha_B > 1); default fig1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return simulate(sim, sim_flags, sim_args);
        if (th->parsed()) return theory_cmd(th, th_flags);
        if (sw->parsed()) return sweep(sw, sw_flags);
        if (ck->parsed()) return check(ck, ck_flags, suites);
        if (fig->parsed()) return figure(fig, fig_flags, which);
    } catch (const cbp::ConfigError& e) {
        std::cerr << "cbp: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cbp::HardInvariantViolation& e) {
        std::cerr << "cbp: invalid parameters: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cbp::BudgetExceeded& e) {
        std::cerr << "cbp: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cbp::theory::DomainError& e) {
        std::cerr << "cbp: outside the model's domain: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cbp::CapExceeded& e) {
        std::cerr << "cbp: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "cbp: internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
