#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbp/config.hpp"
#include "cbp/model.hpp"
#include "cbp/run.hpp"
#include "cbp/stats.hpp"

namespace cbp {

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Simulator { Exact, Chain };
std::string_view to_string(Simulator s) noexcept;
Simulator parse_simulator(std::string_view text);

inline constexpr std::int64_t kDefaultRunBudget = 1'000'000;

/// git-describe style identifier baked in at configure time.
std::string build_id();

/// Worker count: CB_THREADS when set to a positive integer, otherwise the number
/// of logical cores (at least 1).
unsigned default_threads();

/// Statistics a plan can request:
///   AR_over_q, AB_over_q, AR_over_n, AB_over_n, K_over_q, eta_T (eta * T_floor(kappa q)).
const std::vector<std::string>& known_statistics();

/// Keys accepted in a plan file besides `sweep.<param>`.
const std::set<std::string>& plan_keys();

struct ExperimentPlan {
    KeyValues base;  // model keys of the base instance (seed = master seed)
    std::vector<std::pair<std::string, std::vector<double>>> sweep;
    std::int64_t replications = 1;
    Simulator simulator = Simulator::Chain;
    RunMode mode;
    std::vector<std::string> statistics{"AR_over_q", "AB_over_q"};
    std::optional<double> kappa;  // required by eta_T
    std::int64_t budget = kDefaultRunBudget;

    /// Parses a plan file: model keys, `replications`, `simulator`, `mode`, `stop`,
    /// `statistics` (comma separated), `kappa`, `budget` and `sweep.<param> = v1,v2,...`.
    /// Throws ConfigError on unknown keys or unusable combinations.
    static ExperimentPlan from_config(const KeyValues& kv);

    std::uint64_t master_seed() const;
    std::int64_t point_count() const;
    std::int64_t run_count() const { return point_count() * replications; }
    /// Throws BudgetExceeded when replications * points exceeds the budget.
    void check_budget() const;
    /// Swept values of point s; the last sweep parameter varies fastest.
    std::vector<std::pair<std::string, double>> point_values(std::int64_t s) const;
    /// Resolved instance of point s.
    ModelConfig point(std::int64_t s) const;
    /// Canonical plan text (round-trips through from_config).
    std::string to_text() const;
};

/// Immutable per-run record emitted by a worker.
struct RunRecord {
    std::int64_t point = 0;
    std::int64_t replication = 0;
    std::int64_t a_r_star = 0;
    std::int64_t a_b_star = 0;
    std::int64_t k_star = 0;
    double t_k_star = 0.0;
    double t_at_step = 0.0;  // activation time of the timing step, NaN when not requested or not reached
};

struct StatisticResult {
    std::string name;
    stats::Summary summary;
    std::optional<double> theory;
    std::optional<double> discrepancy;  // (mean - theory) / theory
};

struct PointResult {
    std::int64_t index = 0;
    std::vector<std::pair<std::string, double>> values;
    ModelParams params;
    std::optional<RegimeSpec> regime;
    std::vector<StatisticResult> statistics;
};

struct AggregateResult {
    std::string build;
    std::uint64_t master_seed = 0;
    std::string plan_text;
    std::vector<PointResult> points;
    std::vector<RunRecord> runs;  // ordered by (point, replication)
};

/// One replication at a resolved instance, on stream stream_id({point, replication}).
RunRecord replicate(const ModelConfig& cfg, Simulator simulator, const RunMode& mode, std::uint64_t master_seed,
                    std::int64_t point, std::int64_t replication, std::optional<std::int64_t> timing_step = std::nullopt);

/// Runs every (point, replication) on a worker pool and reduces in index order, so
/// the output does not depend on the thread count. threads = 0 uses default_threads().
AggregateResult run_plan(const ExperimentPlan& plan, unsigned threads = 0);

/// Per-point statistics, RFC-4180 with a `#` metadata preamble.
void write_summary_csv(std::ostream& out, const AggregateResult& result);
/// Raw run records with the same preamble.
void write_runs_csv(std::ostream& out, const AggregateResult& result);
/// JSON summary: build id, master seed, plan and per-point statistics.
std::string summary_json(const AggregateResult& result);

enum class Figure { Fig1, Fig2 };
std::string_view to_string(Figure f) noexcept;
Figure parse_figure(std::string_view text);

struct FigureSpec {
    Figure which = Figure::Fig1;
    std::vector<double> alpha_R;
    std::vector<double> alpha_B;
    std::int64_t n = 100000;
    double p = 1e-4;
    std::int64_t replications = 0;  // 0: theory columns only
    std::uint64_t seed = 1;
};

struct FigureRow {
    double alpha_R = 0.0;
    double alpha_B = 0.0;
    double theory_limit = 0.0;
    stats::Summary sim;  // A_B*/g over chain-sim runs at q = g, r = 2
};

/// Throws theory::DomainError when a grid point is outside the figure's regime
/// (alpha_R > 1 > alpha_B for Fig1, alpha_R > alpha_B > 1 for Fig2).
std::vector<FigureRow> figure_data(const FigureSpec& spec, unsigned threads = 0);
void write_figure_csv(std::ostream& out, const FigureSpec& spec, const std::vector<FigureRow>& rows);

enum class Suite { Subcritical, SupercriticalQG, SupercriticalQGG, Timing, BinomialLaw, Couplings };
std::string_view to_string(Suite s) noexcept;
Suite parse_suite(std::string_view text);
const std::vector<Suite>& all_suites();

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double target = 0.0;
    std::string relation;  // "rel", ">=", "<=", "p>"
    double tolerance = 0.0;
    bool passed = false;
    std::string note;
};

struct SuiteReport {
    Suite suite = Suite::Subcritical;
    std::string instance;  // resolved instance as key = value text
    std::vector<CheckResult> checks;
    double seconds = 0.0;
    bool passed() const;
};

struct SuiteOptions {
    /// Keys overriding the suite's default instance (model keys, replications,
    /// kappa, steps, pairs, n_max).
    KeyValues overrides;
    unsigned threads = 0;
};

/// Default instance of a suite as key = value text.
std::string suite_defaults(Suite suite);
SuiteReport theorem_checks(Suite suite, const SuiteOptions& options = {});
std::string report_text(const SuiteReport& report);
std::string report_json(const std::vector<SuiteReport>& reports);

/// Total-variation distance between the empirical joint laws of (A_R*, A_B*) from
/// `runs` exact-sim and `runs` chain-sim replications of one instance.
double joint_law_tv(const ModelParams& params, std::int64_t runs, unsigned threads = 0);

}  // namespace cbp
