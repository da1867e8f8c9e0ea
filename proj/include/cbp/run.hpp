#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cbp/model.hpp"

namespace cbp {

/// Red activation freezes at a fixed physical time ...
struct StopAtTime {
    double time;
};
/// ... after a fixed number of activations ...
struct StopAtStep {
    std::int64_t step;
};
/// ... or once the non-seed red count reaches a value.
struct StopAtRedCount {
    std::int64_t red;
};
using StopRule = std::variant<StopAtTime, StopAtStep, StopAtRedCount>;

std::string describe(const StopRule& rule);
/// Parses "time:<t>", "step:<k>" or "red:<m>".
StopRule parse_stop_rule(const std::string& text);

enum class ModeKind { Standard, Stopped, Prolonged };
std::string_view to_string(ModeKind kind) noexcept;
ModeKind parse_mode(std::string_view text);

struct RunMode {
    ModeKind kind = ModeKind::Standard;
    std::optional<StopRule> stop;  // set iff kind == Stopped

    static RunMode standard() { return {}; }
    static RunMode stopped(StopRule rule) { return {ModeKind::Stopped, rule}; }
    static RunMode prolonged() { return {ModeKind::Prolonged, std::nullopt}; }
};

struct TrajectoryRecord {
    std::int64_t k;
    double t;
    std::int64_t n_R;
    std::int64_t n_B;
    std::int64_t enabled_R;  // |white and R-suprathreshold| after step k
    std::int64_t enabled_B;
    bool operator==(const TrajectoryRecord&) const = default;
};
using Trajectory = std::vector<TrajectoryRecord>;

/// Per-step view handed to observers. `susceptible_*` count every non-seed node
/// (active or not) meeting the threshold; `q_*` are the signed Q^S counters.
/// Both are absent when the simulator does not track marks on active nodes.
struct StepSnapshot {
    std::int64_t k;
    double t;
    std::optional<NodeId> node;  // simulator-local id of the node activated at step k (absent at k = 0)
    std::optional<Color> color;
    std::int64_t n_R;
    std::int64_t n_B;
    std::int64_t enabled_R;
    std::int64_t enabled_B;
    bool past_termination;  // prolonged phase (k > K*)
    std::optional<std::int64_t> susceptible_R;
    std::optional<std::int64_t> susceptible_B;
    std::optional<std::int64_t> q_R;
    std::optional<std::int64_t> q_B;
};
using StepObserver = std::function<void(const StepSnapshot&)>;

struct FinalResult {
    std::int64_t a_r_star = 0;
    std::int64_t a_b_star = 0;
    std::int64_t k_star = 0;
    double t_k_star = 0.0;
    std::optional<Trajectory> trajectory;
    /// Terminal counts of the prolonged phase (all nodes colored); prolonged mode only.
    std::optional<std::int64_t> prolonged_r;
    std::optional<std::int64_t> prolonged_b;
    /// Requested (step, time) pairs; time is NaN if the step was never reached.
    std::vector<std::pair<std::int64_t, double>> step_times;
};

/// A_R* + A_B* = K* + a_R + a_B, A_S* >= a_S, A_R* + A_B* <= n.
/// Throws std::logic_error naming the first broken relation.
void check_final_invariants(const FinalResult& result, const ModelParams& params);

class MissingTrajectory : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct JumpRecord {
    Color color;
    double wait;            // t_{k+1} - t_k
    std::int64_t enabled;   // enabled count during the wait
};

/// Jump chain and sojourn times up to K*. Throws MissingTrajectory when the
/// run was not recorded at every step.
std::vector<JumpRecord> embedded_chain(const FinalResult& result);

/// CSV with header `k,t,N_R,N_B,enabled_R,enabled_B`, LF line endings.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace cbp
