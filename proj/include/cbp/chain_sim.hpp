#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cbp/model.hpp"
#include "cbp/rng.hpp"
#include "cbp/run.hpp"

namespace cbp {

/// Which non-seed nodes receive marks when a node activates.
enum class MarkScope {
    /// Only nodes that are still white (the activating node excluded). Enough for
    /// the dynamics up to termination and the cheapest option.
    WhiteOnly,
    /// Every non-seed node, active ones and the activating node included, so that
    /// each D_S^(v) is exactly Bin(N_S + a_S, p) given the counts and |S_S|, Q^S
    /// are exact. Forced in prolonged mode.
    AllNonSeed,
};

struct ChainOptions {
    bool record_trajectory = false;
    /// Record every this many steps (plus step 0 and the terminal step). 0 picks
    /// ceil(q / 100) when a regime is known, else 1.
    std::int64_t record_every = 0;
    /// Scan the supra sets and the Q counters after every step; O(n) per step.
    bool audit = false;
    std::optional<MarkScope> marks;  // default: AllNonSeed in prolonged mode, else WhiteOnly
    StepObserver observer;
    std::vector<std::int64_t> step_times;
};

struct ActivationEvent {
    std::int64_t k;  // index of this activation (1-based)
    Color color;
    NodeId node;     // non-seed local id in [0, n_W)
    double wait;
    double t;
};

/// Embedded-chain simulator. Nodes are exchangeable so only the n_W non-seed
/// nodes are represented; seeds enter through their counts a_R, a_B.
class ChainProcess {
public:
    ChainProcess(const ModelParams& params, RngStream& rng, const RunMode& mode, const ChainOptions& options = {},
                 std::optional<double> q = std::nullopt);

    /// Performs one activation. Returns nullopt once the run is over: at K* in
    /// standard and stopped modes, when every node is colored in prolonged mode.
    std::optional<ActivationEvent> step();
    FinalResult run();

    bool finished() const noexcept { return phase_ == Phase::Done; }
    bool past_termination() const noexcept { return phase_ == Phase::Prolonged || (finished() && k_ > k_star_); }
    std::int64_t k() const noexcept { return k_; }
    double t() const noexcept { return t_; }
    std::int64_t activated(Color c) const noexcept { return n_[idx(c)]; }
    std::int64_t white_count() const noexcept { return static_cast<std::int64_t>(white_.size()); }
    /// |W and S_S| (reported whether or not red is frozen).
    std::int64_t supra_count(Color c) const noexcept { return static_cast<std::int64_t>(supra_[idx(c)].size()); }
    /// Probability that the next activation is red.
    double next_red_probability() const;
    MarkScope mark_scope() const noexcept { return scope_; }

    /// (|S_R[k]|, |S_B[k]|) over all non-seed nodes, active ones included.
    /// Throws std::logic_error unless marks are tracked on every non-seed node.
    std::pair<std::int64_t, std::int64_t> susceptible_counts() const;
    /// (Q^R, Q^B); same requirement.
    std::pair<std::int64_t, std::int64_t> q_counters() const;
    std::int32_t marks(Color c, NodeId v) const { return d_[idx(c)].at(v); }

    /// Valid once finished().
    FinalResult result() const;

private:
    enum class Phase { Normal, RedFrozen, Prolonged, Done };

    bool prolonged() const noexcept { return mode_.kind == ModeKind::Prolonged; }
    bool in_supra(NodeId v, int c) const { return d_[c][v] - d_[1 - c][v] >= params_.r; }
    void add_contrib(NodeId v, int sign);
    std::int64_t q_value(int c) const { return susceptible_[c] - n_[c] + extra_[c] - sub_[c]; }
    void set_supra(NodeId v, int c, bool member);
    void update_supra(NodeId v);
    void remove_white(NodeId v);
    void draw_recipients(NodeId self, int c);
    void mark(NodeId w, int c);
    std::int64_t enabled_total() const;
    void freeze_red();
    void maybe_freeze_after_step();
    void check_termination();
    void check_q_bounds() const;
    void audit() const;
    void emit(std::optional<NodeId> node, std::optional<Color> color);
    ActivationEvent activate(NodeId v, int c, double wait);

    ModelParams params_;
    RngStream& rng_;
    RunMode mode_;
    ChainOptions opt_;
    MarkScope scope_;
    std::int64_t record_every_ = 1;

    std::int64_t n_w_ = 0;
    std::vector<NodeColor> color_;
    std::array<std::vector<std::int32_t>, 2> d_;
    std::vector<NodeId> white_;
    std::vector<std::int64_t> white_pos_;
    std::array<std::vector<NodeId>, 2> supra_;
    std::array<std::vector<std::int64_t>, 2> supra_pos_;

    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::vector<NodeId> picked_;
    std::optional<BinomialSampler> all_sampler_;

    std::array<std::int64_t, 2> n_{0, 0};
    std::array<std::int64_t, 2> n_star_{0, 0};
    std::array<std::int64_t, 2> susceptible_{0, 0};
    std::array<std::int64_t, 2> extra_{0, 0};
    std::array<std::int64_t, 2> sub_{0, 0};
    std::int64_t k_ = 0;
    std::int64_t k_star_ = 0;
    double t_ = 0.0;
    double t_last_ = 0.0;  // time of the latest activation
    double t_star_ = 0.0;
    Phase phase_ = Phase::Normal;
    std::optional<Trajectory> trajectory_;
    std::vector<std::pair<std::int64_t, double>> step_times_;
};

/// Runs a chain-sim replication to completion. `regime` only sets the default
/// trajectory thinning.
FinalResult run_chain(const ModelParams& params, const std::optional<RegimeSpec>& regime, RngStream& rng,
                      const RunMode& mode, const ChainOptions& options = {});

}  // namespace cbp
