#include "cbp/exact_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <variant>

namespace cbp {

ExplicitGraph ExplicitGraph::from_sorted_pairs(std::int64_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    ExplicitGraph g;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& [u, v] : edges) {
        ++g.offsets_[u + 1];
        ++g.offsets_[v + 1];
    }
    for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
    g.targets_.resize(edges.size() * 2);
    std::vector<std::uint64_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : edges) {
        g.targets_[fill[u]++] = v;
        g.targets_[fill[v]++] = u;
    }
    for (std::int64_t v = 0; v < n; ++v)
        std::sort(g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
                  g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
    return g;
}

ExplicitGraph ExplicitGraph::from_edges(std::int64_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
    if (n < 1) throw std::invalid_argument("graph needs at least one node");
    std::vector<std::pair<NodeId, NodeId>> norm;
    norm.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u == v) throw std::invalid_argument("self-loop at node " + std::to_string(u));
        if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
        norm.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(norm.begin(), norm.end());
    if (std::adjacent_find(norm.begin(), norm.end()) != norm.end())
        throw std::invalid_argument("duplicate edge");
    return from_sorted_pairs(n, norm);
}

ExplicitGraph generate_graph(std::int64_t n, double p, RngStream& rng, std::int64_t cap) {
    if (n > cap)
        throw CapExceeded("n = " + std::to_string(n) + " exceeds the explicit-graph cap " + std::to_string(cap));
    if (n < 1) throw std::invalid_argument("graph needs at least one node");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1)");
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(static_cast<std::size_t>(0.5 * static_cast<double>(n) * static_cast<double>(n - 1) * p * 1.1) + 16);
    // Batagelj & Brandes: geometric skips over the lower triangle, row by row.
    const double log_q = std::log1p(-p);
    std::int64_t v = 1;
    std::int64_t w = -1;
    while (v < n) {
        const double skip = std::floor(std::log1p(-rng.uniform()) / log_q);
        w += 1 + static_cast<std::int64_t>(std::min(skip, 1e18));
        while (w >= v && v < n) {
            w -= v;
            ++v;
        }
        if (v < n) edges.emplace_back(static_cast<NodeId>(w), static_cast<NodeId>(v));
    }
    return ExplicitGraph::from_sorted_pairs(n, edges);
}

namespace {

constexpr std::int8_t kNone = -1;
constexpr std::int8_t kAny = 2;  // prolonged phase: color drawn at activation

enum class Phase { Normal, RedFrozen, Prolonged, Done };

class ExactRun {
public:
    ExactRun(const ExplicitGraph& graph, const SeedSets& seeds, int r, const ExactKeys& keys, const RunMode& mode,
             const ExactOptions& options)
        : graph_(graph), r_(r), keys_(keys), mode_(mode), opt_(options) {
        const auto n = static_cast<std::size_t>(graph.node_count());
        if (r < 1) throw std::invalid_argument("threshold r must be positive");
        color_.assign(n, NodeColor::White);
        seed_.assign(n, 0);
        d_[0].assign(n, 0);
        d_[1].assign(n, 0);
        state_.assign(n, kNone);
        scheduled_.assign(n, 0);
        clock_.assign(n, 0.0);
        clock_idx_.assign(n, 0);
        a_[0] = static_cast<std::int64_t>(seeds.red.size());
        a_[1] = static_cast<std::int64_t>(seeds.black.size());
        for (int c = 0; c < 2; ++c)
            for (NodeId v : c == 0 ? seeds.red : seeds.black) {
                if (v >= n) throw std::invalid_argument("seed id out of range");
                if (seed_[v]) throw std::invalid_argument("seed sets overlap or repeat");
                seed_[v] = 1;
                color_[v] = c == 0 ? NodeColor::Red : NodeColor::Black;
            }
        for (int c = 0; c < 2; ++c)
            for (NodeId v : c == 0 ? seeds.red : seeds.black)
                for (NodeId w : graph.neighbors(v)) ++d_[c][w];
        for (std::size_t v = 0; v < n; ++v)
            if (!seed_[v]) add_contrib(static_cast<NodeId>(v), +1);
        for (std::size_t v = 0; v < n; ++v) refresh(static_cast<NodeId>(v), 0.0);
        for (auto s : opt_.step_times) step_times_.emplace_back(s, std::numeric_limits<double>::quiet_NaN());
    }

    FinalResult run() {
        if (opt_.record_trajectory) trajectory_.emplace();
        if (mode_.kind == ModeKind::Stopped) maybe_freeze_after_step();
        emit(std::nullopt, std::nullopt);
        check_termination();
        while (phase_ != Phase::Done) {
            if (heap_.empty()) throw std::logic_error("event queue drained while nodes are enabled");
            const auto [t, v] = heap_.top();
            heap_.pop();
            if (!scheduled_[v] || clock_[v] != t) continue;  // stale entry
            if (phase_ == Phase::Normal && mode_.kind == ModeKind::Stopped) {
                if (const auto* st = std::get_if<StopAtTime>(&*mode_.stop); st && t > st->time) {
                    freeze_red();
                    if (state_[v] == kNone) {
                        check_termination();
                        continue;
                    }
                }
            }
            activate(v, t);
        }
        FinalResult res;
        res.a_r_star = a_[0] + n_star_[0];
        res.a_b_star = a_[1] + n_star_[1];
        res.k_star = k_star_;
        res.t_k_star = t_star_;
        if (mode_.kind == ModeKind::Prolonged) {
            res.prolonged_r = a_[0] + n_[0];
            res.prolonged_b = a_[1] + n_[1];
        }
        res.trajectory = std::move(trajectory_);
        res.step_times = std::move(step_times_);
        return res;
    }

private:
    bool in_supra(NodeId v, int c) const { return d_[c][v] - d_[1 - c][v] >= r_; }

    // Contribution of non-seed v to |S_S|, the active-but-S_S-with-D_S>=r term and
    // the opposite-color term of Q^S.
    void add_contrib(NodeId v, int sign) {
        for (int c = 0; c < 2; ++c) {
            const bool supra = in_supra(v, c);
            susceptible_[c] += sign * supra;
            const auto col = color_[v];
            const NodeColor own = c == 0 ? NodeColor::Red : NodeColor::Black;
            const NodeColor opp = c == 0 ? NodeColor::Black : NodeColor::Red;
            if (col == own && !supra && d_[c][v] >= r_) extra_[c] += sign;
            if (col == opp && supra && d_[1 - c][v] >= r_) sub_[c] += sign;
        }
    }

    std::int64_t q_value(int c) const { return susceptible_[c] - n_[c] + extra_[c] - sub_[c]; }

    std::int8_t wanted_state(NodeId v) const {
        if (color_[v] != NodeColor::White) return kNone;
        if (phase_ == Phase::Prolonged) return kAny;
        if (phase_ != Phase::RedFrozen && in_supra(v, 0)) return 0;
        if (in_supra(v, 1)) return 1;
        return kNone;
    }

    void refresh(NodeId v, double now) {
        const auto want = wanted_state(v);
        const auto have = state_[v];
        if (want == have) return;
        if (have == 0 || have == 1) --enabled_[have];
        if (want == 0 || want == 1) ++enabled_[want];
        state_[v] = want;
        if (want == kNone) {
            scheduled_[v] = 0;
        } else if (have == kNone) {
            schedule(v, now);
        }
    }

    void schedule(NodeId v, double now) {
        while (clock_[v] <= now) {
            const double u = to_unit(counter_bits(keys_.clock_key, v, clock_idx_[v]++));
            clock_[v] += -std::log1p(-u);
        }
        scheduled_[v] = 1;
        heap_.emplace(clock_[v], v);
    }

    void freeze_red() {
        phase_ = Phase::RedFrozen;
        for (NodeId v = 0; v < static_cast<NodeId>(state_.size()); ++v)
            if (state_[v] == 0) refresh(v, now_);
    }

    void maybe_freeze_after_step() {
        if (phase_ != Phase::Normal || mode_.kind != ModeKind::Stopped) return;
        const auto& rule = *mode_.stop;
        if (const auto* s = std::get_if<StopAtStep>(&rule); s && k_ >= s->step) freeze_red();
        if (const auto* s = std::get_if<StopAtRedCount>(&rule); s && n_[0] >= s->red) freeze_red();
    }

    void activate(NodeId v, double t) {
        if (color_[v] != NodeColor::White || seed_[v])
            throw std::logic_error("node " + std::to_string(v) + " changed color twice");
        int c = state_[v];
        if (c == kAny) {
            double u_red = 0.5;
            if (k_ > k_star_) {
                const double qr = std::abs(static_cast<double>(q_value(0)));
                const double qb = std::abs(static_cast<double>(q_value(1)));
                if (qr + qb > 0) u_red = qr / (qr + qb);
            }
            c = to_unit(counter_bits(keys_.color_key, static_cast<std::uint64_t>(k_ + 1), 0)) < u_red ? 0 : 1;
        } else if (opt_.audit) {
            audit_threshold(v, c);
        }
        now_ = t;
        ++k_;
        ++n_[c];
        add_contrib(v, -1);
        color_[v] = c == 0 ? NodeColor::Red : NodeColor::Black;
        add_contrib(v, +1);
        refresh(v, t);
        for (NodeId w : graph_.neighbors(v)) {
            if (!seed_[w]) add_contrib(w, -1);
            ++d_[c][w];
            if (!seed_[w]) add_contrib(w, +1);
            refresh(w, t);
        }
        for (auto& [s, time] : step_times_)
            if (s == k_) time = t;
        check_q_bounds();
        maybe_freeze_after_step();
        emit(v, c == 0 ? Color::Red : Color::Black);
        check_termination();
    }

    void check_termination() {
        if (phase_ == Phase::Prolonged) {
            if (k_ == static_cast<std::int64_t>(color_.size()) - a_[0] - a_[1]) phase_ = Phase::Done;
            return;
        }
        if (enabled_[0] + enabled_[1] > 0) return;
        k_star_ = k_;
        t_star_ = now_;
        n_star_ = n_;
        if (opt_.audit) audit_termination();
        if (mode_.kind == ModeKind::Prolonged) {
            phase_ = Phase::Prolonged;
            for (NodeId v = 0; v < static_cast<NodeId>(state_.size()); ++v) refresh(v, now_);
            check_termination();
        } else {
            phase_ = Phase::Done;
        }
    }

    void check_q_bounds() const {
        for (int c = 0; c < 2; ++c) {
            const auto q = q_value(c);
            if (q > susceptible_[c] || q < susceptible_[c] - k_)
                throw std::logic_error("Q counter outside [|S_S| - k, |S_S|]");
        }
        if (opt_.audit && phase_ == Phase::Normal)
            for (int c = 0; c < 2; ++c)
                if (q_value(c) != enabled_[c]) throw std::logic_error("Q^S differs from |W and S_S| before K*");
    }

    std::array<std::int64_t, 2> recount(NodeId v) const {
        std::array<std::int64_t, 2> d{0, 0};
        for (NodeId w : graph_.neighbors(v)) {
            if (color_[w] == NodeColor::Red) ++d[0];
            if (color_[w] == NodeColor::Black) ++d[1];
        }
        return d;
    }

    void audit_threshold(NodeId v, int c) const {
        const auto d = recount(v);
        if (d[0] != d_[0][v] || d[1] != d_[1][v]) throw std::logic_error("mark counter drifted from adjacency");
        if (d[c] - d[1 - c] < r_) throw std::logic_error("activation below threshold");
    }

    void audit_termination() const {
        for (NodeId v = 0; v < static_cast<NodeId>(color_.size()); ++v) {
            if (color_[v] != NodeColor::White) continue;
            const auto d = recount(v);
            const bool red_live = phase_ == Phase::Normal;
            if ((red_live && d[0] - d[1] >= r_) || d[1] - d[0] >= r_)
                throw std::logic_error("white node still suprathreshold at termination");
        }
    }

    void emit(std::optional<NodeId> node, std::optional<Color> color) {
        const std::int64_t er = phase_ == Phase::Prolonged || phase_ == Phase::Done ? 0 : enabled_[0];
        const std::int64_t eb = phase_ == Phase::Prolonged || phase_ == Phase::Done ? 0 : enabled_[1];
        if (trajectory_) trajectory_->push_back({k_, now_, n_[0], n_[1], er, eb});
        if (opt_.observer) {
            StepSnapshot snap{k_, now_, node, color, n_[0], n_[1], er, eb, phase_ == Phase::Prolonged,
                              susceptible_[0], susceptible_[1], q_value(0), q_value(1)};
            opt_.observer(snap);
        }
    }

    using Event = std::pair<double, NodeId>;
    const ExplicitGraph& graph_;
    int r_;
    ExactKeys keys_;
    RunMode mode_;
    const ExactOptions& opt_;

    std::vector<NodeColor> color_;
    std::vector<std::uint8_t> seed_;
    std::array<std::vector<std::int32_t>, 2> d_;
    std::vector<std::int8_t> state_;
    std::vector<std::uint8_t> scheduled_;
    std::vector<double> clock_;
    std::vector<std::uint64_t> clock_idx_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;

    std::array<std::int64_t, 2> a_{0, 0};
    std::array<std::int64_t, 2> n_{0, 0};
    std::array<std::int64_t, 2> n_star_{0, 0};
    std::array<std::int64_t, 2> enabled_{0, 0};
    std::array<std::int64_t, 2> susceptible_{0, 0};
    std::array<std::int64_t, 2> extra_{0, 0};
    std::array<std::int64_t, 2> sub_{0, 0};
    std::int64_t k_ = 0;
    std::int64_t k_star_ = 0;
    double now_ = 0.0;
    double t_star_ = 0.0;
    Phase phase_ = Phase::Normal;
    std::optional<Trajectory> trajectory_;
    std::vector<std::pair<std::int64_t, double>> step_times_;
};

}  // namespace

FinalResult run_exact(const ExplicitGraph& graph, const SeedSets& seeds, int r, const ExactKeys& keys,
                      const RunMode& mode, const ExactOptions& options) {
    if ((mode.kind == ModeKind::Stopped) != mode.stop.has_value())
        throw std::invalid_argument("a stop rule is required exactly in stopped mode");
    ExactRun run(graph, seeds, r, keys, mode, options);
    return run.run();
}

FinalResult run_exact(const ModelParams& params, RngStream& rng, const RunMode& mode, const ExactOptions& options,
                      std::int64_t cap) {
    validate(params);
    const auto graph = generate_graph(params.n, params.p, rng, cap);
    const auto seeds = make_seeds(params, rng);
    ExactKeys keys;
    keys.clock_key = rng.next_u64();
    keys.color_key = rng.next_u64();
    return run_exact(graph, seeds, params.r, keys, mode, options);
}

}  // namespace cbp
