#include "cbp/chain_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

namespace cbp {

ChainProcess::ChainProcess(const ModelParams& params, RngStream& rng, const RunMode& mode,
                           const ChainOptions& options, std::optional<double> q)
    : params_(params), rng_(rng), mode_(mode), opt_(options) {
    validate(params);
    if ((mode.kind == ModeKind::Stopped) != mode.stop.has_value())
        throw std::invalid_argument("a stop rule is required exactly in stopped mode");
    scope_ = options.marks.value_or(prolonged() ? MarkScope::AllNonSeed : MarkScope::WhiteOnly);
    if (prolonged() && scope_ != MarkScope::AllNonSeed)
        throw std::invalid_argument("prolonged mode needs marks on every non-seed node");
    if (options.record_every > 0)
        record_every_ = options.record_every;
    else if (q)
        record_every_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(*q / 100.0)));

    n_w_ = params.n_white();
    const auto n = static_cast<std::size_t>(n_w_);
    color_.assign(n, NodeColor::White);
    white_.resize(n);
    white_pos_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        white_[v] = static_cast<NodeId>(v);
        white_pos_[v] = static_cast<std::int64_t>(v);
    }
    for (int c = 0; c < 2; ++c) {
        d_[c].assign(n, 0);
        supra_pos_[c].assign(n, -1);
        const auto a = c == 0 ? params.a_R : params.a_B;
        if (a == 0) continue;
        const BinomialSampler seed_marks(a, params.p);
        for (auto& x : d_[c]) x = static_cast<std::int32_t>(seed_marks(rng_));
    }
    stamp_.assign(n, 0);
    if (scope_ == MarkScope::AllNonSeed) all_sampler_.emplace(n_w_, params.p);
    for (std::size_t v = 0; v < n; ++v) {
        add_contrib(static_cast<NodeId>(v), +1);
        update_supra(static_cast<NodeId>(v));
    }
    for (auto s : opt_.step_times) step_times_.emplace_back(s, std::numeric_limits<double>::quiet_NaN());
    if (opt_.record_trajectory) trajectory_.emplace();

    maybe_freeze_after_step();
    emit(std::nullopt, std::nullopt);
    check_termination();
    if (opt_.audit) audit();
}

void ChainProcess::add_contrib(NodeId v, int sign) {
    if (scope_ != MarkScope::AllNonSeed) return;
    for (int c = 0; c < 2; ++c) {
        const bool supra = in_supra(v, c);
        susceptible_[c] += sign * supra;
        const auto col = color_[v];
        const NodeColor own = c == 0 ? NodeColor::Red : NodeColor::Black;
        const NodeColor opp = c == 0 ? NodeColor::Black : NodeColor::Red;
        if (col == own && !supra && d_[c][v] >= params_.r) extra_[c] += sign;
        if (col == opp && supra && d_[1 - c][v] >= params_.r) sub_[c] += sign;
    }
}

void ChainProcess::set_supra(NodeId v, int c, bool member) {
    auto& pos = supra_pos_[c];
    auto& list = supra_[c];
    if (member == (pos[v] >= 0)) return;
    if (member) {
        pos[v] = static_cast<std::int64_t>(list.size());
        list.push_back(v);
    } else {
        const auto i = pos[v];
        const NodeId last = list.back();
        list[static_cast<std::size_t>(i)] = last;
        pos[last] = i;
        list.pop_back();
        pos[v] = -1;
    }
}

void ChainProcess::update_supra(NodeId v) {
    const bool white = color_[v] == NodeColor::White;
    for (int c = 0; c < 2; ++c) set_supra(v, c, white && in_supra(v, c));
}

void ChainProcess::remove_white(NodeId v) {
    const auto i = white_pos_[v];
    const NodeId last = white_.back();
    white_[static_cast<std::size_t>(i)] = last;
    white_pos_[last] = i;
    white_.pop_back();
    white_pos_[v] = -1;
    set_supra(v, 0, false);
    set_supra(v, 1, false);
}

void ChainProcess::mark(NodeId w, int c) {
    add_contrib(w, -1);
    ++d_[c][w];
    add_contrib(w, +1);
    if (color_[w] == NodeColor::White) update_supra(w);
}

void ChainProcess::draw_recipients(NodeId self, int c) {
    (void)self;  // WhiteOnly: already removed from white_; AllNonSeed: self-marks allowed
    const bool all = scope_ == MarkScope::AllNonSeed;
    const auto pop = all ? n_w_ : static_cast<std::int64_t>(white_.size());
    if (pop == 0) return;
    const std::int64_t m = all ? (*all_sampler_)(rng_) : rng_.binomial(pop, params_.p);
    if (m == 0) return;
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
    picked_.clear();
    const auto pop_u = static_cast<std::uint64_t>(pop);
    if (2 * m <= pop) {
        while (static_cast<std::int64_t>(picked_.size()) < m) {
            const auto i = rng_.uniform_below(pop_u);
            if (stamp_[i] == epoch_) continue;
            stamp_[i] = epoch_;
            picked_.push_back(static_cast<NodeId>(i));
        }
    } else {
        // Pick the complement, then take everything else.
        std::int64_t excluded = 0;
        while (excluded < pop - m) {
            const auto i = rng_.uniform_below(pop_u);
            if (stamp_[i] == epoch_) continue;
            stamp_[i] = epoch_;
            ++excluded;
        }
        for (std::int64_t i = 0; i < pop; ++i)
            if (stamp_[static_cast<std::size_t>(i)] != epoch_) picked_.push_back(static_cast<NodeId>(i));
    }
    for (NodeId i : picked_) mark(all ? i : white_[i], c);
}

std::int64_t ChainProcess::enabled_total() const {
    switch (phase_) {
        case Phase::Normal: return supra_count(Color::Red) + supra_count(Color::Black);
        case Phase::RedFrozen: return supra_count(Color::Black);
        case Phase::Prolonged: return white_count();
        case Phase::Done: return 0;
    }
    return 0;
}

double ChainProcess::next_red_probability() const {
    switch (phase_) {
        case Phase::Normal: {
            const auto e = enabled_total();
            return e == 0 ? 0.5 : static_cast<double>(supra_count(Color::Red)) / static_cast<double>(e);
        }
        case Phase::RedFrozen: return 0.0;
        case Phase::Prolonged: {
            if (k_ == k_star_) return 0.5;
            const double qr = std::abs(static_cast<double>(q_value(0)));
            const double qb = std::abs(static_cast<double>(q_value(1)));
            return qr + qb > 0 ? qr / (qr + qb) : 0.5;
        }
        case Phase::Done: return 0.5;
    }
    return 0.5;
}

std::pair<std::int64_t, std::int64_t> ChainProcess::susceptible_counts() const {
    if (scope_ != MarkScope::AllNonSeed)
        throw std::logic_error("susceptible counts need marks on every non-seed node (prolonged mode)");
    return {susceptible_[0], susceptible_[1]};
}

std::pair<std::int64_t, std::int64_t> ChainProcess::q_counters() const {
    if (scope_ != MarkScope::AllNonSeed)
        throw std::logic_error("Q counters need marks on every non-seed node (prolonged mode)");
    return {q_value(0), q_value(1)};
}

void ChainProcess::freeze_red() { phase_ = Phase::RedFrozen; }

void ChainProcess::maybe_freeze_after_step() {
    if (phase_ != Phase::Normal || mode_.kind != ModeKind::Stopped) return;
    const auto& rule = *mode_.stop;
    if (const auto* s = std::get_if<StopAtStep>(&rule); s && k_ >= s->step) freeze_red();
    if (const auto* s = std::get_if<StopAtRedCount>(&rule); s && n_[0] >= s->red) freeze_red();
}

void ChainProcess::check_termination() {
    auto close_record = [&] {
        if (trajectory_ && trajectory_->back().k != k_) {
            const bool live = phase_ == Phase::Normal;
            trajectory_->push_back({k_, t_last_, n_[0], n_[1], live ? supra_count(Color::Red) : 0,
                                    phase_ == Phase::Prolonged ? 0 : supra_count(Color::Black)});
        }
    };
    if (phase_ == Phase::Prolonged) {
        if (white_.empty()) {
            close_record();
            phase_ = Phase::Done;
        }
        return;
    }
    if (phase_ == Phase::Done || enabled_total() > 0) return;
    k_star_ = k_;
    t_star_ = t_last_;
    n_star_ = n_;
    close_record();
    phase_ = prolonged() && !white_.empty() ? Phase::Prolonged : Phase::Done;
}

void ChainProcess::check_q_bounds() const {
    if (scope_ != MarkScope::AllNonSeed) return;
    for (int c = 0; c < 2; ++c) {
        const auto q = q_value(c);
        if (q > susceptible_[c] || q < susceptible_[c] - k_)
            throw std::logic_error("Q counter outside [|S_S| - k, |S_S|]");
    }
}

void ChainProcess::audit() const {
    for (NodeId v = 0; v < static_cast<NodeId>(n_w_); ++v) {
        const bool white = color_[v] == NodeColor::White;
        if (white != (white_pos_[v] >= 0)) throw std::logic_error("white list out of sync");
        for (int c = 0; c < 2; ++c)
            if ((supra_pos_[c][v] >= 0) != (white && in_supra(v, c)))
                throw std::logic_error("supra set out of sync at node " + std::to_string(v));
    }
    if (scope_ != MarkScope::AllNonSeed) return;
    std::array<std::int64_t, 2> sus{0, 0}, ext{0, 0}, sub{0, 0};
    for (NodeId v = 0; v < static_cast<NodeId>(n_w_); ++v)
        for (int c = 0; c < 2; ++c) {
            const bool supra = in_supra(v, c);
            sus[c] += supra;
            if (color_[v] == (c == 0 ? NodeColor::Red : NodeColor::Black) && !supra && d_[c][v] >= params_.r)
                ++ext[c];
            if (color_[v] == (c == 0 ? NodeColor::Black : NodeColor::Red) && supra && d_[1 - c][v] >= params_.r)
                ++sub[c];
        }
    if (sus != susceptible_ || ext != extra_ || sub != sub_) throw std::logic_error("Q bookkeeping drifted");
    if (phase_ == Phase::Normal)
        for (int c = 0; c < 2; ++c)
            if (q_value(c) != supra_count(c == 0 ? Color::Red : Color::Black))
                throw std::logic_error("Q^S differs from |W and S_S| before K*");
}

void ChainProcess::emit(std::optional<NodeId> node, std::optional<Color> color) {
    const bool live = phase_ == Phase::Normal;
    const bool pre = phase_ == Phase::Normal || phase_ == Phase::RedFrozen;
    const std::int64_t er = live ? supra_count(Color::Red) : 0;
    const std::int64_t eb = pre ? supra_count(Color::Black) : 0;
    if (trajectory_ && k_ % record_every_ == 0) trajectory_->push_back({k_, t_last_, n_[0], n_[1], er, eb});
    if (opt_.observer) {
        StepSnapshot snap{k_, t_last_, node, color, n_[0], n_[1], er, eb, phase_ == Phase::Prolonged,
                          std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        if (scope_ == MarkScope::AllNonSeed) {
            snap.susceptible_R = susceptible_[0];
            snap.susceptible_B = susceptible_[1];
            snap.q_R = q_value(0);
            snap.q_B = q_value(1);
        }
        opt_.observer(snap);
    }
}

ActivationEvent ChainProcess::activate(NodeId v, int c, double wait) {
    if (color_[v] != NodeColor::White) throw std::logic_error("node " + std::to_string(v) + " changed color twice");
    t_ += wait;
    t_last_ = t_;
    ++k_;
    ++n_[c];
    add_contrib(v, -1);
    color_[v] = c == 0 ? NodeColor::Red : NodeColor::Black;
    add_contrib(v, +1);
    remove_white(v);
    draw_recipients(v, c);
    for (auto& [s, time] : step_times_)
        if (s == k_) time = t_;
    check_q_bounds();
    maybe_freeze_after_step();
    const Color col = c == 0 ? Color::Red : Color::Black;
    emit(v, col);
    check_termination();
    if (opt_.audit) audit();
    return {k_, col, v, wait, t_};
}

std::optional<ActivationEvent> ChainProcess::step() {
    while (phase_ != Phase::Done) {
        if (phase_ == Phase::Prolonged) {
            const auto w = static_cast<std::uint64_t>(white_.size());
            const double wait = rng_.exponential(static_cast<double>(w));
            const NodeId v = white_[rng_.uniform_below(w)];
            const int c = rng_.uniform() < next_red_probability() ? 0 : 1;
            return activate(v, c, wait);
        }
        const auto e = enabled_total();
        const double wait = rng_.exponential(static_cast<double>(e));
        if (phase_ == Phase::Normal && mode_.kind == ModeKind::Stopped) {
            if (const auto* st = std::get_if<StopAtTime>(&*mode_.stop); st && t_ + wait > st->time) {
                t_ = st->time;  // memoryless: restart the clocks from the stop instant
                freeze_red();
                check_termination();
                continue;
            }
        }
        auto i = static_cast<std::int64_t>(rng_.uniform_below(static_cast<std::uint64_t>(e)));
        if (phase_ == Phase::Normal && i < supra_count(Color::Red))
            return activate(supra_[0][static_cast<std::size_t>(i)], 0, wait);
        if (phase_ == Phase::Normal) i -= supra_count(Color::Red);
        return activate(supra_[1][static_cast<std::size_t>(i)], 1, wait);
    }
    return std::nullopt;
}

FinalResult ChainProcess::run() {
    while (step()) {
    }
    return result();
}

FinalResult ChainProcess::result() const {
    if (!finished()) throw std::logic_error("run has not finished");
    FinalResult res;
    res.a_r_star = params_.a_R + n_star_[0];
    res.a_b_star = params_.a_B + n_star_[1];
    res.k_star = k_star_;
    res.t_k_star = t_star_;
    if (prolonged()) {
        res.prolonged_r = params_.a_R + n_[0];
        res.prolonged_b = params_.a_B + n_[1];
    }
    res.trajectory = trajectory_;
    res.step_times = step_times_;
    return res;
}

FinalResult run_chain(const ModelParams& params, const std::optional<RegimeSpec>& regime, RngStream& rng,
                      const RunMode& mode, const ChainOptions& options) {
    ChainProcess process(params, rng, mode, options,
                         regime ? std::optional<double>(regime->q()) : std::nullopt);
    return process.run();
}

}  // namespace cbp
