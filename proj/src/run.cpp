#include "cbp/run.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cbp/config.hpp"

namespace cbp {

std::string describe(const StopRule& rule) {
    std::ostringstream out;
    out.precision(17);
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, StopAtTime>) out << "time:" << r.time;
            if constexpr (std::is_same_v<T, StopAtStep>) out << "step:" << r.step;
            if constexpr (std::is_same_v<T, StopAtRedCount>) out << "red:" << r.red;
        },
        rule);
    return out.str();
}

StopRule parse_stop_rule(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("stop rule '" + text + "' must be kind:value");
    const auto kind = text.substr(0, colon);
    const auto value = text.substr(colon + 1);
    if (kind == "time") {
        const double t = parse_real("stop_rule", value);
        if (t < 0) throw ConfigError("stop time must be non-negative");
        return StopAtTime{t};
    }
    const auto v = parse_int("stop_rule", value);
    if (v < 0) throw ConfigError("stop index must be non-negative");
    if (kind == "step") return StopAtStep{v};
    if (kind == "red") return StopAtRedCount{v};
    throw ConfigError("unknown stop rule kind '" + kind + "' (time, step or red)");
}

std::string_view to_string(ModeKind kind) noexcept {
    switch (kind) {
        case ModeKind::Standard: return "standard";
        case ModeKind::Stopped: return "stopped";
        case ModeKind::Prolonged: return "prolonged";
    }
    return "?";
}

ModeKind parse_mode(std::string_view text) {
    for (auto k : {ModeKind::Standard, ModeKind::Stopped, ModeKind::Prolonged})
        if (text == to_string(k)) return k;
    throw ConfigError("unknown mode '" + std::string(text) + "' (standard, stopped or prolonged)");
}

void check_final_invariants(const FinalResult& result, const ModelParams& params) {
    if (result.a_r_star + result.a_b_star != result.k_star + params.a_R + params.a_B)
        throw std::logic_error("A_R* + A_B* != K* + a_R + a_B");
    if (result.a_r_star < params.a_R || result.a_b_star < params.a_B)
        throw std::logic_error("final count below seed count");
    if (result.a_r_star + result.a_b_star > params.n) throw std::logic_error("A_R* + A_B* > n");
}

std::vector<JumpRecord> embedded_chain(const FinalResult& result) {
    if (!result.trajectory) throw MissingTrajectory("run has no recorded trajectory");
    const auto& tr = *result.trajectory;
    if (tr.empty() || tr.front().k != 0) throw MissingTrajectory("trajectory does not start at k = 0");
    std::vector<JumpRecord> chain;
    chain.reserve(static_cast<std::size_t>(result.k_star));
    for (std::size_t i = 0; i + 1 < tr.size() && tr[i + 1].k <= result.k_star; ++i) {
        const auto& a = tr[i];
        const auto& b = tr[i + 1];
        if (b.k != a.k + 1) throw MissingTrajectory("trajectory is thinned; embedded chain needs every step");
        chain.push_back({b.n_R > a.n_R ? Color::Red : Color::Black, b.t - a.t, a.enabled_R + a.enabled_B});
    }
    if (static_cast<std::int64_t>(chain.size()) != result.k_star)
        throw MissingTrajectory("trajectory ends before K*");
    return chain;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "k,t,N_R,N_B,enabled_R,enabled_B\n";
    char buf[64];
    for (const auto& rec : trajectory) {
        std::snprintf(buf, sizeof buf, "%.17g", rec.t);
        out << rec.k << ',' << buf << ',' << rec.n_R << ',' << rec.n_B << ',' << rec.enabled_R << ','
            << rec.enabled_B << '\n';
    }
}

}  // namespace cbp
