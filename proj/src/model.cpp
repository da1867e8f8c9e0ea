#include "cbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cbp {

const char* to_string(Color c) noexcept { return c == Color::Red ? "R" : "B"; }

ValidationReport validate(const ModelParams& params) {
    std::ostringstream err;
    if (params.n < 3) err << "n must be >= 3 (got " << params.n << "); ";
    if (!(params.p > 0.0 && params.p < 1.0)) err << "p must lie in (0,1) (got " << params.p << "); ";
    if (params.r < 2) err << "r must be >= 2 (got " << params.r << "); ";
    if (params.a_R < 0 || params.a_B < 0) err << "seed counts must be non-negative; ";
    if (params.a_R + params.a_B > params.n)
        err << "a_R + a_B = " << params.a_R + params.a_B << " exceeds n = " << params.n << "; ";
    else if (params.n_white() < 1)
        err << "at least one non-seed node is required; ";
    if (params.n > static_cast<std::int64_t>(std::numeric_limits<NodeId>::max()))
        err << "n exceeds the node id range; ";
    if (const auto msg = err.str(); !msg.empty())
        throw HardInvariantViolation(msg.substr(0, msg.size() - 2));

    ValidationReport report;
    const double n = static_cast<double>(params.n);
    if (n * params.p <= 1.0) {
        std::ostringstream w;
        w << "n*p = " << n * params.p << " <= 1: below the 1/n << p window";
        report.warnings.push_back(w.str());
    }
    const double upper = params.p * std::pow(n, 1.0 / params.r) * std::log(n);
    if (upper >= 1.0) {
        std::ostringstream w;
        w << "p*n^(1/r)*log(n) = " << upper << " >= 1: above the p << 1/(n^(1/r) log n) window";
        report.warnings.push_back(w.str());
    }
    const double g = g_critical(params.n, params.p, params.r);
    if (params.p * g >= 1.0) {
        std::ostringstream w;
        w << "p*g = " << params.p * g << " >= 1";
        report.warnings.push_back(w.str());
    }
    return report;
}

double g_critical(std::int64_t n, double p, int r) {
    // (1 - 1/r) * ((r-1)! / (n p^r))^(1/(r-1)), in log space.
    const double log_inner = std::lgamma(static_cast<double>(r)) - std::log(static_cast<double>(n)) -
                             r * std::log(p);
    return (1.0 - 1.0 / r) * std::exp(log_inner / (r - 1));
}

std::string_view to_string(Regime regime) noexcept {
    switch (regime) {
        case Regime::QEqualsG: return "q_equals_g";
        case Regime::GMuchLessQMuchLessPInv: return "g_lt_q_lt_pinv";
        case Regime::QEqualsPInv: return "q_equals_pinv";
        case Regime::PInvMuchLessQMuchLessN: return "pinv_lt_q_lt_n";
    }
    return "?";
}

Regime parse_regime(std::string_view text) {
    for (auto r : {Regime::QEqualsG, Regime::GMuchLessQMuchLessPInv, Regime::QEqualsPInv,
                   Regime::PInvMuchLessQMuchLessN})
        if (text == to_string(r)) return r;
    throw ConfigError("unknown regime '" + std::string(text) +
                      "' (expected q_equals_g, g_lt_q_lt_pinv, q_equals_pinv or pinv_lt_q_lt_n)");
}

RegimeSpec::RegimeSpec(Regime regime, double alpha_R, double alpha_B, double q)
    : regime_(regime), alpha_R_(alpha_R), alpha_B_(alpha_B), q_(q) {
    if (!(alpha_B > 0.0)) throw HardInvariantViolation("alpha_B must be > 0");
    if (std::abs(alpha_R - alpha_B) <= kAlphaTieTolerance * std::max(alpha_R, alpha_B))
        throw HardInvariantViolation("alpha_R = alpha_B is not supported");
    if (!(alpha_R > alpha_B)) throw HardInvariantViolation("alpha_R must exceed alpha_B");
    if (!(q > 0.0) || !std::isfinite(q)) throw HardInvariantViolation("q must be a positive real");
}

RegimeSpec RegimeSpec::for_instance(Regime regime, double alpha_R, double alpha_B, std::int64_t n,
                                    double p, int r, std::optional<double> q) {
    std::optional<double> forced;
    if (regime == Regime::QEqualsG) forced = g_critical(n, p, r);
    if (regime == Regime::QEqualsPInv) forced = 1.0 / p;
    if (forced) {
        if (q && std::abs(*q - *forced) > 1e-9 * *forced) {
            std::ostringstream msg;
            msg << "q = " << *q << " contradicts regime " << to_string(regime) << " (expected " << *forced
                << ")";
            throw HardInvariantViolation(msg.str());
        }
        return RegimeSpec(regime, alpha_R, alpha_B, *forced);
    }
    if (!q) throw HardInvariantViolation(std::string("regime ") + std::string(to_string(regime)) +
                                         " needs an explicit q");
    return RegimeSpec(regime, alpha_R, alpha_B, *q);
}

std::int64_t seed_count(double alpha, double q) {
    // q = g is computed in floating point; 2 * 499.999999999999 must still give 1000.
    const double x = alpha * q;
    return static_cast<std::int64_t>(std::floor(x + 1e-9 * std::max(1.0, std::abs(x))));
}

namespace {

// Partial Fisher-Yates over the first `count` slots of 0..n-1.
std::vector<NodeId> partial_permutation(std::int64_t n, std::int64_t count, RngStream& rng) {
    std::vector<NodeId> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), NodeId{0});
    for (std::int64_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    perm.resize(static_cast<std::size_t>(count));
    return perm;
}

}  // namespace

SeedSets make_seeds(const ModelParams& params, RngStream& rng) {
    const auto head = partial_permutation(params.n, params.a_R + params.a_B, rng);
    SeedSets seeds;
    seeds.red.assign(head.begin(), head.begin() + params.a_R);
    seeds.black.assign(head.begin() + params.a_R, head.end());
    return seeds;
}

std::pair<SeedSets, SeedSets> make_nested_seeds(std::int64_t n, std::int64_t a_R1, std::int64_t a_B1,
                                                std::int64_t a_R2, std::int64_t a_B2, RngStream& rng) {
    if (a_R1 > a_R2 || a_B1 < a_B2)
        throw std::invalid_argument("nested seeds need a_R1 <= a_R2 and a_B1 >= a_B2");
    const std::int64_t total = a_R2 + a_B1;
    if (total > n) throw std::invalid_argument("nested seeds: a_R2 + a_B1 exceeds n");
    const auto head = partial_permutation(n, total, rng);
    auto make = [&](std::int64_t a_R, std::int64_t a_B) {
        SeedSets s;
        s.red.assign(head.begin(), head.begin() + a_R);
        s.black.assign(head.end() - a_B, head.end());
        return s;
    };
    return {make(a_R1, a_B1), make(a_R2, a_B2)};
}

}  // namespace cbp
