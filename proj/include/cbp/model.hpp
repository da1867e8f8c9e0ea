#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cbp/rng.hpp"

namespace cbp {

using NodeId = std::uint32_t;

enum class NodeColor : std::uint8_t { White, Red, Black };

/// Active colors. Used as an array index (Red = 0, Black = 1).
enum class Color : std::uint8_t { Red = 0, Black = 1 };

constexpr int idx(Color c) noexcept { return static_cast<int>(c); }
constexpr Color other(Color c) noexcept { return c == Color::Red ? Color::Black : Color::Red; }
constexpr NodeColor as_node_color(Color c) noexcept {
    return c == Color::Red ? NodeColor::Red : NodeColor::Black;
}
const char* to_string(Color c) noexcept;

/// Raised when a parameter set breaks a hard model invariant.
class HardInvariantViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One finite instance of the competing process.
struct ModelParams {
    std::int64_t n = 0;
    double p = 0.0;
    int r = 2;
    std::int64_t a_R = 0;
    std::int64_t a_B = 0;
    std::uint64_t seed = 1;

    std::int64_t n_white() const noexcept { return n - a_R - a_B; }
    bool operator==(const ModelParams&) const = default;
};

struct ValidationReport {
    std::vector<std::string> warnings;
    bool clean() const noexcept { return warnings.empty(); }
};

/// Throws HardInvariantViolation on a broken hard invariant. The asymptotic
/// window 1/n << p << 1/(n^{1/r} log n) is only checked softly, as warnings.
ValidationReport validate(const ModelParams& params);

/// Critical seed-set size of single-color bootstrap percolation on G(n, p).
double g_critical(std::int64_t n, double p, int r);

enum class Regime {
    QEqualsG,                // q = g
    GMuchLessQMuchLessPInv,  // g << q << 1/p
    QEqualsPInv,             // q = 1/p
    PInvMuchLessQMuchLessN,  // 1/p << q << n
};

std::string_view to_string(Regime regime) noexcept;
/// Accepts the identifiers printed by to_string (q_equals_g, ...).
Regime parse_regime(std::string_view text);

/// Asymptotic scaling declaration attached to an instance.
class RegimeSpec {
public:
    /// Relative tolerance under which alpha_R and alpha_B count as equal.
    static constexpr double kAlphaTieTolerance = 1e-12;

    /// Throws HardInvariantViolation unless alpha_R > alpha_B > 0 and q > 0.
    RegimeSpec(Regime regime, double alpha_R, double alpha_B, double q);

    /// Picks q from the instance where the regime fixes it (g, or 1/p);
    /// otherwise `q` must be supplied. Rejects a supplied q that contradicts
    /// the regime.
    static RegimeSpec for_instance(Regime regime, double alpha_R, double alpha_B, std::int64_t n,
                                   double p, int r, std::optional<double> q = std::nullopt);

    Regime regime() const noexcept { return regime_; }
    double alpha_R() const noexcept { return alpha_R_; }
    double alpha_B() const noexcept { return alpha_B_; }
    double alpha(Color c) const noexcept { return c == Color::Red ? alpha_R_ : alpha_B_; }
    double q() const noexcept { return q_; }

    bool operator==(const RegimeSpec&) const = default;

private:
    Regime regime_;
    double alpha_R_;
    double alpha_B_;
    double q_;
};

/// Seed count for a scaled seed density: floor(alpha * q), with a 1e-9 relative
/// allowance for round-off in q.
std::int64_t seed_count(double alpha, double q);
inline constexpr std::string_view kSeedRounding = "floor";

struct SeedSets {
    std::vector<NodeId> red;
    std::vector<NodeId> black;
};

/// a_R nodes uniformly without replacement, then a_B from the remainder.
/// Node ids are 0-based.
SeedSets make_seeds(const ModelParams& params, RngStream& rng);

/// Seed sets for two instances sharing one random permutation so that
/// red_1 is a subset of red_2 and black_2 a subset of black_1. Each set pair
/// is marginally uniform. Requires a_R1 <= a_R2, a_B1 >= a_B2.
std::pair<SeedSets, SeedSets> make_nested_seeds(std::int64_t n, std::int64_t a_R1, std::int64_t a_B1,
                                                std::int64_t a_R2, std::int64_t a_B2, RngStream& rng);

}  // namespace cbp
