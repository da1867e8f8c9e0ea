#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cbp::stats {

struct Summary {
    std::int64_t count = 0;
    double mean = 0.0;
    std::optional<double> std;  // absent for a single sample
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    double half_width() const { return ci_hi && ci_lo ? 0.5 * (*ci_hi - *ci_lo) : 0.0; }
};

/// Mean, sample standard deviation and 95% Student-t interval (count - 1 dof).
Summary summarize(std::span<const double> values);

struct TestResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

/// Pearson goodness of fit of `observed[i]` against probabilities `expected[i]`
/// (summing to one). Adjacent cells are pooled until every expected count is at
/// least `min_expected`.
TestResult chi_square_gof(std::span<const std::int64_t> observed, std::span<const double> expected,
                          double min_expected = 5.0);

/// One-sample Kolmogorov-Smirnov against a continuous CDF (asymptotic p-value with
/// the Stephens small-sample correction).
TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Total-variation distance between two empirical laws given as count maps.
template <class Key>
double tv_distance(const std::map<Key, std::int64_t>& a, const std::map<Key, std::int64_t>& b) {
    double na = 0, nb = 0;
    for (const auto& [k, c] : a) na += static_cast<double>(c);
    for (const auto& [k, c] : b) nb += static_cast<double>(c);
    double sum = 0;
    for (const auto& [k, c] : a) {
        const auto it = b.find(k);
        const double pb = it == b.end() ? 0.0 : static_cast<double>(it->second) / nb;
        sum += std::abs(static_cast<double>(c) / na - pb);
    }
    for (const auto& [k, c] : b)
        if (!a.count(k)) sum += static_cast<double>(c) / nb;
    return 0.5 * sum;
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width for n samples at level alpha.
double dkw_epsilon(std::int64_t n, double alpha);

/// Binomial(n, p) probability mass over 0..n.
std::vector<double> binomial_pmf(std::int64_t n, double p);

}  // namespace cbp::stats
