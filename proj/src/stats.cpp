#include "cbp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace cbp::stats {

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = static_cast<std::int64_t>(values.size());
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    const boost::math::students_t t(static_cast<double>(values.size() - 1));
    const double half = boost::math::quantile(t, 0.975) * *s.std / std::sqrt(static_cast<double>(values.size()));
    s.ci_lo = s.mean - half;
    s.ci_hi = s.mean + half;
    return s;
}

TestResult chi_square_gof(std::span<const std::int64_t> observed, std::span<const double> expected,
                          double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("observed and expected must have the same non-zero length");
    const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::int64_t{0}));
    if (total <= 0) throw std::invalid_argument("no observations");
    // Pool left to right; a short last group is merged into the previous one.
    std::vector<std::pair<double, double>> cells;  // (observed, expected count)
    double o = 0, e = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o += static_cast<double>(observed[i]);
        e += expected[i] * total;
        if (e >= min_expected) {
            cells.emplace_back(o, e);
            o = e = 0;
        }
    }
    if (e > 0 || o > 0) {
        if (cells.empty())
            cells.emplace_back(o, e);
        else {
            cells.back().first += o;
            cells.back().second += e;
        }
    }
    TestResult r;
    if (cells.size() < 2) {
        r.p_value = 1.0;
        return r;
    }
    for (auto [ob, ex] : cells) r.statistic += (ob - ex) * (ob - ex) / ex;
    r.dof = static_cast<double>(cells.size() - 1);
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
    return r;
}

TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0;
    for (int k = 1; k <= 200; ++k) {
        const double term = 2 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-16) break;
    }
    TestResult r;
    r.statistic = d;
    r.p_value = std::clamp(p, 0.0, 1.0);
    if (lambda < 0.2) r.p_value = 1.0;
    return r;
}

double dkw_epsilon(std::int64_t n, double alpha) {
    if (n <= 0 || !(alpha > 0 && alpha < 1)) throw std::invalid_argument("dkw_epsilon needs n > 0, alpha in (0,1)");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

std::vector<double> binomial_pmf(std::int64_t n, double p) {
    const boost::math::binomial_distribution<double> d(static_cast<double>(n), p);
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k) out[static_cast<std::size_t>(k)] = boost::math::pdf(d, static_cast<double>(k));
    return out;
}

}  // namespace cbp::stats
