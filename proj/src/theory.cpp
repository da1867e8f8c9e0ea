#include "cbp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

namespace cbp::theory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double factorial(int r) { return boost::math::factorial<double>(static_cast<unsigned>(r)); }

template <class F>
double gk(F&& f, double a, double b, double tol = 1e-13, unsigned depth = 30) {
    double err = 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol, &err);
}

bool decoupled(Regime r) { return r == Regime::QEqualsG || r == Regime::GMuchLessQMuchLessPInv; }

double beta_1d(const BetaSpec& spec, Color c, double x) {
    return c == Color::Red ? beta(spec, c, x, 0.0) : beta(spec, c, 0.0, x);
}

template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-13) {
    // Requires f(lo) and f(hi) of opposite sign.
    const bool lo_pos = f(lo) > 0;
    for (int i = 0; i < 400 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(mid) > 0) == lo_pos)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Aitken delta-squared on three equally ratioed samples of a converging sequence.
double aitken(double s0, double s1, double s2) {
    const double d1 = s1 - s0;
    const double d2 = s2 - s1;
    const double den = d2 - d1;
    if (std::abs(den) < 1e-300 || std::abs(d2) < 1e-15) return s2;
    const double est = s2 - d2 * d2 / den;
    const double lo = std::min(s2, s2 + 10 * d2);
    const double hi = std::max(s2, s2 + 10 * d2);
    return std::clamp(est, lo, hi);
}

}  // namespace

void BetaSpec::check() const {
    if (r < 2) throw DomainError("threshold r must be at least 2");
    if (!(alpha_B > 0.0) || !(alpha_R > alpha_B)) throw DomainError("need alpha_R > alpha_B > 0");
    if (std::abs(alpha_R - alpha_B) <= RegimeSpec::kAlphaTieTolerance * std::max(alpha_R, alpha_B))
        throw DomainError("alpha_R and alpha_B tie");
    if (!(truncation_tol > 0.0 && truncation_tol <= 1e-6)) throw DomainError("truncation_tol must lie in (0, 1e-6]");
}

double c_r(int r) {
    const double rr = r;
    return std::pow(1.0 - 1.0 / rr, rr - 1.0) / rr;
}

double skellam_tail(double lambda_1, double lambda_2, int r, double tol) {
    if (lambda_1 < 0 || lambda_2 < 0) throw DomainError("Poisson means must be non-negative");
    auto upper = [&](double j) {  // P(Po(lambda_1) >= r + j)
        return lambda_1 == 0.0 ? 0.0 : boost::math::gamma_p(static_cast<double>(r) + j, lambda_1);
    };
    if (lambda_2 == 0.0) return upper(0.0);
    const double mode = std::floor(lambda_2);
    const double log_pmf_mode = -lambda_2 + mode * std::log(lambda_2) - std::lgamma(mode + 1.0);
    const double pmf_mode = std::exp(log_pmf_mode);
    double sum = pmf_mode * upper(mode);
    // Upward from the mode.
    double pmf = pmf_mode;
    for (double j = mode + 1;; j += 1) {
        pmf *= lambda_2 / j;
        sum += pmf * upper(j);
        const double ratio = lambda_2 / (j + 1);
        if (ratio < 1 && pmf * ratio / (1 - ratio) < 0.5 * tol) break;
        if (pmf == 0.0) break;
    }
    // Downward.
    pmf = pmf_mode;
    for (double j = mode - 1; j >= 0; j -= 1) {
        pmf *= (j + 1) / lambda_2;
        sum += pmf * upper(j);
        const double ratio = j / lambda_2;
        if (j == 0 || (ratio < 1 && pmf * ratio / (1 - ratio) < 0.5 * tol)) break;
    }
    return std::min(sum, 1.0);
}

double beta(const BetaSpec& spec, Color c, double x_R, double x_B) {
    if (!(x_R >= 0.0) || !(x_B >= 0.0)) throw DomainError("beta needs non-negative arguments");
    const double xs = c == Color::Red ? x_R : x_B;
    const double xo = c == Color::Red ? x_B : x_R;
    const double as = spec.alpha(c);
    const double ao = spec.alpha(other(c));
    switch (spec.regime) {
        case Regime::QEqualsG: return c_r(spec.r) * std::pow(xs + as, spec.r) - xs;
        case Regime::GMuchLessQMuchLessPInv: return std::pow(xs + as, spec.r) / factorial(spec.r);
        case Regime::QEqualsPInv: return skellam_tail(xs + as, xo + ao, spec.r, spec.truncation_tol);
        case Regime::PInvMuchLessQMuchLessN: return (xs + as) / (x_R + x_B + as + ao) >= 0.5 ? 1.0 : 0.0;
    }
    return 0.0;
}

Vec2 beta(const BetaSpec& spec, double x_R, double x_B) {
    return {beta(spec, Color::Red, x_R, x_B), beta(spec, Color::Black, x_R, x_B)};
}

Zeros beta_zeros(const BetaSpec& spec, Color c) {
    if (spec.regime != Regime::QEqualsG) throw DomainError("zeros of beta exist only for q = g");
    const double a = spec.alpha(c);
    const int r = spec.r;
    const double cr = c_r(r);
    auto phi = [&](double x) { return cr * std::pow(x + a, r) - x; };
    const double x_min = std::pow(1.0 / (cr * r), 1.0 / (r - 1)) - a;
    if (x_min <= 0) return {};
    const double v = phi(x_min);
    const double tangent_tol = 1e-13 * std::max(1.0, x_min);
    if (v > tangent_tol) return {};
    if (std::abs(v) <= tangent_tol) return {x_min, x_min};
    // phi > 0 on [0, z): keep the endpoint on that side so 1/beta has no pole below z.
    double lo = 0.0, up = x_min;
    while (true) {
        const double mid = 0.5 * (lo + up);
        if (mid <= lo || mid >= up) break;
        (phi(mid) > 0 ? lo : up) = mid;
    }
    const double z = lo;
    double hi = 2 * x_min + 1;
    while (phi(hi) < 0) hi *= 2;
    const double w = bisect(phi, x_min, hi);
    return {z, w};
}

Zeros beta_zeros_r2(double alpha) {
    if (alpha > 1) return {};
    const double s = 2 * std::sqrt(1 - alpha);
    return {alpha * alpha / (2 - alpha + s), 2 - alpha + s};
}

double h_closed(double alpha, int r, double x) {
    const double base = std::pow(alpha, 1.0 - r) - (r - 1) * x / factorial(r);
    if (base <= 0) return kInf;
    return std::pow(base, -1.0 / (r - 1)) - alpha;
}

double kappa_h(double alpha, int r) { return factorial(r) / ((r - 1) * std::pow(alpha, r - 1)); }

namespace {

// Integral of dy/beta_S from 0 to z(1 - e^{-v}). Past v = 15 the integrand is flat up to O(z e^{-v}).
double zero_side_integral(const BetaSpec& spec, Color c, double zz, double v) {
    constexpr double v_cut = 15.0;
    auto integrand = [&](double s) { return zz * std::exp(-s) / beta_1d(spec, c, zz * -std::expm1(-s)); };
    if (v <= v_cut) return gk(integrand, 0.0, v);
    return gk(integrand, 0.0, v_cut) + (v - v_cut) * integrand(v_cut);
}

}  // namespace

double reciprocal_integral(const BetaSpec& spec, Color c, double upper) {
    spec.check();
    if (!decoupled(spec.regime)) throw DomainError("reciprocal integral needs a decoupled regime (q << 1/p)");
    if (!(upper >= 0)) throw DomainError("upper limit must be non-negative");
    if (upper == 0) return 0.0;
    std::optional<double> z;
    if (spec.regime == Regime::QEqualsG) z = beta_zeros(spec, c).z;
    if (z) {
        if (upper >= *z) throw DomainError("reciprocal integral diverges at the zero of beta");
        // y = z (1 - e^{-v}) turns the logarithmic end singularity into a smooth integrand.
        const double v_max = -std::log1p(-upper / *z);
        return zero_side_integral(spec, c, *z, v_max);
    }
    if (std::isinf(upper)) {
        return gk(
            [&](double u) {
                const double y = u / (1 - u);
                return 1.0 / (beta_1d(spec, c, y) * (1 - u) * (1 - u));
            },
            0.0, 1.0);
    }
    return gk([&](double y) { return 1.0 / beta_1d(spec, c, y); }, 0.0, upper);
}

double solve_terminal(const BetaSpec& spec, Color c, double kappa) {
    spec.check();
    if (!decoupled(spec.regime)) throw DomainError("terminal value by quadrature needs a decoupled regime");
    if (!(kappa >= 0)) throw DomainError("kappa must be non-negative");
    if (kappa == 0) return 0.0;
    std::optional<double> z;
    if (spec.regime == Regime::QEqualsG) z = beta_zeros(spec, c).z;
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    if (z) {
        const double zz = *z;
        auto integral_v = [&](double v) { return zero_side_integral(spec, c, zz, v); };
        double hi = 1.0;
        while (integral_v(hi) < kappa) hi *= 2;
        auto [lo_v, hi_v] =
            boost::math::tools::toms748_solve([&](double v) { return integral_v(v) - kappa; }, 0.0, hi, tol, iters);
        const double v = 0.5 * (lo_v + hi_v);
        return zz * -std::expm1(-v);
    }
    const double total = reciprocal_integral(spec, c, kInf);
    if (kappa >= total) throw DomainError("kappa lies beyond the blow-up of this component");
    double hi = 1.0;
    while (reciprocal_integral(spec, c, hi) < kappa) hi *= 2;
    auto [lo_g, hi_g] = boost::math::tools::toms748_solve(
        [&](double g) { return reciprocal_integral(spec, c, g) - kappa; }, 0.0, hi, tol, iters);
    return 0.5 * (lo_g + hi_g);
}

std::optional<double> kappa_g(const BetaSpec& spec) {
    spec.check();
    switch (spec.regime) {
        case Regime::QEqualsG:
            if (spec.alpha_R <= 1) return std::nullopt;
            return reciprocal_integral(spec, Color::Red, kInf);
        case Regime::GMuchLessQMuchLessPInv: return reciprocal_integral(spec, Color::Red, kInf);
        default: return std::nullopt;
    }
}

std::optional<double> kappa_f(const BetaSpec& spec) {
    spec.check();
    if (spec.regime == Regime::QEqualsG && spec.alpha_R <= 1)
        return *beta_zeros(spec, Color::Red).z + *beta_zeros(spec, Color::Black).z;
    return std::nullopt;
}

Vec2 OdeSolution::value_at(double x) const {
    if (analytic) {
        if (x < 0 || x > grid.back()) throw std::out_of_range("outside the stored solution");
        return {x, 0.0};
    }
    // Borrow the Hermite routine without copying the arrays.
    if (grid.empty() || x < grid.front() || x > grid.back()) throw std::out_of_range("outside the stored solution");
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.end() ? grid.size() - 1 : static_cast<std::size_t>(it - grid.begin());
    if (i == 0) return values.front();
    --i;
    if (i + 1 >= grid.size()) return values.back();
    const double h = grid[i + 1] - grid[i];
    const double s = (x - grid[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    Vec2 out{};
    for (int c = 0; c < 2; ++c)
        out[c] = h00 * values[i][c] + h10 * h * derivatives[i][c] + h01 * values[i + 1][c] +
                 h11 * h * derivatives[i + 1][c];
    return out;
}

namespace {

OdeSolution analytic_indicator(double x_max) {
    OdeSolution sol;
    sol.analytic = true;
    const int points = 101;
    for (int i = 0; i < points; ++i) {
        const double x = x_max * i / (points - 1);
        sol.grid.push_back(x);
        sol.values.push_back({x, 0.0});
        sol.derivatives.push_back({1.0, 0.0});
    }
    sol.kappa = std::nullopt;
    sol.terminal_B = 0.0;
    sol.ode_terminal_B = 0.0;
    return sol;
}

OdeSolution from_dense(DenseTrajectory&& d) {
    OdeSolution sol;
    sol.grid = std::move(d.x);
    sol.values = std::move(d.y);
    sol.derivatives = std::move(d.dy);
    sol.ode_terminal_B = sol.values.back()[1];
    return sol;
}

// Limit of the B component when kappa is infinite and no closed form exists.
double extrapolated_b(const OdeSolution& s) {
    const double x2 = s.x_end();
    return aitken(s.value_at(x2 / 4)[1], s.value_at(x2 / 2)[1], s.value_at(x2)[1]);
}

}  // namespace

OdeSolution solve_g(const BetaSpec& spec, double x_max, const SolveOptions& options) {
    spec.check();
    if (!(x_max > 0)) throw DomainError("x_max must be positive");
    if (spec.regime == Regime::PInvMuchLessQMuchLessN) return analytic_indicator(x_max);
    OdeOptions ode = options.ode;
    const double ceiling = options.ceiling;
    ode.stop = [ceiling](double, const Vec2& y) { return y[0] > ceiling; };
    const auto kg = kappa_g(spec);
    double end = x_max;
    if (kg) end = std::min(x_max, *kg);
    auto dense = integrate_dp45([&](double, const Vec2& y) { return beta(spec, std::max(y[0], 0.0), std::max(y[1], 0.0)); },
                                0.0, {0.0, 0.0}, end, ode);
    const bool blew_up = dense.stopped;
    auto sol = from_dense(std::move(dense));
    sol.kappa = kg;
    if (kg) {
        sol.terminal_B = solve_terminal(spec, Color::Black, *kg);
    } else if (spec.regime == Regime::QEqualsG) {
        sol.terminal_B = *beta_zeros(spec, Color::Black).z;
    } else {
        sol.terminal_B = extrapolated_b(sol);
        sol.terminal_B_estimated = true;
    }
    if (blew_up && !kg) throw IntegrationFailure("blow-up detected where the integral predicts none");
    return sol;
}

OdeSolution solve_f(const BetaSpec& spec, double x_max, const SolveOptions& options) {
    spec.check();
    if (!(x_max > 0)) throw DomainError("x_max must be positive");
    if (spec.regime == Regime::PInvMuchLessQMuchLessN) return analytic_indicator(x_max);
    const auto kf = kappa_f(spec);
    double end = x_max;
    if (kf) end = std::min(x_max, *kf * (1 - 1e-9));
    OdeOptions ode = options.ode;
    ode.stop = [&](double, const Vec2& y) {
        const auto b = beta(spec, std::max(y[0], 0.0), std::max(y[1], 0.0));
        return b[0] + b[1] < 1e-14;
    };
    auto dense = integrate_dp45(
        [&](double, const Vec2& y) {
            const auto b = beta(spec, std::max(y[0], 0.0), std::max(y[1], 0.0));
            const double s = b[0] + b[1];
            if (s <= 0) return Vec2{0.0, 0.0};
            return Vec2{b[0] / s, b[1] / s};
        },
        0.0, {0.0, 0.0}, end, ode);
    auto sol = from_dense(std::move(dense));
    sol.kappa = kf;
    if (kf) {
        sol.terminal_B = *beta_zeros(spec, Color::Black).z;
    } else if (const auto kg = kappa_g(spec)) {
        sol.terminal_B = solve_terminal(spec, Color::Black, *kg);
    } else {
        sol.terminal_B = extrapolated_b(sol);
        sol.terminal_B_estimated = true;
    }
    return sol;
}

OdeSolution solve_f_transfer(const BetaSpec& spec, double x_max, int points, const SolveOptions& options) {
    spec.check();
    if (!decoupled(spec.regime)) throw DomainError("the transfer route is only available for q << 1/p");
    if (points < 2) throw DomainError("need at least two grid points");
    const auto kf = kappa_f(spec);
    const double x_top = kf ? std::min(x_max, *kf * (1 - 1e-7)) : x_max;
    const auto kg = kappa_g(spec);
    OdeOptions ode = options.ode;
    const double ceiling = options.ceiling;
    ode.stop = [=](double, const Vec2& y) { return y[0] + y[1] > x_top || y[0] > ceiling; };
    const double horizon = kg ? *kg : 1e3;
    const auto g = integrate_dp45(
        [&](double, const Vec2& y) { return beta(spec, std::max(y[0], 0.0), std::max(y[1], 0.0)); }, 0.0,
        {0.0, 0.0}, horizon, ode);
    const auto zsum = [&](double y) {
        const auto v = g.value_at(y);
        return v[0] + v[1];
    };
    if (zsum(g.x_back()) < x_top) throw IntegrationFailure("g did not reach the requested range of z = g_R + g_B");
    OdeSolution sol;
    for (int i = 0; i < points; ++i) {
        const double x = x_top * i / (points - 1);
        double lo = 0, hi = g.x_back();
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (zsum(mid) < x ? lo : hi) = mid;
        }
        const auto v = g.value_at(0.5 * (lo + hi));
        const auto b = beta(spec, std::max(v[0], 0.0), std::max(v[1], 0.0));
        const double s = b[0] + b[1];
        sol.grid.push_back(x);
        sol.values.push_back(v);
        sol.derivatives.push_back(s > 0 ? Vec2{b[0] / s, b[1] / s} : Vec2{0.0, 0.0});
    }
    sol.kappa = kf;
    sol.ode_terminal_B = sol.values.back()[1];
    sol.terminal_B = kf ? *beta_zeros(spec, Color::Black).z : solve_terminal(spec, Color::Black, *kg);
    return sol;
}

double eta(Regime regime, std::int64_t n, double p, double q, int r) {
    if (n <= 0 || !(p > 0) || !(q > 0)) throw DomainError("eta needs n, p, q > 0");
    switch (regime) {
        case Regime::QEqualsG: return 1.0;
        case Regime::GMuchLessQMuchLessPInv: return static_cast<double>(n) * std::pow(q * p, r) / q;
        case Regime::QEqualsPInv:
        case Regime::PInvMuchLessQMuchLessN: return static_cast<double>(n) / q;
    }
    return 1.0;
}

double timing_tau(const BetaSpec& spec, const OdeSolution& f, double kappa, double tol) {
    if (!(kappa >= 0)) throw DomainError("kappa must be non-negative");
    if (f.kappa && kappa >= *f.kappa) throw DomainError("kappa must lie below kappa_f");
    if (kappa > f.x_end() * (1 + 1e-12)) throw DomainError("kappa lies beyond the stored solution of f");
    if (kappa == 0) return 0.0;
    const double top = std::min(kappa, f.x_end());
    return gk(
        [&](double x) {
            const auto v = f.value_at(std::min(x, top));
            const auto b = beta(spec, std::max(v[0], 0.0), std::max(v[1], 0.0));
            return 1.0 / (b[0] + b[1]);
        },
        0.0, top, tol);
}

double timing_tau(const BetaSpec& spec, double kappa, double tol) {
    if (const auto kf = kappa_f(spec); kf && kappa >= *kf) throw DomainError("kappa must lie below kappa_f");
    if (kappa == 0) return 0.0;
    const auto f = solve_f(spec, kappa);
    return timing_tau(spec, f, kappa, tol);
}

double timing_tau_color(const BetaSpec& spec, const OdeSolution& f, Color c, double kappa_S, double tol) {
    const int i = idx(c);
    if (!(kappa_S >= 0)) throw DomainError("kappa_S must be non-negative");
    if (kappa_S == 0) return 0.0;
    if (f.values.back()[i] < kappa_S) throw DomainError("kappa_S beyond the stored range of f_S");
    double lo = 0, hi = f.x_end();
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f.value_at(mid)[i] < kappa_S ? lo : hi) = mid;
    }
    return timing_tau(spec, f, 0.5 * (lo + hi), tol);
}

double separable_time(const BetaSpec& spec, Color c, double kappa_S) { return reciprocal_integral(spec, c, kappa_S); }

TheoryPrediction closed_form_r2(double alpha_R, double alpha_B) {
    if (!(alpha_R > 1)) throw DomainError("closed forms need alpha_R > 1");
    if (!(alpha_B > 0) || !(alpha_R > alpha_B)) throw DomainError("need alpha_R > alpha_B > 0");
    if (alpha_B == 1.0) throw DomainError("alpha_B = 1 is only handled by the numeric route");
    constexpr double pi = std::numbers::pi;
    TheoryPrediction t;
    t.regime = Regime::QEqualsG;
    t.r = 2;
    t.alpha_R = alpha_R;
    t.alpha_B = alpha_B;
    const double sr = std::sqrt(alpha_R - 1);
    const double tail_R = pi / 2 - std::atan((alpha_R - 2) / (2 * sr));
    const double kg = 2 / sr * tail_R;
    t.kappa_g = kg;
    double G = 0;
    if (alpha_B < 1) {
        const auto zw = beta_zeros_r2(alpha_B);
        t.z_B = zw.z;
        t.w_B = zw.w;
        const double s = std::sqrt(1 - alpha_B);
        const double inv_xi = std::exp(-kg * s);  // 1 / xi, avoids overflow for large kappa_g
        G = alpha_B * alpha_B * (1 - inv_xi) / ((2 - alpha_B) * (1 - inv_xi) + 2 * s * (1 + inv_xi));
        if (!(G <= *t.z_B * (1 + 1e-12))) throw std::logic_error("g_B(kappa_g) is not below z_B");
    } else {
        const double sb = std::sqrt(alpha_B - 1);
        const double xi_p = std::atan((alpha_B - 2) / (2 * sb)) + std::sqrt((alpha_B - 1) / (alpha_R - 1)) * tail_R;
        G = 2 + 2 * sb * std::tan(xi_p) - alpha_B;
    }
    t.g_B_at_kappa_g = G;
    t.kappa_f = std::nullopt;
    t.lim_f_R = kInf;
    t.lim_f_B = G;
    t.limit_AR_over_scale = 1.0;
    t.ar_scale = "n";
    t.limit_AB_over_q = G + alpha_B;
    t.ab_statement = "limit";
    t.eta = 1.0;
    return t;
}

TheoryPrediction predict(const BetaSpec& spec, std::optional<std::int64_t> n, std::optional<double> p,
                         std::optional<double> q) {
    spec.check();
    TheoryPrediction t;
    t.regime = spec.regime;
    t.r = spec.r;
    t.alpha_R = spec.alpha_R;
    t.alpha_B = spec.alpha_B;
    if (spec.regime == Regime::QEqualsG) {
        t.z_R = beta_zeros(spec, Color::Red).z;
        const auto zb = beta_zeros(spec, Color::Black);
        t.z_B = zb.z;
        t.w_B = zb.w;
    }
    t.kappa_g = kappa_g(spec);
    if (t.kappa_g) t.g_B_at_kappa_g = solve_terminal(spec, Color::Black, *t.kappa_g);
    t.kappa_f = kappa_f(spec);
    t.limit_AR_over_scale = 1.0;
    t.ar_scale = "n";
    switch (spec.regime) {
        case Regime::QEqualsG:
            if (spec.alpha_R <= 1) {
                t.lim_f_R = *t.z_R;
                t.lim_f_B = *t.z_B;
                t.limit_AR_over_scale = *t.z_R + spec.alpha_R;
                t.ar_scale = "q";
            } else {
                t.lim_f_R = kInf;
                t.lim_f_B = *t.g_B_at_kappa_g;
            }
            t.ab_statement = "limit";
            break;
        case Regime::GMuchLessQMuchLessPInv:
            t.lim_f_R = kInf;
            t.lim_f_B = *t.g_B_at_kappa_g;
            t.ab_statement = "liminf";
            break;
        case Regime::QEqualsPInv: {
            SolveOptions opt;
            opt.ode.max_step = 1.0;
            const auto f = solve_f(spec, 1e3, opt);
            t.lim_f_R = kInf;
            t.lim_f_B = f.terminal_B;
            t.lim_f_B_estimated = true;
            t.ab_statement = "fluid";
            break;
        }
        case Regime::PInvMuchLessQMuchLessN:
            t.lim_f_R = kInf;
            t.lim_f_B = 0.0;
            t.ab_statement = "fluid";
            break;
    }
    t.limit_AB_over_q = t.lim_f_B + spec.alpha_B;
    if (n && p && q) t.eta = eta(spec.regime, *n, *p, *q, spec.r);
    return t;
}

double pi_S(const ModelParams& params, Color c, std::int64_t k_R, std::int64_t k_B) {
    if (k_R < 0 || k_B < 0) throw DomainError("activation counts must be non-negative");
    const auto m_s = static_cast<double>((c == Color::Red ? k_R + params.a_R : k_B + params.a_B));
    const auto m_o = static_cast<double>((c == Color::Red ? k_B + params.a_B : k_R + params.a_R));
    const boost::math::binomial_distribution<double> ds(m_s, params.p), dob(m_o, params.p);
    double sum = 0;
    for (double j = 0; j <= m_o; j += 1) {
        const double need = params.r + j;
        if (need > m_s) break;
        sum += boost::math::pdf(dob, j) * boost::math::cdf(boost::math::complement(ds, need - 1));
    }
    return sum;
}

double zeta(double x) {
    if (!(x >= 0)) throw DomainError("zeta is defined for x >= 0");
    if (x == 0) return 1.0;
    return 1 - x + x * std::log(x);
}

double tail_bound(TailKind kind, double m_or_lambda, double q, double k) {
    double mu = m_or_lambda;
    if (kind != TailKind::PoissonLower) {
        if (!(q >= 0 && q <= 1) || !(m_or_lambda >= 0)) throw DomainError("binomial bound needs m >= 0, q in [0,1]");
        mu = m_or_lambda * q;
    }
    if (!(mu > 0)) throw DomainError("tail bounds need a positive mean");
    if (!(k >= 0)) throw DomainError("k must be non-negative");
    switch (kind) {
        case TailKind::BinomialUpper:
            if (k < mu) throw DomainError("upper-tail bound needs k >= mu");
            return std::exp(-mu * zeta(k / mu));
        case TailKind::BinomialUpperLarge:
            if (k < std::exp(2.0) * mu) throw DomainError("large-deviation bound needs k >= e^2 mu");
            return std::exp(-(k / 2) * std::log(k / mu));
        case TailKind::BinomialLower:
        case TailKind::PoissonLower:
            if (k > mu) throw DomainError("lower-tail bound needs k <= mean");
            return std::exp(-mu * zeta(k / mu));
    }
    return 1.0;
}

TableRow table_row(const BetaSpec& spec) {
    const auto t = predict(spec);
    TableRow row;
    switch (spec.regime) {
        case Regime::QEqualsG:
            row.label = spec.alpha_R <= 1 ? "(i)" : "(ii)";
            row.parameters = spec.alpha_R <= 1 ? "q=g, alpha_R<1" : "q=g, alpha_R>1";
            break;
        case Regime::GMuchLessQMuchLessPInv:
            row.label = "(iii)";
            row.parameters = "g<<q<<1/p";
            break;
        case Regime::QEqualsPInv:
            row.label = "(iv)";
            row.parameters = "q=1/p";
            break;
        case Regime::PInvMuchLessQMuchLessN:
            row.label = "(v)";
            row.parameters = "1/p<<q<<n";
            break;
    }
    row.kappa_f = t.kappa_f;
    row.lim_f_R = t.lim_f_R;
    row.lim_f_B = t.lim_f_B;
    row.estimated = t.lim_f_B_estimated;
    return row;
}

}  // namespace cbp::theory
