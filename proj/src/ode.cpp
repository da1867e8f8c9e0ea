#include "cbp/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cbp {

Vec2 DenseTrajectory::value_at(double t) const {
    if (x.empty() || t < x.front() || t > x.back()) throw std::out_of_range("dense output queried outside its range");
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = it == x.end() ? x.size() - 1 : static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    --i;
    if (i + 1 >= x.size()) return y.back();
    const double h = x[i + 1] - x[i];
    const double s = (t - x[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    Vec2 out{};
    for (int c = 0; c < 2; ++c)
        out[c] = h00 * y[i][c] + h10 * h * dy[i][c] + h01 * y[i + 1][c] + h11 * h * dy[i + 1][c];
    return out;
}

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool finite(const Vec2& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); }

}  // namespace

DenseTrajectory integrate_dp45(const std::function<Vec2(double, const Vec2&)>& rhs, double x0, Vec2 y0,
                               double x_end, const OdeOptions& opt) {
    if (!(x_end >= x0)) throw std::invalid_argument("integration interval is reversed");
    DenseTrajectory out;
    Vec2 k1 = rhs(x0, y0);
    if (!finite(k1)) throw IntegrationFailure("right-hand side is not finite at the initial point");
    out.x.push_back(x0);
    out.y.push_back(y0);
    out.dy.push_back(k1);
    if (opt.stop && opt.stop(x0, y0)) {
        out.stopped = true;
        return out;
    }
    double x = x0;
    Vec2 y = y0;
    double h = std::min(opt.initial_step, opt.max_step);
    std::int64_t steps = 0;
    auto axpy = [](const Vec2& base, double hh, std::initializer_list<std::pair<double, const Vec2*>> terms) {
        Vec2 r = base;
        for (auto [c, v] : terms)
            for (int i = 0; i < 2; ++i) r[i] += hh * c * (*v)[i];
        return r;
    };
    while (x < x_end) {
        if (++steps > opt.max_steps) throw IntegrationFailure("step budget exhausted");
        h = std::min({h, opt.max_step, x_end - x});
        if (h <= 1e-15 * std::max(1.0, std::abs(x)))
            throw IntegrationFailure("step size underflow at x = " + std::to_string(x));
        const Vec2 k2 = rhs(x + c2 * h, axpy(y, h, {{a21, &k1}}));
        const Vec2 k3 = rhs(x + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        const Vec2 k4 = rhs(x + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Vec2 k5 = rhs(x + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Vec2 k6 = rhs(x + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const Vec2 y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const Vec2 k7 = finite(y_new) ? rhs(x + h, y_new) : Vec2{NAN, NAN};
        double err = 0;
        bool ok = finite(y_new) && finite(k7) && finite(k2) && finite(k3) && finite(k4) && finite(k5) && finite(k6);
        if (ok) {
            for (int i = 0; i < 2; ++i) {
                const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / 2);
        }
        if (!ok || err > 1.0) {
            h *= ok ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
            continue;
        }
        x = x + h;
        y = y_new;
        k1 = k7;
        out.x.push_back(x);
        out.y.push_back(y);
        out.dy.push_back(k1);
        if (opt.stop && opt.stop(x, y)) {
            out.stopped = true;
            break;
        }
        h *= err == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    }
    return out;
}

}  // namespace cbp
