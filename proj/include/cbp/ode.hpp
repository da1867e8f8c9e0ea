#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cbp {

using Vec2 = std::array<double, 2>;

class IntegrationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 1e-4;
    /// Caps the step so that the cubic Hermite dense output stays accurate.
    double max_step = 0.01;
    std::int64_t max_steps = 20'000'000;
    /// Checked after every accepted step; returning true ends the integration there.
    std::function<bool(double, const Vec2&)> stop;
};

/// Accepted steps of an integration with the right-hand side at each node.
struct DenseTrajectory {
    std::vector<double> x;
    std::vector<Vec2> y;
    std::vector<Vec2> dy;
    bool stopped = false;  // the stop predicate fired before x_end

    double x_front() const { return x.front(); }
    double x_back() const { return x.back(); }
    /// Cubic Hermite interpolation between accepted steps. Throws std::out_of_range
    /// outside [x_front, x_back].
    Vec2 value_at(double t) const;
};

/// Dormand-Prince 5(4) with standard PI-free step control.
/// Throws IntegrationFailure when the step size underflows or the step budget is exhausted.
DenseTrajectory integrate_dp45(const std::function<Vec2(double, const Vec2&)>& rhs, double x0, Vec2 y0,
                               double x_end, const OdeOptions& options = {});

}  // namespace cbp
