#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta with standard step-size control.
// State must support +, scalar *, and an error norm supplied by the caller.

#include "../errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace opacav::detail {

template <class State>
struct DopriStep {
    State y;
    State err;
};

/// One Dormand-Prince step of size h from (t, y). Returns the 5th-order
/// solution and the embedded error estimate.
template <class State, class Rhs>
DopriStep<State> dopri_step(const Rhs& f, double t, const State& y, double h)
{
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const State k1 = f(t, y);
    const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
    const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
    const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 =
        f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 +
                                            a65 * k5)));
    State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + h, y5);
    State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    return {std::move(y5), std::move(err)};
}

struct AdaptiveOptions {
    double rtol = 1e-8;
    double atol = 1e-12;
    double h_init = 0.0;   // 0: start from the whole interval
    double h_max = 0.0;    // 0: unbounded
    long max_steps = 10000000;
};

/// Integrates y from t0 to t1 with step-size control. `norm(err, y)` must
/// return the error scaled by atol + rtol|y| (accept when <= 1). `h` carries
/// the step size across calls.
template <class State, class Rhs, class Norm>
State integrate_adaptive(const Rhs& f, const Norm& norm, double t0, double t1, State y,
                         double& h, const AdaptiveOptions& opt)
{
    if (t1 <= t0)
        return y;
    if (!(h > 0.0))
        h = opt.h_init > 0.0 ? opt.h_init : (t1 - t0);
    double t = t0;
    long steps = 0;
    while (t < t1) {
        if (++steps > opt.max_steps)
            throw Error("adaptive integrator exceeded its step budget");
        double step = std::min(h, t1 - t);
        if (opt.h_max > 0.0)
            step = std::min(step, opt.h_max);
        const auto trial = dopri_step(f, t, y, step);
        const double e = norm(trial.err, y);
        if (e <= 1.0 || step < 1e-14 * std::max(1.0, std::abs(t))) {
            t = (step == t1 - t) ? t1 : t + step;
            y = trial.y;
        }
        const double factor = e > 0.0 ? 0.9 * std::pow(e, -0.2) : 5.0;
        h = step * std::clamp(factor, 0.2, 5.0);
    }
    return y;
}

} // namespace opacav::detail
