#pragma once

#include <vector>

namespace isoreg {

// Continuous piecewise-linear function on [0, inf) with f(0) = 0.
// breakpoints[k] is the left endpoint of segment k; slopes[k] applies on
// [breakpoints[k], breakpoints[k+1]).  The last slope extends beyond the
// last knot.  breakpoints[0] must be 0 and the knots strictly increasing.
struct PiecewiseLinearFn {
    std::vector<double> breakpoints;
    std::vector<double> slopes;

    PiecewiseLinearFn() = default;
    PiecewiseLinearFn(std::vector<double> bp, std::vector<double> sl);

    // Single-slope convenience: f(x) = slope * x.
    static PiecewiseLinearFn linear(double slope);

    double operator()(double x) const;

    // True when every slope is >= 0 (the function is nondecreasing).
    bool nondecreasing() const;

    // sup over [0, x_max]; for nondecreasing functions this is f(x_max).
    double max_on(double x_max) const;

    void validate() const;
};

double eval_piecewise(const PiecewiseLinearFn& f, double x);

} // namespace isoreg
