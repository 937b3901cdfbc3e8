#include "isoreg/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {
// Slack for tiny negative abscissae produced by floating-point plan algebra.
constexpr double kNegativeSlack = 1e-9;
} // namespace

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> bp, std::vector<double> sl)
    : breakpoints(std::move(bp)), slopes(std::move(sl)) {
    validate();
}

PiecewiseLinearFn PiecewiseLinearFn::linear(double slope) {
    return PiecewiseLinearFn({0.0}, {slope});
}

void PiecewiseLinearFn::validate() const {
    if (breakpoints.empty() || breakpoints.size() != slopes.size())
        throw InputError("piecewise: need one slope per breakpoint");
    if (breakpoints.front() != 0.0)
        throw InputError("piecewise: first breakpoint must be 0");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
        if (!(breakpoints[k] > breakpoints[k - 1]))
            throw InputError("piecewise: breakpoints must be strictly increasing");
    for (double s : slopes)
        if (!std::isfinite(s))
            throw InputError("piecewise: slope not finite");
}

double PiecewiseLinearFn::operator()(double x) const {
    if (x < 0.0) {
        if (x >= -kNegativeSlack)
            x = 0.0;
        else
            throw InputError("piecewise: negative argument " + std::to_string(x));
    }
    double value = 0.0;
    std::size_t k = 0;
    while (k + 1 < breakpoints.size() && x > breakpoints[k + 1]) {
        value += slopes[k] * (breakpoints[k + 1] - breakpoints[k]);
        ++k;
    }
    return value + slopes[k] * (x - breakpoints[k]);
}

bool PiecewiseLinearFn::nondecreasing() const {
    return std::all_of(slopes.begin(), slopes.end(), [](double s) { return s >= 0.0; });
}

double PiecewiseLinearFn::max_on(double x_max) const {
    // Evaluate at every knot below x_max and at x_max itself.
    double best = 0.0;
    for (double b : breakpoints)
        if (b <= x_max) best = std::max(best, (*this)(b));
    best = std::max(best, (*this)(x_max));
    return best;
}

double eval_piecewise(const PiecewiseLinearFn& f, double x) {
    return f(x);
}

} // namespace isoreg
