#pragma once

#include <span>
#include <vector>

#include "isoreg/piecewise.hpp"

namespace isoreg {

// Cost of the emission-reduction effort, defined on the interval [0, a_max].
// Either quadratic, h(a) = (curvature/2) a^2, or a tabulated convex function
// evaluated by linear interpolation between samples.
struct EffortCost {
    enum class Kind { quadratic, tabulated };

    Kind kind = Kind::quadratic;
    double curvature = 1.0;
    double a_max = 1.0;
    std::vector<double> sample_a; // tabulated abscissae, sample_a.front() == 0
    std::vector<double> sample_h; // tabulated values, sample_h.front() == 0

    static EffortCost quadratic(double curvature, double a_max);
    static EffortCost tabulated(std::vector<double> a, std::vector<double> h);

    double operator()(double a) const;
    double max_cost() const; // h(a_max)
    void validate() const;
};

struct ProducerSpec {
    PiecewiseLinearFn cost;      // dollars per unit time, argument in MWh
    PiecewiseLinearFn pollution; // tons CO2 per unit time, argument in MWh
    EffortCost effort;
    double capacity = 0.0; // MWh per unit time

    double max_pollution() const { return pollution.max_on(capacity); }
    double max_cost() const { return cost.max_on(capacity); }
    void validate() const;
};

// Social cost of deviating from the pollution target: either linear,
// rate * x, or rectified, rate * max(x, 0).  The rectified form has a kink
// at 0 whose derivative is taken as 0.
struct SocialCostFn {
    enum class Kind { linear, rectified };

    Kind kind = Kind::rectified;
    double rate = 0.0;

    double operator()(double x) const;
    double derivative(double x) const;
    // Upper bound for |derivative| everywhere; feeds the solver's alpha scale.
    double slope_bound() const { return rate < 0 ? -rate : rate; }
};

struct MarketParams {
    double rho = 1.0;   // CARA risk aversion, > 0
    double sigma = 1.0; // pollution volatility, > 0
    SocialCostFn social_cost;
    double ell0 = 0.0;    // pollution target
    double horizon = 1.0; // T, > 0
    std::vector<double> reservations; // R0_i < 0, one per producer

    void validate(std::size_t n_producers) const;
    // y0_i = -(1/rho) log(-R0_i), the certainty equivalent granted at t=0.
    double initial_certainty_equivalent(std::size_t i) const;
};

double cara_utility(double rho, double x);
double certainty_equivalent(double rho, double u);

// Unique minimizer over [0, a_max] of  h_i(a) - z_i (1 - a) p_i(q_i).
// Quadratic costs use the closed clamp formula; tabulated costs are solved
// by scan plus golden-section refinement to 1e-10 in effort units.
double best_effort(const ProducerSpec& prod, double q_i, double z_i);

// Drift vector of the certainty-equivalent processes:
// f_i = h_i(a*_i) + c_i(q_i) - z_i sum_j (1-a*_j) p_j(q_j) + (rho sigma^2/2) z_i^2.
std::vector<double> generator_f(std::span<const ProducerSpec> producers,
                                const MarketParams& params,
                                std::span<const double> q,
                                std::span<const double> z);

} // namespace isoreg
