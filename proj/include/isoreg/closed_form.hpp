#pragma once

#include <span>
#include <vector>

#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"

namespace isoreg {

// Data of the explicitly solvable fixed-plan problem: linear social cost
// rate*x, linear pollution p_i * q, quadratic effort cost (h_i/2) a^2.
struct ExplicitProducer {
    double p = 0.0;     // pollution slope (tons per MWh)
    double q = 0.0;     // fixed production (MWh per unit time)
    double h = 0.0;     // effort-cost curvature
    double a_max = 0.0; // effort interval [0, a_max]
    double cost = 0.0;  // production cost c_i(q_i), dollars per unit time
};

struct ExplicitSpec {
    std::vector<ExplicitProducer> producers;
    double lambda = 0.0; // social cost rate
    double sigma = 0.0;
    double rho = 0.0;
    double T = 0.0;
    double ell0 = 0.0;

    void validate() const;

    double pq(std::size_t i) const { return producers[i].p * producers[i].q; }
    // z_i = lambda (p_i q_i)^2 / (sigma^2 rho h_i + (p_i q_i)^2)
    double z_coefficient(std::size_t i) const;
    // M_i = a_max h_i (sigma^2 rho h_i + (p_i q_i)^2) / (p_i q_i)^3
    double regime_margin(std::size_t i) const;

    double mu() const; // sum p_i q_i
    double C() const;  // sum (p_i q_i)^4 / (2 h_i (sigma^2 rho h_i + (p_i q_i)^2))
    double D() const;  // 2 sum c_i(q_i)

    // Builds the explicit data from model objects; requires linear social
    // cost, single-slope pollution functions, and quadratic effort costs.
    static ExplicitSpec from_model(std::span<const ProducerSpec> producers,
                                   const MarketParams& params, const Plan& plan);
};

// Per-producer margins M_i; the regime is valid iff min_i M_i >= lambda T.
struct RegimeCheck {
    std::vector<double> margins;
    bool valid = false;
};
RegimeCheck check_regime(const ExplicitSpec& spec);

struct ClosedPolicyPoint {
    std::vector<double> z; // Z*_s = z_i (s - T)
    std::vector<double> a; // a*_s = (T - s) z_i p_i q_i / h_i
};
ClosedPolicyPoint closed_policy(const ExplicitSpec& spec, double s);

// v(t, ell) = D (T-t) + lambda (ell - ell0)(T-t)
//           + (lambda mu / 2)(T-t)^2 - (C lambda^2 / 3)(T-t)^3.
double closed_value(const ExplicitSpec& spec, double t, double ell);

} // namespace isoreg
