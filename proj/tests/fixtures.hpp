#pragma once

// Shared scenario fixtures for the test suite.

#include <vector>

#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"

namespace fixtures {

using namespace isoreg;

// Three-region market with solar/coal/gas technology stacks.
inline NetworkSpec chilean_net() {
    NetworkSpec net;
    net.nodes = {{1, 3000.0, 6000.0}, {2, 1000.0, 2000.0}, {3, 6000.0, 12000.0}};
    net.edges = {{1, 2, 1e-5, 0.0, 6000.0},
                 {1, 3, 1e-5, 0.0, 6000.0},
                 {2, 3, 1e-5, 0.0, 6000.0}};
    return net;
}

inline ProducerSpec tech_producer(std::vector<double> bp, double capacity) {
    ProducerSpec p;
    p.cost = PiecewiseLinearFn(bp, {0.0, 40.0, 80.0});
    p.pollution = PiecewiseLinearFn(std::move(bp), {0.0, 1.0, 0.5});
    p.effort = EffortCost::quadratic(30000.0, 0.3);
    p.capacity = capacity;
    return p;
}

inline std::vector<ProducerSpec> chilean_producers() {
    return {tech_producer({0.0, 1800.0, 3600.0}, 6000.0),
            tech_producer({0.0, 200.0, 1000.0}, 2000.0),
            tech_producer({0.0, 2400.0, 3600.0}, 12000.0)};
}

inline MarketParams chilean_market(double rho = 1.0) {
    MarketParams m;
    m.rho = rho;
    m.sigma = 200.0;
    m.social_cost = {SocialCostFn::Kind::rectified, 5.0};
    m.ell0 = 1.0e7;
    m.horizon = 2160.0;
    m.reservations = {-1.0, -1.0, -1.0};
    return m;
}

// Single producer, p(q) = q, c = 0, quadratic effort: the explicitly
// solvable configuration with lambda = p = q = h = sigma = rho = T = 1.
inline NetworkSpec toy_net() {
    NetworkSpec net;
    net.nodes = {{1, 1.0, 2.0}};
    return net;
}

inline std::vector<ProducerSpec> toy_producers(double a_max = 0.9,
                                               double curvature = 1.0) {
    ProducerSpec p;
    p.cost = PiecewiseLinearFn::linear(0.0);
    p.pollution = PiecewiseLinearFn::linear(1.0);
    p.effort = EffortCost::quadratic(curvature, a_max);
    p.capacity = 2.0;
    return {p};
}

inline MarketParams toy_market() {
    MarketParams m;
    m.rho = 1.0;
    m.sigma = 1.0;
    m.social_cost = {SocialCostFn::Kind::linear, 1.0};
    m.ell0 = 10.0;
    m.horizon = 1.0;
    m.reservations = {-1.0};
    return m;
}

// Two nodes, one line, rectified social cost: small enough for brute force.
inline NetworkSpec pair_net() {
    NetworkSpec net;
    net.nodes = {{1, 5.0, 12.0}, {2, 10.0, 12.0}};
    net.edges = {{1, 2, 0.01, 0.0, 4.0}};
    return net;
}

inline std::vector<ProducerSpec> pair_producers() {
    ProducerSpec a;
    a.cost = PiecewiseLinearFn({0.0, 6.0}, {2.0, 5.0});
    a.pollution = PiecewiseLinearFn::linear(1.0);
    a.effort = EffortCost::quadratic(2.0, 0.5);
    a.capacity = 12.0;
    ProducerSpec b;
    b.cost = PiecewiseLinearFn::linear(4.0);
    b.pollution = PiecewiseLinearFn::linear(0.8);
    b.effort = EffortCost::quadratic(3.0, 0.4);
    b.capacity = 12.0;
    return {a, b};
}

inline MarketParams pair_market() {
    MarketParams m;
    m.rho = 0.5;
    m.sigma = 0.8;
    m.social_cost = {SocialCostFn::Kind::rectified, 2.0};
    m.ell0 = 2.0;
    m.horizon = 1.0;
    m.reservations = {-1.0, -1.0};
    return m;
}

} // namespace fixtures
