#pragma once

#include <string>
#include <vector>

#include "isoreg/constant_plan.hpp"
#include "isoreg/hjb.hpp"
#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"
#include "isoreg/simulate.hpp"

namespace isoreg {

// A scenario file bundles the network, the producers, the market data and
// the numerical defaults.  See README.md for the JSON schema.
struct Scenario {
    std::string name;
    NetworkSpec network;
    std::vector<ProducerSpec> producers;
    MarketParams market;
    double initial_pollution = 0.0;
    GridSpec grid;
    SimConfig sim;
    SearchOptions search;
    ConstantPlanOptions constant_plan;
    double alpha_quantum = 0.0; // 0 = auto

    SolverOptions solver_options() const {
        SolverOptions opts;
        opts.search = search;
        opts.alpha_quantum = alpha_quantum;
        return opts;
    }
    void validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin);

} // namespace isoreg
