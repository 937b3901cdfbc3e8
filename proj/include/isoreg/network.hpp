#pragma once

#include <functional>
#include <span>
#include <vector>

#include "isoreg/producer.hpp"

namespace isoreg {

struct NodeSpec {
    int id = 0;           // 1-based
    double demand = 0.0;  // MWh per unit time
    double capacity = 0.0;
};

struct EdgeSpec {
    int from = 0;
    int to = 0;
    double resistance = 0.0; // quadratic loss coefficient per MWh
    double flow_min = 0.0;
    double flow_max = 0.0;
};

struct NetworkSpec {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
    void validate() const;
};

// One dispatch decision: production per node and flow per edge.
struct Plan {
    std::vector<double> q;
    std::vector<double> phi;
};

// Solves the nodal balance identity for q given flows:
// q_i = D_i + (1/2) sum_{e in K_i} r_e phi_e^2 - sum_{e in K_i} phi_e sgn(e,i),
// with sgn(e,i) = +1 if e enters node i and -1 if it leaves.
std::vector<double> induced_production(const NetworkSpec& net,
                                       std::span<const double> phi);

// residual_i = q_i + sum phi_e sgn(e,i) - (1/2) sum r_e phi_e^2 - D_i.
std::vector<double> balance_residual(const NetworkSpec& net, const Plan& plan);

// Balance within tol, productions inside [0, Q_i], flows inside their box.
bool is_feasible(const NetworkSpec& net, const Plan& plan, double tol);

// All feasible plans with flows on the box grid with `resolution` points per
// edge (resolution >= 2).  Output order is lexicographic in the flow vector.
std::vector<Plan> plan_grid(const NetworkSpec& net, int resolution);

struct SearchOptions {
    int flow_steps = 25;          // grid points per edge in the coarse sweep
    double refine_step = 1e-2;    // coordinate-descent target step (MWh)
    double feas_tol = 1e-6;
};

// Minimum-cost dispatch: minimizes sum_i c_i(q_i) over the feasible set,
// flows being the decision variables (q eliminated through the balance).
// Coarse grid sweep plus coordinate-descent refinement; ties broken by the
// lexicographically smallest flow vector.
Plan min_cost_dispatch(const NetworkSpec& net,
                       std::span<const ProducerSpec> producers,
                       double tol,
                       const SearchOptions& opts = {});

// Shared search driver: minimizes `objective` over feasible plans (coarse
// grid sweep, then pattern-search refinement over flows).  The objective may
// return a non-finite value to reject a candidate.
Plan minimize_over_plans(const NetworkSpec& net,
                         const std::function<double(const Plan&)>& objective,
                         const SearchOptions& opts);

struct RefinedPlan {
    Plan plan;
    double value = 0.0;
};

// Pattern search on the flow box from `start`: polls the {-1,0,1}^|E|
// direction set (coordinate and diagonal moves), halving the step until it
// drops below `target_step`.  Productions are re-induced at every poll and
// box-checked before the objective is consulted.
RefinedPlan refine_over_flows(const NetworkSpec& net,
                              const std::function<double(const Plan&)>& objective,
                              Plan start, double start_value, double step,
                              double target_step);

} // namespace isoreg
