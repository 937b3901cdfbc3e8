#pragma once

#include <span>
#include <string>
#include <vector>

#include "isoreg/hjb.hpp"
#include "isoreg/network.hpp"

namespace isoreg {

struct ConstantPlanOptions {
    int flow_steps = 10;   // sweep grid points per edge
    int coarse_ratio = 4;  // fine-to-coarse grid reduction for the sweep
    int finalists = 8;     // candidates re-scored on the fine grid
    double refine_step = 0.01; // coordinate-descent target step on flows
    int threads = 1;
};

// v^d-hat(q, phi): fixed-plan value surface evaluated at (0, L0).  The
// reservation-utility constant is reported separately by the caller.
double evaluate_vd(const NetworkSpec& net,
                   std::span<const ProducerSpec> producers,
                   const MarketParams& params, const Plan& plan,
                   const Grid& grid, double l0,
                   const SolverOptions& solver_opts = {});

struct VdCandidate {
    Plan plan;
    double coarse_value = 0.0;
};

struct VdResult {
    Plan plan;
    double value = 0.0; // fine-grid value of the selected plan
    std::vector<VdCandidate> sweep;
};

// Coarse sweep over the feasible plan grid (each candidate scored by a
// fixed-plan solve on a coarsened grid), re-scoring of the best candidates
// on the fine grid, then local flow refinement around the winner.
VdResult optimize_vd(const NetworkSpec& net,
                     std::span<const ProducerSpec> producers,
                     const MarketParams& params, const Grid& fine_grid,
                     double l0, const ConstantPlanOptions& opts = {},
                     const SolverOptions& solver_opts = {});

void write_sweep_csv(const VdResult& result, const std::string& path);

} // namespace isoreg
