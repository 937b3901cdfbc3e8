#pragma once

#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"

namespace isoreg {

// Minimizer of the running Hamiltonian g at a given value-function slope.
struct OptimizerSelection {
    std::vector<double> z_star;      // sensitivity per producer
    Plan plan_star;                  // feasible production/flow pair
    std::vector<double> effort_star; // best responses at (plan_star, z_star)
    double g_value = 0.0;            // min of g over (z, q, phi)
    double drift = 0.0;              // sum_i (1 - a*_i) p_i(q*_i)
};

struct InnerZResult {
    double z = 0.0;
    double value = 0.0; // alpha (1-a*) p + h(a*) + (rho sigma^2/2) z^2 at the min
};

// Per-producer inner minimization over the sensitivity z.  Quadratic effort
// costs use the closed clamp formula
//   z* = clamp(-alpha p^2 / (sigma^2 rho h + p^2), [-h a_max / p, 0]);
// tabulated costs are solved by scan plus golden-section refinement.
InnerZResult inner_z_min(const ProducerSpec& prod, const MarketParams& params,
                         double alpha, double q_i);

// sum_i [ inner_z_min(alpha, q_i).value + 2 c_i(q_i) ] for a feasible plan.
double plan_objective(const NetworkSpec& net,
                      std::span<const ProducerSpec> producers,
                      const MarketParams& params,
                      double alpha, const Plan& plan,
                      double feas_tol = 1e-6);

// Joint minimization of g over sensitivities and feasible plans: grid sweep
// over flows with local refinement, the inner z solved per producer.
OptimizerSelection minimize_g(const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params,
                              double alpha,
                              const SearchOptions& opts = {});

// Full Hamiltonian G(ell, alpha, gamma) =
//   min g + (1/2) gamma sigma^2 + Lambda(ell - ell0).
double hamiltonian_G(const NetworkSpec& net,
                     std::span<const ProducerSpec> producers,
                     const MarketParams& params,
                     double ell, double alpha, double gamma,
                     const SearchOptions& opts = {});

// Memoizing front end for minimize_g.  Queries snap to multiples of the
// alpha quantum, so the backward sweep reuses selections across nodes and
// time slices.  Thread-safe for concurrent lookups.
class HamiltonianOracle {
public:
    HamiltonianOracle(const NetworkSpec& net,
                      std::span<const ProducerSpec> producers,
                      const MarketParams& params,
                      const SearchOptions& opts,
                      double alpha_quantum);

    // Selection at the quantized slope.  The reference stays valid for the
    // oracle's lifetime (node-based map, values never erased).
    const OptimizerSelection& at(double alpha) const;

    double quantum() const { return quantum_; }
    // Largest zero-effort drift over the coarse feasible plan grid; used to
    // size the solver's spatial domain.
    double max_feasible_drift() const { return max_drift_; }

private:
    const NetworkSpec& net_;
    std::span<const ProducerSpec> producers_;
    const MarketParams& params_;
    SearchOptions opts_;
    double quantum_;
    double max_drift_ = 0.0;

    struct CachedPlan {
        Plan plan;
        std::vector<double> pol; // p_i(q_i)
        double cost2 = 0.0;      // 2 sum_i c_i(q_i)
    };
    std::vector<CachedPlan> grid_;

    mutable std::mutex mutex_;
    mutable std::unordered_map<long long, OptimizerSelection> memo_;

    OptimizerSelection compute(double alpha) const;
};

// Fixed-plan variant: only z is optimized, the plan is frozen.
struct FixedPlanHamiltonian {
    FixedPlanHamiltonian(std::span<const ProducerSpec> producers,
                         const MarketParams& params, Plan plan);

    OptimizerSelection at(double alpha) const;
    const Plan& plan() const { return plan_; }

private:
    std::span<const ProducerSpec> producers_;
    const MarketParams& params_;
    Plan plan_;
    std::vector<double> pol_;
    double cost2_ = 0.0;
};

} // namespace isoreg
