#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "isoreg/closed_form.hpp"
#include "isoreg/hjb.hpp"
#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"

namespace isoreg {

struct SimConfig {
    long n_paths = 2000;
    double dt = 0.0; // 0 = auto: horizon / 1000
    std::uint64_t seed = 1;
    bool antithetic = false;
    int store_paths = 32;          // full trajectories kept for export
    double max_clamped_frac = 1e-3; // grid-exit budget before validation fails
    int threads = 1;
};

struct CostEstimate {
    double mean = 0.0;
    double se = 0.0; // sample stdev / sqrt(n)
    long n = 0;
};

// Monte Carlo output.  Estimator inputs are stored per path; full
// trajectories only for the first `store_paths` paths.
struct PathBundle {
    int n_producers = 0;
    bool regulated = false;
    double dt = 0.0;
    double horizon = 0.0;

    std::vector<double> times; // store grid, n_steps + 1 entries

    // Sampled trajectories: sample_L[k][step]; sample_Y/sample_a are indexed
    // [k][i * (n_steps+1) + step].
    std::vector<std::vector<double>> sample_L;
    std::vector<std::vector<double>> sample_Y;
    std::vector<std::vector<double>> sample_a;

    std::vector<double> xi;              // [path * N + i], terminal payments
    std::vector<double> agent_outlay;    // [path * N + i], int (h_i + c_i) dt
    std::vector<double> production_cost; // per path, int sum c_i dt
    std::vector<double> pollution_cost;  // per path, int Lambda(L - ell0) dt
    std::vector<double> effort_cost;     // per path, int sum h_i dt
    std::vector<double> terminal_L;      // per path
    std::vector<double> recon_rel_err;   // per path, contract reconstruction

    long clamped_steps = 0;
    long total_steps = 0;
    double clamped_fraction() const {
        return total_steps == 0 ? 0.0
                                : static_cast<double>(clamped_steps) / total_steps;
    }
};

// Feedback policy interface used by the simulator.
struct PolicyDecision {
    std::vector<double> z, q, a;
    std::vector<double> phi;
    double drift = 0.0; // sum_i (1 - a_i) p_i(q_i)
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::size_t n_producers() const = 0;
    // Fills `out`; returns true when the state had to be clamped into grid.
    virtual bool decide(double t, double ell, PolicyDecision& out) const = 0;
};

// Looks up the optimizer fields stored in a value surface (snapped node).
class SurfacePolicy final : public Policy {
public:
    SurfacePolicy(const ValueSurface& surface,
                  std::span<const ProducerSpec> producers);
    std::size_t n_producers() const override;
    bool decide(double t, double ell, PolicyDecision& out) const override;

private:
    const ValueSurface& surface_;
    std::span<const ProducerSpec> producers_;
};

// Exact policy of the explicitly solvable fixed-plan problem.
class ClosedFormPolicy final : public Policy {
public:
    ClosedFormPolicy(ExplicitSpec spec, Plan plan,
                     std::span<const ProducerSpec> producers);
    std::size_t n_producers() const override;
    bool decide(double t, double ell, PolicyDecision& out) const override;

private:
    ExplicitSpec spec_;
    Plan plan_;
    std::span<const ProducerSpec> producers_;
};

// Fixed plan, zero sensitivities and efforts (the no-regulation benchmark).
class FixedPlanPolicy final : public Policy {
public:
    FixedPlanPolicy(Plan plan, std::span<const ProducerSpec> producers);
    std::size_t n_producers() const override;
    bool decide(double t, double ell, PolicyDecision& out) const override;

private:
    Plan plan_;
    std::span<const ProducerSpec> producers_;
    double drift_ = 0.0;
};

// Euler-Maruyama under the producers' equilibrium measure; certainty
// equivalents advanced alongside the pollution path, terminal payments
// xi_i = Y_T^i, starting from y0_i = -(1/rho) log(-R0_i).
PathBundle simulate_policy(const Policy& policy,
                           std::span<const ProducerSpec> producers,
                           const MarketParams& params, const SimConfig& cfg,
                           double l0, bool regulated);

PathBundle simulate_regulated(const ValueSurface& surface,
                              const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params, const SimConfig& cfg,
                              double l0);

PathBundle simulate_unregulated(const NetworkSpec& net,
                                std::span<const ProducerSpec> producers,
                                const MarketParams& params, const Plan& plan,
                                const SimConfig& cfg, double l0);

// Mean and standard error of the realized social cost:
// sum_i int c_i + int Lambda(L - ell0) + sum_i xi_i (payments only when
// the bundle is regulated).
CostEstimate estimate_social_cost(const PathBundle& bundle,
                                  const MarketParams& params);

CostEstimate estimate_production_cost(const PathBundle& bundle);
CostEstimate estimate_pollution_increment(const PathBundle& bundle, double l0);

// Monte Carlo mean of U_A(xi_i - int (h_i + c_i) dt); the contract pins it
// to U_A(y0_i) for every producer.
CostEstimate verify_agent_value(const PathBundle& bundle,
                                std::span<const ProducerSpec> producers,
                                const MarketParams& params, std::size_t i);

struct EffortPerturbation {
    enum class Kind { offset, force_zero };
    Kind kind = Kind::offset;
    double delta = 0.0;
};

struct DeviationResult {
    CostEstimate equilibrium; // mean utility of producer i at equilibrium
    CostEstimate deviated;    // same under the unilateral deviation
    CostEstimate difference;  // paired deviated - equilibrium
};

// Replays paired paths with common noise, producer i's effort shifted and
// the pollution drift simulated under the deviated measure.  The contract
// keeps paying the equilibrium terms, evaluated along the deviated path.
DeviationResult deviation_test(const Policy& policy,
                               std::span<const ProducerSpec> producers,
                               const MarketParams& params, const SimConfig& cfg,
                               double l0, std::size_t producer,
                               const EffortPerturbation& pert);

// CSV writers for the CLI: trajectories and the estimator table.
void write_paths_csv(const PathBundle& bundle, const std::string& path);
void write_summary_csv(const PathBundle& bundle, const MarketParams& params,
                       const std::string& path);

} // namespace isoreg
