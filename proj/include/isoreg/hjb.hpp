#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "isoreg/hamiltonian.hpp"
#include "isoreg/network.hpp"
#include "isoreg/producer.hpp"

namespace isoreg {

// Grid request; NaN bounds and n_t = 0 are resolved from the model.
struct GridSpec {
    double ell_min = std::nan("");
    double ell_max = std::nan("");
    int n_ell = 600;
    int n_t = 0;
};

// Resolved time-pollution grid.
struct Grid {
    double ell_min = 0.0;
    double ell_max = 1.0;
    int n_ell = 3;
    int n_t = 1;
    double T = 1.0;

    double dl() const { return (ell_max - ell_min) / (n_ell - 1); }
    double dt() const { return T / n_t; }
    double ell_at(int j) const { return ell_min + j * dl(); }
    double t_at(int n) const { return n * dt(); }
};

struct SolverOptions {
    SearchOptions search{};     // plan search used inside the Hamiltonian
    double alpha_quantum = 0.0; // 0 = auto: slope_bound * T / 4096
    int min_auto_nt = 8;        // refuse grids whose stable step count is lower
    double domain_sigmas = 4.0; // diffusion padding in units of sigma sqrt(T)
    bool store_policy = true;   // skip the optimizer fields for value-only solves
};

// Stability bound for the explicit scheme: dt <= dl^2 / (sigma^2 + dl * b),
// with drift bound b = N * max_i sup p_i.
double stable_dt(double dl, double sigma, double drift_bound);

// Alpha quantization step the solvers use for Hamiltonian memoization
// (auto: slope_bound * T / 4096 unless overridden in the options).
double solver_alpha_quantum(const MarketParams& params, const SolverOptions& opts);

// Fills unset grid fields: the spatial domain from the drift cone of the
// feasible set plus diffusion padding, and n_t from the stability bound.
// Throws StabilityError when a pinned n_t violates the bound or when the
// stable step count is degenerate.
Grid resolve_grid(const GridSpec& spec, const NetworkSpec& net,
                  std::span<const ProducerSpec> producers,
                  const MarketParams& params, double l0,
                  const SolverOptions& opts = {});

// Value surface with the optimizer fields stored at every node.
// Arrays are row-major over (time slice, space index).
struct ValueSurface {
    Grid grid;
    std::size_t n_producers = 0;
    std::size_t n_edges = 0;

    std::vector<double> v;     // (n_t+1) * n_ell
    std::vector<double> v_ell; // one-sided slope used by the sweep
    std::vector<double> pol_z; // (n_t+1) * n_ell * n_producers
    std::vector<double> pol_q;
    std::vector<double> pol_a;
    std::vector<double> pol_phi; // (n_t+1) * n_ell * n_edges
    std::vector<double> pol_drift;

    std::size_t node(int n, int j) const {
        return static_cast<std::size_t>(n) * grid.n_ell + j;
    }

    // Time slice whose policy governs [t_n, t_{n+1}); nearest space node.
    int time_index(double t) const;
    int ell_index(double ell, bool* clamped = nullptr) const;

    struct Sample {
        double value = 0.0;
        double slope = 0.0;
    };
    // Bilinear interpolation; throws InputError outside the grid.
    Sample value_at(double t, double ell) const;

    // Policy columns at the snapped node.
    struct PolicyView {
        std::span<const double> z, q, a, phi;
        double drift = 0.0;
    };
    PolicyView policy_at(double t, double ell, bool* clamped = nullptr) const;

    // CSV columns: t, ell, v, v_ell, z_star_*, q_star_*, phi_star_*, a_star_*.
    void write_csv(const std::string& path, int time_stride = 1,
                   int ell_stride = 1) const;
};

// Backward sweep for the general problem (plans re-optimized at every slope).
ValueSurface solve_general(const NetworkSpec& net,
                           std::span<const ProducerSpec> producers,
                           const MarketParams& params, const Grid& grid,
                           const SolverOptions& opts = {});

// Same scheme with the plan frozen; only the sensitivities are optimized.
ValueSurface solve_fixed_plan(const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params, const Plan& plan,
                              const Grid& grid, const SolverOptions& opts = {});

} // namespace isoreg
