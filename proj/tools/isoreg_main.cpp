// Command-line front end: loads a scenario file, runs the requested
// pipeline and writes CSV artifacts.
//
// Exit codes: 0 success, 2 configuration/input error, 3 infeasibility,
// 4 stability refusal, 5 validation failure, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isoreg/config.hpp"
#include "isoreg/constant_plan.hpp"
#include "isoreg/errors.hpp"
#include "isoreg/hjb.hpp"
#include "isoreg/network.hpp"
#include "isoreg/simulate.hpp"

namespace {

using namespace isoreg;

std::string out_dir_default() {
    const char* env = std::getenv("ISOREG_OUT");
    return env ? env : ".";
}

std::string join(const std::string& dir, const std::string& file) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / file).string();
}

void apply_grid_overrides(GridSpec& grid, int n_ell, int n_t, double ell_min,
                          double ell_max) {
    if (n_ell > 0) grid.n_ell = n_ell;
    if (n_t > 0) grid.n_t = n_t;
    if (!std::isnan(ell_min)) grid.ell_min = ell_min;
    if (!std::isnan(ell_max)) grid.ell_max = ell_max;
}

Plan plan_from_flows(const Scenario& sc, const std::vector<double>& flows) {
    if (flows.empty()) {
        return min_cost_dispatch(sc.network, sc.producers, sc.search.feas_tol,
                                 sc.search);
    }
    if (flows.size() != sc.network.edge_count())
        throw InputError("--flows needs one value per edge");
    Plan plan{induced_production(sc.network, flows), flows};
    if (!is_feasible(sc.network, plan, sc.search.feas_tol))
        throw InfeasibleError("--flows induces an infeasible plan");
    return plan;
}

int cmd_dispatch(const std::string& config, const std::string& out_dir) {
    const Scenario sc = load_scenario(config);
    const Plan plan =
        min_cost_dispatch(sc.network, sc.producers, sc.search.feas_tol, sc.search);

    double cost = 0.0, drift = 0.0, losses = 0.0;
    for (std::size_t i = 0; i < sc.producers.size(); ++i) {
        cost += sc.producers[i].cost(plan.q[i]);
        drift += sc.producers[i].pollution(plan.q[i]);
        losses += plan.q[i] - sc.network.nodes[i].demand;
    }

    const std::string path = join(out_dir, "dispatch.csv");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("cannot open " + path);
    std::fprintf(f, "node,q,demand,cost,pollution\n");
    for (std::size_t i = 0; i < sc.producers.size(); ++i)
        std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%.17g\n", i + 1, plan.q[i],
                     sc.network.nodes[i].demand, sc.producers[i].cost(plan.q[i]),
                     sc.producers[i].pollution(plan.q[i]));
    std::fprintf(f, "\n");
    std::fprintf(f, "edge,phi\n");
    for (std::size_t e = 0; e < plan.phi.size(); ++e)
        std::fprintf(f, "%zu,%.17g\n", e + 1, plan.phi[e]);
    std::fclose(f);

    std::printf("dispatch: cost %.6g $/h, pollution %.6g t/h, losses %.6g MWh/h\n",
                cost, drift, losses);
    std::printf("q =");
    for (double q : plan.q) std::printf(" %.6g", q);
    std::printf("\nphi =");
    for (double phi : plan.phi) std::printf(" %.6g", phi);
    std::printf("\nwrote %s\n", path.c_str());
    return 0;
}

int cmd_solve(const std::string& config, const std::string& out_dir,
              bool fixed_plan, const std::vector<double>& flows, int n_ell,
              int n_t, double ell_min, double ell_max, bool full_surface,
              int threads) {
    Scenario sc = load_scenario(config);
    apply_grid_overrides(sc.grid, n_ell, n_t, ell_min, ell_max);
    SolverOptions opts = sc.solver_options();
    (void)threads;

    const Grid grid = resolve_grid(sc.grid, sc.network, sc.producers, sc.market,
                                   sc.initial_pollution, opts);
    ValueSurface surface;
    std::string label;
    if (fixed_plan || !flows.empty()) {
        const Plan plan = plan_from_flows(sc, flows);
        surface = solve_fixed_plan(sc.network, sc.producers, sc.market, plan,
                                   grid, opts);
        label = "fixed-plan";
    } else {
        surface = solve_general(sc.network, sc.producers, sc.market, grid, opts);
        label = "general";
    }

    // Keep the default export around 200 time slices; --full-surface dumps
    // every node.
    const int stride =
        full_surface ? 1 : std::max(1, (grid.n_t + 1) / 200);
    const std::string path = join(out_dir, "surface.csv");
    surface.write_csv(path, stride, 1);

    const auto at0 = surface.value_at(0.0, sc.initial_pollution);
    double reservation_shift = 0.0;
    for (std::size_t i = 0; i < sc.producers.size(); ++i)
        reservation_shift -= std::log(-sc.market.reservations[i]) / sc.market.rho;
    std::printf("%s value surface on [%g, %g] x [0, %g], %d x %d nodes\n",
                label.c_str(), grid.ell_min, grid.ell_max, grid.T, grid.n_ell,
                grid.n_t + 1);
    std::printf("v_hat(0, L0) = %.10g  (slope %.10g)\n", at0.value, at0.slope);
    std::printf("reservation shift sum_i y0_i = %.10g; total value %.10g\n",
                -reservation_shift, at0.value - reservation_shift);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_simulate(const std::string& config, const std::string& out_dir,
                 const std::string& policy_kind, long paths, double dt,
                 std::uint64_t seed, bool seed_set, int threads) {
    Scenario sc = load_scenario(config);
    if (paths > 0) sc.sim.n_paths = paths;
    if (dt > 0) sc.sim.dt = dt;
    if (seed_set) sc.sim.seed = seed;
    sc.sim.threads = threads;
    SolverOptions opts = sc.solver_options();

    PathBundle bundle;
    if (policy_kind == "fixed" || policy_kind == "none") {
        const Plan plan = min_cost_dispatch(sc.network, sc.producers,
                                            sc.search.feas_tol, sc.search);
        bundle = simulate_unregulated(sc.network, sc.producers, sc.market, plan,
                                      sc.sim, sc.initial_pollution);
    } else if (policy_kind == "optimal") {
        const Grid grid = resolve_grid(sc.grid, sc.network, sc.producers,
                                       sc.market, sc.initial_pollution, opts);
        const ValueSurface surface =
            solve_general(sc.network, sc.producers, sc.market, grid, opts);
        bundle = simulate_regulated(surface, sc.network, sc.producers, sc.market,
                                    sc.sim, sc.initial_pollution);
    } else if (policy_kind == "closed") {
        const Plan plan = min_cost_dispatch(sc.network, sc.producers,
                                            sc.search.feas_tol, sc.search);
        const ExplicitSpec spec =
            ExplicitSpec::from_model(sc.producers, sc.market, plan);
        ClosedFormPolicy policy(spec, plan, sc.producers);
        bundle = simulate_policy(policy, sc.producers, sc.market, sc.sim,
                                 sc.initial_pollution, true);
    } else {
        throw InputError("--policy must be optimal, fixed or closed");
    }

    const std::string paths_csv = join(out_dir, "paths.csv");
    const std::string summary_csv = join(out_dir, "summary.csv");
    write_paths_csv(bundle, paths_csv);
    write_summary_csv(bundle, sc.market, summary_csv);

    const CostEstimate cost = estimate_social_cost(bundle, sc.market);
    const CostEstimate inc =
        estimate_pollution_increment(bundle, sc.initial_pollution);
    std::printf("policy %s, %ld paths, dt %.6g\n", policy_kind.c_str(),
                sc.sim.n_paths, bundle.dt);
    std::printf("social cost %.10g (se %.4g)\n", cost.mean, cost.se);
    std::printf("pollution increment %.10g (se %.4g)\n", inc.mean, inc.se);
    std::printf("clamped fraction %.3g\n", bundle.clamped_fraction());
    std::printf("wrote %s and %s\n", paths_csv.c_str(), summary_csv.c_str());
    return 0;
}

int cmd_constant_plan(const std::string& config, const std::string& out_dir,
                      int threads) {
    Scenario sc = load_scenario(config);
    SolverOptions opts = sc.solver_options();
    ConstantPlanOptions copts = sc.constant_plan;
    copts.threads = threads;

    const Grid grid = resolve_grid(sc.grid, sc.network, sc.producers, sc.market,
                                   sc.initial_pollution, opts);
    const VdResult result = optimize_vd(sc.network, sc.producers, sc.market,
                                        grid, sc.initial_pollution, copts, opts);

    const std::string path = join(out_dir, "constant_plan.csv");
    write_sweep_csv(result, path);
    {
        const std::string best_path = join(out_dir, "constant_plan_best.csv");
        std::FILE* f = std::fopen(best_path.c_str(), "w");
        if (!f) throw InputError("cannot open " + best_path);
        for (std::size_t i = 1; i <= result.plan.q.size(); ++i)
            std::fprintf(f, "q_%zu,", i);
        for (std::size_t e = 1; e <= result.plan.phi.size(); ++e)
            std::fprintf(f, "phi_%zu,", e);
        std::fprintf(f, "value\n");
        for (double q : result.plan.q) std::fprintf(f, "%.17g,", q);
        for (double phi : result.plan.phi) std::fprintf(f, "%.17g,", phi);
        std::fprintf(f, "%.17g\n", result.value);
        std::fclose(f);
    }
    std::printf("V^d = %.10g at\nq =", result.value);
    for (double q : result.plan.q) std::printf(" %.6g", q);
    std::printf("\nphi =");
    for (double phi : result.plan.phi) std::printf(" %.6g", phi);
    std::printf("\nwrote %s\n", path.c_str());
    return 0;
}

int cmd_sensitivity(const std::string& config, const std::string& out_dir,
                    const std::string& param, const std::vector<double>& values,
                    int threads) {
    if (param != "sigma") throw InputError("--param currently supports: sigma");
    if (values.empty()) throw InputError("--values must not be empty");

    Scenario sc = load_scenario(config);
    sc.sim.threads = threads;

    const std::string summary_path = join(out_dir, "sensitivity.csv");
    std::FILE* f = std::fopen(summary_path.c_str(), "w");
    if (!f) throw InputError("cannot open " + summary_path);
    std::fprintf(f, "sigma,value,social_cost,social_cost_se,mean_effort,"
                    "pollution_increment\n");

    for (double sigma : values) {
        Scenario run = sc;
        run.market.sigma = sigma;
        SolverOptions opts = run.solver_options();
        const Grid grid = resolve_grid(run.grid, run.network, run.producers,
                                       run.market, run.initial_pollution, opts);
        const ValueSurface surface =
            solve_general(run.network, run.producers, run.market, grid, opts);
        const PathBundle bundle =
            simulate_regulated(surface, run.network, run.producers, run.market,
                               run.sim, run.initial_pollution);

        // Mean effort/production curves across the stored sample paths.
        const std::size_t steps1 = bundle.times.size();
        char name[64];
        std::snprintf(name, sizeof(name), "curves_sigma_%g.csv", sigma);
        const std::string curve_path = join(out_dir, name);
        std::FILE* cf = std::fopen(curve_path.c_str(), "w");
        if (!cf) throw InputError("cannot open " + curve_path);
        std::fprintf(cf, "t");
        for (int i = 1; i <= bundle.n_producers; ++i) std::fprintf(cf, ",mean_a_%d", i);
        std::fprintf(cf, ",mean_L\n");
        double effort_integral = 0.0;
        for (std::size_t k = 0; k < steps1; ++k) {
            std::fprintf(cf, "%.17g", bundle.times[k]);
            double mean_L = 0.0;
            for (int i = 0; i < bundle.n_producers; ++i) {
                double mean_a = 0.0;
                for (const auto& sa : bundle.sample_a)
                    mean_a += sa[i * steps1 + k];
                mean_a /= std::max<std::size_t>(1, bundle.sample_a.size());
                effort_integral += mean_a;
                std::fprintf(cf, ",%.17g", mean_a);
            }
            for (const auto& sl : bundle.sample_L) mean_L += sl[k];
            mean_L /= std::max<std::size_t>(1, bundle.sample_L.size());
            std::fprintf(cf, ",%.17g\n", mean_L);
        }
        std::fclose(cf);

        const CostEstimate cost = estimate_social_cost(bundle, run.market);
        const CostEstimate inc =
            estimate_pollution_increment(bundle, run.initial_pollution);
        const auto at0 = surface.value_at(0.0, run.initial_pollution);
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", sigma, at0.value,
                     cost.mean, cost.se,
                     effort_integral / (steps1 * bundle.n_producers), inc.mean);
        std::printf("sigma %.6g: v_hat(0,L0) %.8g, social cost %.8g\n", sigma,
                    at0.value, cost.mean);
    }
    std::fclose(f);
    std::printf("wrote %s\n", summary_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pollution-regulation contract solver for electricity networks"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = out_dir_default();
    int threads = 1;
    app.add_option("--out", out_dir, "Output directory (default $ISOREG_OUT or .)");
    app.add_option("--threads", threads, "Worker cap for parallel loops");

    auto* dispatch = app.add_subcommand("dispatch", "Minimum-cost dispatch");
    dispatch->add_option("config", config)->required();

    auto* solve = app.add_subcommand("solve", "Solve the HJB equation");
    bool fixed_plan = false;
    bool full_surface = false;
    std::vector<double> flows;
    int n_ell = 0, n_t = 0;
    double ell_min = std::nan(""), ell_max = std::nan("");
    solve->add_option("config", config)->required();
    solve->add_flag("--fixed-plan", fixed_plan,
                    "Freeze the plan (min-cost dispatch unless --flows)");
    solve->add_flag("--full-surface", full_surface,
                    "Export every grid node instead of ~200 time slices");
    solve->add_option("--flows", flows, "Fixed plan flows, one per edge");
    solve->add_option("--n-ell", n_ell, "Override grid n_ell");
    solve->add_option("--n-t", n_t, "Override grid n_t");
    solve->add_option("--ell-min", ell_min, "Override grid lower bound");
    solve->add_option("--ell-max", ell_max, "Override grid upper bound");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation");
    std::string policy = "optimal";
    long paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    simulate->add_option("config", config)->required();
    simulate->add_option("--policy", policy, "optimal | fixed | closed");
    simulate->add_option("--paths", paths, "Number of Monte Carlo paths");
    simulate->add_option("--dt", dt, "Simulation step (hours)");
    simulate->add_option("--seed", seed, "RNG seed")
        ->each([&](const std::string&) { seed_set = true; });

    auto* cplan = app.add_subcommand("constant-plan", "Optimize over constant plans");
    cplan->add_option("config", config)->required();

    auto* sens = app.add_subcommand("sensitivity", "Parameter sweep");
    std::string param = "sigma";
    std::vector<double> values;
    sens->add_option("config", config)->required();
    sens->add_option("--param", param, "Swept parameter (sigma)");
    sens->add_option("--values", values, "Values to sweep")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (*dispatch) return cmd_dispatch(config, out_dir);
        if (*solve)
            return cmd_solve(config, out_dir, fixed_plan, flows, n_ell, n_t,
                             ell_min, ell_max, full_surface, threads);
        if (*simulate)
            return cmd_simulate(config, out_dir, policy, paths, dt, seed,
                                seed_set, threads);
        if (*cplan) return cmd_constant_plan(config, out_dir, threads);
        if (*sens) return cmd_sensitivity(config, out_dir, param, values, threads);
    } catch (const ConfigError& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return 2;
    } catch (const InputError& err) {
        std::fprintf(stderr, "input error: %s\n", err.what());
        return 2;
    } catch (const InfeasibleError& err) {
        std::fprintf(stderr, "infeasible: %s\n", err.what());
        return 3;
    } catch (const StabilityError& err) {
        std::fprintf(stderr, "stability refusal: %s\n", err.what());
        return 4;
    } catch (const ValidationError& err) {
        std::fprintf(stderr, "validation failure: %s\n", err.what());
        return 5;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 1;
}
