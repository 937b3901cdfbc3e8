// Acceptance suite: runs every criterion end to end against the shipped
// scenario files and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "isoreg/closed_form.hpp"
#include "isoreg/config.hpp"
#include "isoreg/constant_plan.hpp"
#include "isoreg/hjb.hpp"
#include "isoreg/network.hpp"
#include "isoreg/simulate.hpp"

using namespace isoreg;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++g_failures;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string scenario_path(const std::string& file) {
    return std::string(ISOREG_SOURCE_DIR) + "/scenarios/" + file;
}

int pick_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(8u, std::max(1u, hw)));
}

struct ChileanRun {
    Scenario sc;
    Grid grid;
    ValueSurface surface; // general solve at documented defaults
};

// Criterion 1: closed-form oracle agreement on the explicit toy, 600-point
// grid, both solvers, each within 1% and 10 s.
void criterion_closed_form() {
    const Scenario sc = load_scenario(scenario_path("prop5_toy.json"));
    const SolverOptions opts = sc.solver_options();
    const Grid grid = resolve_grid(sc.grid, sc.network, sc.producers, sc.market,
                                   sc.initial_pollution, opts);
    const auto spec = ExplicitSpec::from_model(sc.producers, sc.market, Plan{{1.0}, {}});
    const double exact = closed_value(spec, 0.0, sc.initial_pollution);

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const auto fixed = solve_fixed_plan(sc.network, sc.producers, sc.market,
                                        Plan{{1.0}, {}}, grid, opts);
    const double fixed_s = std::chrono::duration<double>(clock::now() - t0).count();
    const double v_fixed = fixed.value_at(0.0, sc.initial_pollution).value;

    t0 = clock::now();
    const auto general = solve_general(sc.network, sc.producers, sc.market, grid, opts);
    const double general_s = std::chrono::duration<double>(clock::now() - t0).count();
    const double v_general = general.value_at(0.0, sc.initial_pollution).value;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "v_fixed %.6f (err %.3f%%, %.1fs), v_general %.6f (err %.3f%%, %.1fs), "
                  "exact %.6f",
                  v_fixed, 100 * rel_err(v_fixed, exact), fixed_s, v_general,
                  100 * rel_err(v_general, exact), general_s, exact);
    report("criterion 1 (closed-form agreement)",
           rel_err(v_fixed, exact) <= 0.01 && rel_err(v_general, exact) <= 0.01 &&
               fixed_s <= 10.0 && general_s <= 10.0,
           buf);
}

// Criterion 2: no-regulation dispatch benchmark.
void criterion_dispatch(const Scenario& sc) {
    const Plan plan =
        min_cost_dispatch(sc.network, sc.producers, sc.search.feas_tol, sc.search);
    const std::vector<double> q_ref{3600.0, 1000.4, 5402.0};
    const std::vector<double> phi_ref{198.0, 401.0, 198.0};
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i)
        ok = ok && std::abs(plan.q[i] - q_ref[i]) <= 0.01 * q_ref[i];
    for (std::size_t e = 0; e < 3; ++e)
        ok = ok && std::abs(plan.phi[e] - phi_ref[e]) <= 0.01 * phi_ref[e];
    double worst_res = 0.0;
    for (double r : balance_residual(sc.network, plan))
        worst_res = std::max(worst_res, std::abs(r));
    ok = ok && worst_res <= 1e-6;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "q (%.1f, %.1f, %.1f), phi (%.1f, %.1f, %.1f), max residual %.1e",
                  plan.q[0], plan.q[1], plan.q[2], plan.phi[0], plan.phi[1],
                  plan.phi[2], worst_res);
    report("criterion 2 (benchmark dispatch)", ok, buf);
}

// Criterion 3: unregulated social and production cost.
PathBundle criterion_unregulated(const Scenario& sc) {
    SimConfig cfg = sc.sim;
    cfg.n_paths = std::max<long>(cfg.n_paths, 1000);
    cfg.threads = pick_threads();
    const Plan plan =
        min_cost_dispatch(sc.network, sc.producers, sc.search.feas_tol, sc.search);
    const PathBundle bundle = simulate_unregulated(
        sc.network, sc.producers, sc.market, plan, cfg, sc.initial_pollution);
    const CostEstimate social = estimate_social_cost(bundle, sc.market);
    const CostEstimate prod = estimate_production_cost(bundle);
    const bool ok =
        rel_err(social.mean, 3.645e10) <= 0.05 && rel_err(prod.mean, 6.30e8) <= 0.05;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "social %.4g (target 3.645e10, err %.2f%%), production %.4g "
                  "(target 6.30e8, err %.2f%%)",
                  social.mean, 100 * rel_err(social.mean, 3.645e10), prod.mean,
                  100 * rel_err(prod.mean, 6.30e8));
    report("criterion 3 (unregulated costs)", ok, buf);
    return bundle;
}

// Criterion 4: regulated value and the constant-plan optimum under the
// documented calibration.
ChileanRun criterion_regulated_value() {
    ChileanRun run{load_scenario(scenario_path("chilean.json")), {}, {}};
    SolverOptions opts = run.sc.solver_options();
    run.grid = resolve_grid(run.sc.grid, run.sc.network, run.sc.producers,
                            run.sc.market, run.sc.initial_pollution, opts);
    run.surface = solve_general(run.sc.network, run.sc.producers, run.sc.market,
                                run.grid, opts);
    const double v0 = run.surface.value_at(0.0, run.sc.initial_pollution).value;

    // Informational: the same solve with a linear social cost.  The
    // rectified convention used by the scenario floors the attainable value
    // near 1.71e10; the published 1.44e10 is only reachable when deviations
    // below the target earn credits (linear accounting).
    {
        Scenario lin = run.sc;
        lin.market.social_cost.kind = SocialCostFn::Kind::linear;
        SolverOptions lopts = lin.solver_options();
        lopts.store_policy = false;
        const Grid lgrid = resolve_grid(lin.grid, lin.network, lin.producers,
                                        lin.market, lin.initial_pollution, lopts);
        const auto ls = solve_general(lin.network, lin.producers, lin.market,
                                      lgrid, lopts);
        std::printf("INFO  criterion 4 diagnostic: linear social-cost value %.4g\n",
                    ls.value_at(0.0, lin.initial_pollution).value);
    }

    ConstantPlanOptions copts = run.sc.constant_plan;
    copts.threads = pick_threads();
    const VdResult vd = optimize_vd(run.sc.network, run.sc.producers, run.sc.market,
                                    run.grid, run.sc.initial_pollution, copts, opts);

    const std::vector<double> q_ref{5829.6, 1808.0, 2436.0};
    const std::vector<double> phi_ref{400.0, 2400.0, 1200.0};
    bool plan_ok = true;
    for (std::size_t i = 0; i < 3; ++i)
        plan_ok = plan_ok && std::abs(vd.plan.q[i] - q_ref[i]) <= 0.05 * q_ref[i];
    for (std::size_t e = 0; e < 3; ++e)
        plan_ok = plan_ok && std::abs(vd.plan.phi[e] - phi_ref[e]) <= 0.05 * phi_ref[e];

    const bool v0_ok = rel_err(v0, 1.44e10) <= 0.10;
    const bool vd_ok = rel_err(vd.value, 1.75e10) <= 0.10;
    char buf[448];
    std::snprintf(buf, sizeof(buf),
                  "v_hat(0,L0) %.4g vs 1.44e10 (err %.2f%%, rho %.4g) [%s]; "
                  "V^d %.4g vs 1.75e10 (err %.2f%%) [%s]; plan q (%.1f, %.1f, %.1f), "
                  "phi (%.1f, %.1f, %.1f) [%s]",
                  v0, 100 * rel_err(v0, 1.44e10), run.sc.market.rho,
                  v0_ok ? "ok" : "off", vd.value, 100 * rel_err(vd.value, 1.75e10),
                  vd_ok ? "ok" : "off", vd.plan.q[0], vd.plan.q[1], vd.plan.q[2],
                  vd.plan.phi[0], vd.plan.phi[1], vd.plan.phi[2],
                  plan_ok ? "ok" : "off");
    report("criterion 4 (regulated and constant-plan values)",
           v0_ok && vd_ok && plan_ok, buf);
    return run;
}

// Criterion 5: pollution-increment reduction of at least thirty percent.
void criterion_pollution_reduction(const ChileanRun& run,
                                   const PathBundle& unregulated) {
    SimConfig cfg = run.sc.sim;
    cfg.threads = pick_threads();
    const PathBundle reg =
        simulate_regulated(run.surface, run.sc.network, run.sc.producers,
                           run.sc.market, cfg, run.sc.initial_pollution);
    const CostEstimate inc_reg =
        estimate_pollution_increment(reg, run.sc.initial_pollution);
    const CostEstimate inc_unreg =
        estimate_pollution_increment(unregulated, run.sc.initial_pollution);

    const double reduction = 1.0 - inc_reg.mean / inc_unreg.mean;
    // Propagated standard error of the reduction ratio.
    const double se =
        std::sqrt(std::pow(inc_reg.se / inc_unreg.mean, 2) +
                  std::pow(inc_reg.mean * inc_unreg.se /
                               (inc_unreg.mean * inc_unreg.mean), 2));
    const bool ok = reduction - 3.0 * se >= 0.30;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "increment %.4g regulated vs %.4g unregulated: reduction %.1f%% "
                  "(3-SE margin %.1f%%)",
                  inc_reg.mean, inc_unreg.mean, 100 * reduction,
                  100 * (reduction - 3.0 * se));
    report("criterion 5 (pollution reduction >= 30%)", ok, buf);
}

// Criterion 6: property suites on desk-scale instances.
void criterion_properties() {
    const Scenario pair = load_scenario(scenario_path("two_node_toy.json"));
    const Scenario toy = load_scenario(scenario_path("prop5_toy.json"));
    const SolverOptions opts = pair.solver_options();
    const Grid grid = resolve_grid(pair.grid, pair.network, pair.producers,
                                   pair.market, pair.initial_pollution, opts);
    const auto surface =
        solve_general(pair.network, pair.producers, pair.market, grid, opts);

    SimConfig cfg = pair.sim;
    cfg.n_paths = 3000;
    cfg.threads = pick_threads();
    SurfacePolicy policy(surface, pair.producers);
    const PathBundle bundle = simulate_policy(policy, pair.producers, pair.market,
                                              cfg, pair.initial_pollution, true);

    // (a) Nash deviation non-improvement, both producers, four offsets.
    bool nash_ok = true;
    for (std::size_t i = 0; i < pair.producers.size(); ++i) {
        for (double delta : {-0.1, -0.05, 0.05, 0.1}) {
            const auto r =
                deviation_test(policy, pair.producers, pair.market, cfg,
                               pair.initial_pollution, i,
                               {EffortPerturbation::Kind::offset, delta});
            nash_ok = nash_ok && r.difference.mean <= 3.0 * r.difference.se;
        }
    }
    report("criterion 6a (Nash deviations)", nash_ok,
           "offsets +-0.05/+-0.1 on every producer, 3-SE");

    // (b) Agent value pinned to U_A(y0_i).
    bool agent_ok = true;
    char agent_buf[128] = "";
    for (std::size_t i = 0; i < pair.producers.size(); ++i) {
        const auto est = verify_agent_value(bundle, pair.producers, pair.market, i);
        const double target = pair.market.reservations[i];
        agent_ok = agent_ok && std::abs(est.mean - target) <= 3.0 * est.se;
        std::snprintf(agent_buf + std::strlen(agent_buf),
                      sizeof(agent_buf) - std::strlen(agent_buf),
                      "i=%zu: %.4f vs %.4f +- %.4f  ", i, est.mean, target,
                      3.0 * est.se);
    }
    report("criterion 6b (agent values)", agent_ok, agent_buf);

    // (c) Terminal condition exact.
    bool terminal_ok = true;
    for (int j = 0; j < grid.n_ell; ++j)
        terminal_ok = terminal_ok && surface.v[surface.node(grid.n_t, j)] == 0.0;
    report("criterion 6c (terminal condition)", terminal_ok, "v(T, .) == 0 exactly");

    // (d) Slope bounds for the rectified social cost; the discrete solution
    // satisfies the continuum bound up to the alpha-quantization scale.
    bool slope_ok = true;
    const double lambda = pair.market.social_cost.rate;
    const double slack = solver_alpha_quantum(pair.market, opts) + 1e-9;
    for (int n = 0; n <= grid.n_t; ++n) {
        const double cap = lambda * (grid.T - grid.t_at(n));
        for (int j = 1; j + 1 < grid.n_ell; ++j) {
            const double s = surface.v_ell[surface.node(n, j)];
            slope_ok = slope_ok && s >= -slack && s <= cap + slack;
        }
    }
    report("criterion 6d (slope bounds)", slope_ok,
           "0 <= v_ell <= lambda (T - t) at interior nodes");

    // (e) z-decoupling against a joint brute force at step 1e-3.
    bool decouple_ok = true;
    {
        const std::vector<double> phi{1.0};
        Plan plan{induced_production(pair.network, phi), phi};
        const double rs2 = pair.market.rho * pair.market.sigma * pair.market.sigma;
        for (double alpha : {0.2, 0.9}) {
            double best = 1e300;
            for (double z1 = -2.0; z1 <= 1e-12; z1 += 1e-3) {
                const double a1 = best_effort(pair.producers[0], plan.q[0], z1);
                const double p1 = pair.producers[0].pollution(plan.q[0]);
                const double t1 = alpha * (1 - a1) * p1 +
                                  pair.producers[0].effort(a1) + 0.5 * rs2 * z1 * z1;
                for (double z2 = -2.0; z2 <= 1e-12; z2 += 1e-3) {
                    const double a2 = best_effort(pair.producers[1], plan.q[1], z2);
                    const double p2 = pair.producers[1].pollution(plan.q[1]);
                    const double t2 = alpha * (1 - a2) * p2 +
                                      pair.producers[1].effort(a2) +
                                      0.5 * rs2 * z2 * z2;
                    best = std::min(best, t1 + t2);
                }
            }
            double decoupled = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                decoupled +=
                    inner_z_min(pair.producers[i], pair.market, alpha, plan.q[i]).value;
            decouple_ok = decouple_ok && decoupled <= best + 1e-9 &&
                          std::abs(decoupled - best) <= 1e-4 * std::max(1.0, best);
        }
    }
    report("criterion 6e (z decoupling)", decouple_ok,
           "joint brute force at step 1e-3 matches per-producer minima");

    // (f) Dispatch against exhaustive flow grids on one- and two-edge toys.
    // The comparison slack covers both resolutions times the largest cost
    // slope (optimal plans sit on kinks, where the objective is Lipschitz).
    bool dispatch_ok = true;
    char fbuf[160] = "";
    {
        SearchOptions sopts;
        sopts.refine_step = 1e-3;
        const Plan plan =
            min_cost_dispatch(pair.network, pair.producers, 1e-6, sopts);
        double plan_cost = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            plan_cost += pair.producers[i].cost(plan.q[i]);
        double best = 1e300;
        for (double phi = 0.0; phi <= 4.0 + 1e-12; phi += 0.001) {
            Plan cand{induced_production(pair.network, std::vector<double>{phi}),
                      {phi}};
            if (!is_feasible(pair.network, cand, 1e-6)) continue;
            double c = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                c += pair.producers[i].cost(cand.q[i]);
            best = std::min(best, c);
        }
        dispatch_ok = plan_cost <= best + 5.0 * (1e-3 + 1e-3);
        std::snprintf(fbuf, sizeof(fbuf), "one-edge %.5f vs %.5f", plan_cost, best);
    }
    {
        // Two-edge chain: cheap node 1 feeds nodes 2 and 3 through the line.
        NetworkSpec chain;
        chain.nodes = {{1, 3.0, 10.0}, {2, 2.0, 10.0}, {3, 4.0, 10.0}};
        chain.edges = {{1, 2, 0.02, 0.0, 4.0}, {2, 3, 0.01, 0.0, 4.0}};
        ProducerSpec cheap;
        cheap.cost = PiecewiseLinearFn({0.0, 5.0}, {1.0, 6.0});
        cheap.pollution = PiecewiseLinearFn::linear(1.0);
        cheap.effort = EffortCost::quadratic(1.0, 0.5);
        cheap.capacity = 10.0;
        ProducerSpec mid = cheap;
        mid.cost = PiecewiseLinearFn::linear(3.0);
        ProducerSpec dear = cheap;
        dear.cost = PiecewiseLinearFn::linear(7.0);
        std::vector<ProducerSpec> chain_prod{cheap, mid, dear};

        SearchOptions sopts;
        sopts.refine_step = 1e-3;
        const Plan plan = min_cost_dispatch(chain, chain_prod, 1e-6, sopts);
        double plan_cost = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            plan_cost += chain_prod[i].cost(plan.q[i]);
        double best = 1e300;
        std::vector<double> phi(2);
        for (phi[0] = 0.0; phi[0] <= 4.0 + 1e-12; phi[0] += 0.001) {
            for (phi[1] = 0.0; phi[1] <= 4.0 + 1e-12; phi[1] += 0.001) {
                Plan cand{induced_production(chain, phi), phi};
                bool ok = true;
                for (std::size_t i = 0; i < 3; ++i)
                    ok = ok && cand.q[i] >= 0.0 && cand.q[i] <= 10.0;
                if (!ok) continue;
                double c = 0.0;
                for (std::size_t i = 0; i < 3; ++i)
                    c += chain_prod[i].cost(cand.q[i]);
                best = std::min(best, c);
            }
        }
        dispatch_ok = dispatch_ok && plan_cost <= best + 7.0 * (1e-3 + 1e-3);
        std::snprintf(fbuf + std::strlen(fbuf), sizeof(fbuf) - std::strlen(fbuf),
                      "; two-edge %.5f vs %.5f", plan_cost, best);
    }
    report("criterion 6f (dispatch vs exhaustive grid)", dispatch_ok, fbuf);

    // (g) The general solution lower-bounds every fixed plan.
    bool bound_ok = true;
    for (double phi : {0.0, 1.0, 2.0, 3.5}) {
        Plan plan{induced_production(pair.network, std::vector<double>{phi}), {phi}};
        const auto fixed = solve_fixed_plan(pair.network, pair.producers,
                                            pair.market, plan, grid, opts);
        for (std::size_t k = 0; k < surface.v.size(); ++k) {
            bound_ok = bound_ok &&
                       surface.v[k] <= fixed.v[k] + 1e-4 * std::max(1.0, fixed.v[k]);
        }
    }
    report("criterion 6g (general <= fixed plans)", bound_ok,
           "pointwise on the shared grid, four plans");

    // (h) Contract reconstruction identity.
    double worst = 0.0;
    for (double err : bundle.recon_rel_err) worst = std::max(worst, err);
    // Also on the single-producer toy with its own surface.
    {
        const SolverOptions topts = toy.solver_options();
        const Grid tgrid = resolve_grid(toy.grid, toy.network, toy.producers,
                                        toy.market, toy.initial_pollution, topts);
        const auto tsurf = solve_general(toy.network, toy.producers, toy.market,
                                         tgrid, topts);
        SimConfig tcfg = toy.sim;
        tcfg.n_paths = 500;
        tcfg.threads = pick_threads();
        const auto tbundle = simulate_regulated(tsurf, toy.network, toy.producers,
                                                toy.market, tcfg,
                                                toy.initial_pollution);
        for (double err : tbundle.recon_rel_err) worst = std::max(worst, err);
    }
    char hbuf[96];
    std::snprintf(hbuf, sizeof(hbuf), "max relative error %.2e", worst);
    report("criterion 6h (payment reconstruction)", worst <= 1e-8, hbuf);
}

// Criterion 7: first-order convergence on the smooth benchmark.
void criterion_convergence() {
    const Scenario toy = load_scenario(scenario_path("prop5_toy.json"));
    const auto spec =
        ExplicitSpec::from_model(toy.producers, toy.market, Plan{{1.0}, {}});
    const double exact = closed_value(spec, 0.0, toy.initial_pollution);
    auto err_at = [&](int n_ell) {
        GridSpec gspec = toy.grid;
        gspec.n_ell = n_ell;
        const SolverOptions opts = toy.solver_options();
        const Grid g = resolve_grid(gspec, toy.network, toy.producers, toy.market,
                                    toy.initial_pollution, opts);
        const auto s = solve_fixed_plan(toy.network, toy.producers, toy.market,
                                        Plan{{1.0}, {}}, g, opts);
        return std::abs(s.value_at(0.0, toy.initial_pollution).value - exact);
    };
    const double e1 = err_at(150);
    const double e2 = err_at(300);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "error %.3e -> %.3e, ratio %.2f", e1, e2,
                  e1 / e2);
    report("criterion 7 (convergence under refinement)", e1 / e2 >= 1.7, buf);
}

} // namespace

int main() {
    try {
        criterion_closed_form();
        const Scenario chilean = load_scenario(scenario_path("chilean.json"));
        criterion_dispatch(chilean);
        const PathBundle unregulated = criterion_unregulated(chilean);
        const ChileanRun run = criterion_regulated_value();
        criterion_pollution_reduction(run, unregulated);
        criterion_properties();
        criterion_convergence();
    } catch (const std::exception& err) {
        std::printf("FAIL  acceptance aborted: %s\n", err.what());
        return 1;
    }
    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
