#include "isoreg/constant_plan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// (value, lexicographic flows) ordering used for deterministic ranking.
bool better(double va, std::span<const double> pa, double vb,
            std::span<const double> pb) {
    const double tie = 1e-12 * std::max(1.0, std::abs(vb));
    if (va < vb - tie) return true;
    if (va > vb + tie) return false;
    return lex_less(pa, pb);
}

Grid coarsen(const Grid& fine, const NetworkSpec& net,
             std::span<const ProducerSpec> producers, const MarketParams& params,
             double l0, int ratio, const SolverOptions& solver_opts) {
    GridSpec spec;
    spec.ell_min = fine.ell_min;
    spec.ell_max = fine.ell_max;
    spec.n_ell = std::max(31, fine.n_ell / std::max(1, ratio));
    spec.n_t = 0; // time step from stability on the coarser mesh
    return resolve_grid(spec, net, producers, params, l0, solver_opts);
}

} // namespace

double evaluate_vd(const NetworkSpec& net,
                   std::span<const ProducerSpec> producers,
                   const MarketParams& params, const Plan& plan,
                   const Grid& grid, double l0,
                   const SolverOptions& solver_opts) {
    SolverOptions opts = solver_opts;
    opts.store_policy = false; // value-only solve
    const ValueSurface s = solve_fixed_plan(net, producers, params, plan, grid, opts);
    return s.value_at(0.0, l0).value;
}

VdResult optimize_vd(const NetworkSpec& net,
                     std::span<const ProducerSpec> producers,
                     const MarketParams& params, const Grid& fine_grid,
                     double l0, const ConstantPlanOptions& opts,
                     const SolverOptions& solver_opts) {
    net.validate();
    params.validate(producers.size());

    const Grid coarse = coarsen(fine_grid, net, producers, params, l0,
                                opts.coarse_ratio, solver_opts);
    std::vector<Plan> candidates = plan_grid(net, std::max(2, opts.flow_steps));
    if (candidates.empty())
        throw InfeasibleError("constant plan: no feasible candidate on the flow grid");

    VdResult result;
    result.sweep.resize(candidates.size());

    // Sweep: one coarsened PDE solve per candidate; slots keep the output
    // deterministic under threading.
    {
        std::atomic<long> next{0};
        auto worker = [&] {
            for (;;) {
                const long c = next.fetch_add(1);
                if (c >= static_cast<long>(candidates.size())) return;
                VdCandidate& out = result.sweep[c];
                out.plan = candidates[c];
                out.coarse_value = evaluate_vd(net, producers, params, out.plan,
                                               coarse, l0, solver_opts);
            }
        };
        const int workers = std::max(1, opts.threads);
        if (workers == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }

    // Rank by coarse value and re-score the finalists on the fine grid.
    std::vector<std::size_t> order(result.sweep.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return better(result.sweep[a].coarse_value, result.sweep[a].plan.phi,
                      result.sweep[b].coarse_value, result.sweep[b].plan.phi);
    });

    const std::size_t n_final =
        std::min<std::size_t>(std::max(1, opts.finalists), order.size());
    Plan best_plan;
    double best_value = 0.0;
    bool have_best = false;
    for (std::size_t r = 0; r < n_final; ++r) {
        const Plan& plan = result.sweep[order[r]].plan;
        const double v =
            evaluate_vd(net, producers, params, plan, fine_grid, l0, solver_opts);
        if (!have_best || better(v, plan.phi, best_value, best_plan.phi)) {
            best_plan = plan;
            best_value = v;
            have_best = true;
        }
    }

    // Local refinement on flows around the winner, scored on the coarse grid
    // (systematic discretization bias cancels between nearby plans), then a
    // final fine-grid score.
    if (net.edge_count() > 0) {
        auto coarse_score = [&](const Plan& plan) -> double {
            if (!is_feasible(net, plan, solver_opts.search.feas_tol))
                return std::numeric_limits<double>::infinity();
            return evaluate_vd(net, producers, params, plan, coarse, l0, solver_opts);
        };
        double max_width = 0.0;
        for (const auto& e : net.edges)
            max_width = std::max(max_width, e.flow_max - e.flow_min);
        const double step = max_width / (std::max(2, opts.flow_steps) - 1);
        const RefinedPlan refined =
            refine_over_flows(net, coarse_score, best_plan, coarse_score(best_plan),
                              step, std::max(opts.refine_step, 1e-9));
        const double fine_v = evaluate_vd(net, producers, params, refined.plan,
                                          fine_grid, l0, solver_opts);
        if (better(fine_v, refined.plan.phi, best_value, best_plan.phi)) {
            best_plan = refined.plan;
            best_value = fine_v;
        }
    }

    result.plan = best_plan;
    result.value = best_value;
    return result;
}

void write_sweep_csv(const VdResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("write_sweep_csv: cannot open " + path);
    const std::size_t nq = result.plan.q.size();
    const std::size_t ne = result.plan.phi.size();
    for (std::size_t i = 1; i <= nq; ++i) std::fprintf(f, "q_%zu,", i);
    for (std::size_t e = 1; e <= ne; ++e) std::fprintf(f, "phi_%zu,", e);
    std::fprintf(f, "value\n");
    for (const auto& cand : result.sweep) {
        for (double q : cand.plan.q) std::fprintf(f, "%.17g,", q);
        for (double phi : cand.plan.phi) std::fprintf(f, "%.17g,", phi);
        std::fprintf(f, "%.17g\n", cand.coarse_value);
    }
    std::fclose(f);
}

} // namespace isoreg
