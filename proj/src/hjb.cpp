#include "isoreg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <unordered_map>

#include "isoreg/errors.hpp"

namespace isoreg {

double stable_dt(double dl, double sigma, double drift_bound) {
    return dl * dl / (sigma * sigma + dl * drift_bound);
}

namespace {

double cfl_drift_bound(std::span<const ProducerSpec> producers) {
    double p_bar = 0.0;
    for (const auto& p : producers) p_bar = std::max(p_bar, p.max_pollution());
    return static_cast<double>(producers.size()) * p_bar;
}

// Largest zero-effort drift over the coarse feasible plan grid; bounds the
// reachable pollution cone much tighter than N * max p_i.
double domain_drift_bound(const NetworkSpec& net,
                          std::span<const ProducerSpec> producers,
                          int flow_steps) {
    double best = 0.0;
    bool any = false;
    for (const Plan& plan : plan_grid(net, std::max(2, flow_steps))) {
        double drift = 0.0;
        for (std::size_t i = 0; i < producers.size(); ++i)
            drift += producers[i].pollution(
                std::clamp(plan.q[i], 0.0, producers[i].capacity));
        best = std::max(best, drift);
        any = true;
    }
    if (!any) throw InfeasibleError("grid: no feasible plan on the coarse flow grid");
    return best;
}

double auto_alpha_quantum(const MarketParams& params, const SolverOptions& opts) {
    if (opts.alpha_quantum > 0.0) return opts.alpha_quantum;
    const double scale = params.social_cost.slope_bound() * params.horizon;
    return scale > 0.0 ? scale / 4096.0 : 1e-12;
}

} // namespace

double solver_alpha_quantum(const MarketParams& params, const SolverOptions& opts) {
    return auto_alpha_quantum(params, opts);
}

Grid resolve_grid(const GridSpec& spec, const NetworkSpec& net,
                  std::span<const ProducerSpec> producers,
                  const MarketParams& params, double l0,
                  const SolverOptions& opts) {
    net.validate();
    params.validate(producers.size());
    if (spec.n_ell < 3) throw InputError("grid: n_ell must be >= 3");

    Grid g;
    g.T = params.horizon;
    g.n_ell = spec.n_ell;
    const double pad = opts.domain_sigmas * params.sigma * std::sqrt(params.horizon);
    if (std::isnan(spec.ell_min) || std::isnan(spec.ell_max)) {
        const double drift =
            domain_drift_bound(net, producers, opts.search.flow_steps);
        g.ell_min = std::isnan(spec.ell_min) ? std::max(0.0, l0 - pad) : spec.ell_min;
        g.ell_max = std::isnan(spec.ell_max) ? l0 + drift * params.horizon + pad
                                             : spec.ell_max;
    } else {
        g.ell_min = spec.ell_min;
        g.ell_max = spec.ell_max;
    }
    if (!(g.ell_min < g.ell_max)) throw InputError("grid: need ell_min < ell_max");
    if (l0 < g.ell_min || l0 > g.ell_max)
        throw InputError("grid: initial pollution outside the spatial domain");

    const double dt_max = stable_dt(g.dl(), params.sigma, cfl_drift_bound(producers));
    if (spec.n_t > 0) {
        g.n_t = spec.n_t;
        if (g.T / g.n_t > dt_max * (1.0 + 1e-12))
            throw StabilityError("grid: pinned n_t violates the stability bound (need n_t >= " +
                                 std::to_string(static_cast<long>(std::ceil(g.T / dt_max))) + ")");
    } else {
        g.n_t = static_cast<int>(std::ceil(g.T / dt_max));
        if (g.n_t < opts.min_auto_nt)
            throw StabilityError(
                "grid: stable step count " + std::to_string(g.n_t) +
                " is degenerate; increase n_ell or pin a finer grid");
    }
    return g;
}

int ValueSurface::time_index(double t) const {
    const double dt = grid.dt();
    int n = static_cast<int>(std::floor(t / dt + 1e-9));
    return std::clamp(n, 0, grid.n_t);
}

int ValueSurface::ell_index(double ell, bool* clamped) const {
    const double x = (ell - grid.ell_min) / grid.dl();
    int j = static_cast<int>(std::lround(x));
    const bool out = j < 0 || j >= grid.n_ell;
    if (clamped) *clamped = out;
    return std::clamp(j, 0, grid.n_ell - 1);
}

ValueSurface::Sample ValueSurface::value_at(double t, double ell) const {
    const double slack_t = 1e-9 * std::max(1.0, grid.T);
    const double slack_l = 1e-9 * std::max(1.0, grid.ell_max - grid.ell_min);
    if (t < -slack_t || t > grid.T + slack_t)
        throw InputError("value_at: time outside [0, T]");
    if (ell < grid.ell_min - slack_l || ell > grid.ell_max + slack_l)
        throw InputError("value_at: pollution outside the grid");
    const double tt = std::clamp(t, 0.0, grid.T);
    const double ll = std::clamp(ell, grid.ell_min, grid.ell_max);

    const double xt = tt / grid.dt();
    const double xl = (ll - grid.ell_min) / grid.dl();
    const int n0 = std::min(static_cast<int>(std::floor(xt)), grid.n_t - 1);
    const int j0 = std::min(static_cast<int>(std::floor(xl)), grid.n_ell - 2);
    const double wt = xt - n0;
    const double wl = xl - j0;

    auto lerp2 = [&](const std::vector<double>& field) {
        const double a00 = field[node(n0, j0)];
        const double a01 = field[node(n0, j0 + 1)];
        const double a10 = field[node(n0 + 1, j0)];
        const double a11 = field[node(n0 + 1, j0 + 1)];
        return (1 - wt) * ((1 - wl) * a00 + wl * a01)
             + wt * ((1 - wl) * a10 + wl * a11);
    };
    return Sample{lerp2(v), lerp2(v_ell)};
}

ValueSurface::PolicyView ValueSurface::policy_at(double t, double ell,
                                                 bool* clamped) const {
    if (pol_drift.empty())
        throw InputError("policy_at: surface was solved without policy storage");
    const int n = std::min(time_index(t), grid.n_t);
    const int j = ell_index(ell, clamped);
    const std::size_t k = node(n, j);
    PolicyView view;
    view.z = std::span<const double>(pol_z).subspan(k * n_producers, n_producers);
    view.q = std::span<const double>(pol_q).subspan(k * n_producers, n_producers);
    view.a = std::span<const double>(pol_a).subspan(k * n_producers, n_producers);
    view.phi = std::span<const double>(pol_phi).subspan(k * n_edges, n_edges);
    view.drift = pol_drift[k];
    return view;
}

void ValueSurface::write_csv(const std::string& path, int time_stride,
                             int ell_stride) const {
    const bool with_policy = !pol_drift.empty();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("write_csv: cannot open " + path);
    std::fprintf(f, "t,ell,v,v_ell");
    if (with_policy) {
        for (std::size_t i = 0; i < n_producers; ++i)
            std::fprintf(f, ",z_star_%zu", i + 1);
        for (std::size_t i = 0; i < n_producers; ++i)
            std::fprintf(f, ",q_star_%zu", i + 1);
        for (std::size_t e = 0; e < n_edges; ++e)
            std::fprintf(f, ",phi_star_%zu", e + 1);
        for (std::size_t i = 0; i < n_producers; ++i)
            std::fprintf(f, ",a_star_%zu", i + 1);
    }
    std::fprintf(f, "\n");
    for (int n = 0; n <= grid.n_t; n += std::max(1, time_stride)) {
        for (int j = 0; j < grid.n_ell; j += std::max(1, ell_stride)) {
            const std::size_t k = node(n, j);
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g", grid.t_at(n), grid.ell_at(j),
                         v[k], v_ell[k]);
            if (with_policy) {
                for (std::size_t i = 0; i < n_producers; ++i)
                    std::fprintf(f, ",%.17g", pol_z[k * n_producers + i]);
                for (std::size_t i = 0; i < n_producers; ++i)
                    std::fprintf(f, ",%.17g", pol_q[k * n_producers + i]);
                for (std::size_t e = 0; e < n_edges; ++e)
                    std::fprintf(f, ",%.17g", pol_phi[k * n_edges + e]);
                for (std::size_t i = 0; i < n_producers; ++i)
                    std::fprintf(f, ",%.17g", pol_a[k * n_producers + i]);
            }
            std::fprintf(f, "\n");
        }
    }
    std::fclose(f);
}

namespace {

// Shared backward sweep.  `select` maps a slope to the minimized Hamiltonian
// data (a reference that stays valid for the duration of the sweep); the
// social-cost and diffusion terms are added here.
ValueSurface sweep(const NetworkSpec& net, std::span<const ProducerSpec> producers,
                   const MarketParams& params, const Grid& grid,
                   const std::function<const OptimizerSelection&(double)>& select,
                   bool keep_policy) {
    ValueSurface s;
    s.grid = grid;
    s.n_producers = producers.size();
    s.n_edges = net.edge_count();
    const std::size_t nodes = static_cast<std::size_t>(grid.n_t + 1) * grid.n_ell;
    s.v.assign(nodes, 0.0);
    s.v_ell.assign(nodes, 0.0);
    if (keep_policy) {
        s.pol_z.assign(nodes * s.n_producers, 0.0);
        s.pol_q.assign(nodes * s.n_producers, 0.0);
        s.pol_a.assign(nodes * s.n_producers, 0.0);
        s.pol_phi.assign(nodes * s.n_edges, 0.0);
        s.pol_drift.assign(nodes, 0.0);
    }

    const double dl = grid.dl();
    const double dt = grid.dt();
    const double sig2 = params.sigma * params.sigma;
    const int J = grid.n_ell;

    auto store_policy = [&](int n, int j, const OptimizerSelection& sel,
                            double alpha) {
        const std::size_t k = s.node(n, j);
        s.v_ell[k] = alpha;
        if (!keep_policy) return;
        s.pol_drift[k] = sel.drift;
        for (std::size_t i = 0; i < s.n_producers; ++i) {
            s.pol_z[k * s.n_producers + i] = sel.z_star[i];
            s.pol_q[k * s.n_producers + i] = sel.plan_star.q[i];
            s.pol_a[k * s.n_producers + i] = sel.effort_star[i];
        }
        for (std::size_t e = 0; e < s.n_edges; ++e)
            s.pol_phi[k * s.n_edges + e] = sel.plan_star.phi[e];
    };

    // Terminal slice: v(T, .) = 0 exactly, slope 0.
    {
        const OptimizerSelection& sel = select(0.0);
        for (int j = 0; j < J; ++j) store_policy(grid.n_t, j, sel, 0.0);
    }

    std::vector<double> g_partial(J);
    for (int n = grid.n_t; n >= 1; --n) {
        const double* vn = s.v.data() + s.node(n, 0);
        for (int j = 0; j < J; ++j) {
            // Upwind slope: the optimized drift is always >= 0, so the
            // one-sided difference toward larger ell is the stable choice.
            double alpha;
            if (j + 1 < J)
                alpha = (vn[j + 1] - vn[j]) / dl;
            else
                alpha = (vn[j] - vn[j - 1]) / dl;
            double gamma = 0.0; // linear extrapolation at the boundary
            if (j > 0 && j + 1 < J)
                gamma = (vn[j + 1] - 2.0 * vn[j] + vn[j - 1]) / (dl * dl);

            const OptimizerSelection& sel = select(alpha);
            store_policy(n, j, sel, alpha);
            g_partial[j] = sel.g_value + 0.5 * gamma * sig2
                         + params.social_cost(grid.ell_at(j) - params.ell0);
        }
        // g_partial already contains the full G; advance one step backward.
        double* vprev = s.v.data() + s.node(n - 1, 0);
        for (int j = 0; j < J; ++j) vprev[j] = vn[j] + dt * g_partial[j];
    }

    // Initial slice policy from the slopes of v(0, .).
    {
        const double* v0 = s.v.data() + s.node(0, 0);
        for (int j = 0; j < J; ++j) {
            double alpha;
            if (j + 1 < J)
                alpha = (v0[j + 1] - v0[j]) / dl;
            else
                alpha = (v0[j] - v0[j - 1]) / dl;
            store_policy(0, j, select(alpha), alpha);
        }
    }
    return s;
}

} // namespace

ValueSurface solve_general(const NetworkSpec& net,
                           std::span<const ProducerSpec> producers,
                           const MarketParams& params, const Grid& grid,
                           const SolverOptions& opts) {
    params.validate(producers.size());
    HamiltonianOracle oracle(net, producers, params, opts.search,
                             auto_alpha_quantum(params, opts));
    // Consecutive nodes usually share the quantized slope; short-circuit the
    // hash lookup with a one-entry cache.
    const double quantum = oracle.quantum();
    long long last_key = std::numeric_limits<long long>::min();
    const OptimizerSelection* last = nullptr;
    auto select = [&](double alpha) -> const OptimizerSelection& {
        const long long key = std::llround(alpha / quantum);
        if (key != last_key || !last) {
            last = &oracle.at(alpha);
            last_key = key;
        }
        return *last;
    };
    return sweep(net, producers, params, grid, select, opts.store_policy);
}

ValueSurface solve_fixed_plan(const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params, const Plan& plan,
                              const Grid& grid, const SolverOptions& opts) {
    params.validate(producers.size());
    if (!is_feasible(net, plan, opts.search.feas_tol))
        throw InputError("solve_fixed_plan: plan is not feasible");
    FixedPlanHamiltonian ham(producers, params, plan);
    // Fixed-plan selections are cheap but still repeat heavily across nodes;
    // memoize on the quantized slope with a one-entry fast path.
    const double quantum = auto_alpha_quantum(params, opts);
    std::unordered_map<long long, OptimizerSelection> memo;
    long long last_key = std::numeric_limits<long long>::min();
    const OptimizerSelection* last = nullptr;
    auto select = [&](double alpha) -> const OptimizerSelection& {
        const long long key = std::llround(alpha / quantum);
        if (key == last_key && last) return *last;
        auto it = memo.find(key);
        if (it == memo.end()) {
            it = memo.try_emplace(key, ham.at(static_cast<double>(key) * quantum))
                     .first;
        }
        last_key = key;
        last = &it->second;
        return *last;
    };
    return sweep(net, producers, params, grid, select, opts.store_policy);
}

} // namespace isoreg
