#include "isoreg/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include "isoreg/errors.hpp"
#include "isoreg/rng.hpp"

namespace isoreg {

namespace {

long resolve_steps(const MarketParams& params, double& dt) {
    if (dt <= 0.0) dt = params.horizon / 1000.0;
    const double steps = params.horizon / dt;
    const long n = std::lround(steps);
    if (n < 1 || std::abs(steps - n) > 1e-9 * std::max(1.0, steps))
        throw InputError("simulate: dt must divide the horizon");
    dt = params.horizon / n;
    return n;
}

CostEstimate estimate(std::span<const double> xs) {
    CostEstimate est;
    est.n = static_cast<long>(xs.size());
    if (est.n == 0) return est;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= est.n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = est.n > 1 ? var / (est.n - 1) : 0.0;
    est.mean = mean;
    est.se = std::sqrt(var / est.n);
    return est;
}

// Runs fn(path) for every path index, optionally on several workers.  Each
// path writes only its own slots, so the result does not depend on the
// execution order.
void for_each_path(long n_paths, int threads, const std::function<void(long)>& fn) {
    const int workers = std::max(1, threads);
    if (workers == 1) {
        for (long p = 0; p < n_paths; ++p) fn(p);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long p = next.fetch_add(1);
                if (p >= n_paths) return;
                fn(p);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace

SurfacePolicy::SurfacePolicy(const ValueSurface& surface,
                             std::span<const ProducerSpec> producers)
    : surface_(surface), producers_(producers) {
    if (surface.n_producers != producers.size())
        throw InputError("policy: surface and producers disagree on N");
}

std::size_t SurfacePolicy::n_producers() const { return producers_.size(); }

bool SurfacePolicy::decide(double t, double ell, PolicyDecision& out) const {
    bool clamped = false;
    const auto view = surface_.policy_at(t, ell, &clamped);
    out.z.assign(view.z.begin(), view.z.end());
    out.q.assign(view.q.begin(), view.q.end());
    out.a.assign(view.a.begin(), view.a.end());
    out.phi.assign(view.phi.begin(), view.phi.end());
    out.drift = view.drift;
    return clamped;
}

ClosedFormPolicy::ClosedFormPolicy(ExplicitSpec spec, Plan plan,
                                   std::span<const ProducerSpec> producers)
    : spec_(std::move(spec)), plan_(std::move(plan)), producers_(producers) {
    if (spec_.producers.size() != producers_.size())
        throw InputError("policy: explicit spec and producers disagree on N");
}

std::size_t ClosedFormPolicy::n_producers() const { return producers_.size(); }

bool ClosedFormPolicy::decide(double t, double, PolicyDecision& out) const {
    const ClosedPolicyPoint pt = closed_policy(spec_, std::clamp(t, 0.0, spec_.T));
    out.z = pt.z;
    out.a = pt.a;
    out.q = plan_.q;
    out.phi = plan_.phi;
    out.drift = 0.0;
    for (std::size_t i = 0; i < spec_.producers.size(); ++i)
        out.drift += (1.0 - pt.a[i]) * spec_.pq(i);
    return false;
}

FixedPlanPolicy::FixedPlanPolicy(Plan plan, std::span<const ProducerSpec> producers)
    : plan_(std::move(plan)), producers_(producers) {
    for (std::size_t i = 0; i < producers_.size(); ++i)
        drift_ += producers_[i].pollution(plan_.q[i]);
}

std::size_t FixedPlanPolicy::n_producers() const { return producers_.size(); }

bool FixedPlanPolicy::decide(double, double, PolicyDecision& out) const {
    out.z.assign(producers_.size(), 0.0);
    out.a.assign(producers_.size(), 0.0);
    out.q = plan_.q;
    out.phi = plan_.phi;
    out.drift = drift_;
    return false;
}

PathBundle simulate_policy(const Policy& policy,
                           std::span<const ProducerSpec> producers,
                           const MarketParams& params, const SimConfig& cfg,
                           double l0, bool regulated) {
    params.validate(producers.size());
    if (policy.n_producers() != producers.size())
        throw InputError("simulate: policy does not match producers");
    if (cfg.n_paths < 1) throw InputError("simulate: need n_paths >= 1");

    const std::size_t N = producers.size();
    double dt = cfg.dt;
    const long steps = resolve_steps(params, dt);

    PathBundle b;
    b.n_producers = static_cast<int>(N);
    b.regulated = regulated;
    b.dt = dt;
    b.horizon = params.horizon;
    b.times.resize(steps + 1);
    for (long k = 0; k <= steps; ++k) b.times[k] = k * dt;

    const long n_store = std::min<long>(cfg.store_paths, cfg.n_paths);
    b.sample_L.assign(n_store, {});
    b.sample_Y.assign(n_store, {});
    b.sample_a.assign(n_store, {});
    b.xi.assign(cfg.n_paths * N, 0.0);
    b.agent_outlay.assign(cfg.n_paths * N, 0.0);
    b.production_cost.assign(cfg.n_paths, 0.0);
    b.pollution_cost.assign(cfg.n_paths, 0.0);
    b.effort_cost.assign(cfg.n_paths, 0.0);
    b.terminal_L.assign(cfg.n_paths, 0.0);
    b.recon_rel_err.assign(cfg.n_paths, 0.0);

    std::vector<double> y0(N, 0.0);
    if (regulated)
        for (std::size_t i = 0; i < N; ++i) y0[i] = params.initial_certainty_equivalent(i);

    const double sigma = params.sigma;
    const double half_rs2 = 0.5 * params.rho * sigma * sigma;
    const double sqrt_dt = std::sqrt(dt);
    std::atomic<long> clamped_total{0};

    for_each_path(cfg.n_paths, cfg.threads, [&](long p) {
        NormalStream rng(cfg.seed, cfg.antithetic ? p / 2 : p,
                         cfg.antithetic && (p % 2 == 1));
        PolicyDecision dec;
        std::vector<double> Y(y0), recon(y0), outlay(N, 0.0);
        double L = l0;
        long clamped = 0;

        const bool store = p < n_store;
        std::vector<double>* sL = nullptr;
        std::vector<double>* sY = nullptr;
        std::vector<double>* sA = nullptr;
        if (store) {
            sL = &b.sample_L[p];
            sY = &b.sample_Y[p];
            sA = &b.sample_a[p];
            sL->assign(steps + 1, 0.0);
            sY->assign(N * (steps + 1), 0.0);
            sA->assign(N * (steps + 1), 0.0);
        }

        double prod_int = 0.0, poll_int = 0.0, eff_int = 0.0;
        double c_prev = 0.0, lam_prev = 0.0, h_prev = 0.0;
        for (long k = 0; k <= steps; ++k) {
            const double t = k * dt;
            if (policy.decide(std::min(t, params.horizon), L, dec)) ++clamped;

            double c_now = 0.0, h_now = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                c_now += producers[i].cost(dec.q[i]);
                h_now += producers[i].effort(dec.a[i]);
            }
            const double lam_now = params.social_cost(L - params.ell0);

            if (store) {
                (*sL)[k] = L;
                for (std::size_t i = 0; i < N; ++i) {
                    (*sY)[i * (steps + 1) + k] = Y[i];
                    (*sA)[i * (steps + 1) + k] = dec.a[i];
                }
            }
            if (k > 0) {
                prod_int += 0.5 * (c_prev + c_now) * dt;
                poll_int += 0.5 * (lam_prev + lam_now) * dt;
                eff_int += 0.5 * (h_prev + h_now) * dt;
            }
            c_prev = c_now;
            lam_prev = lam_now;
            h_prev = h_now;
            if (k == steps) break;

            const double dW = sqrt_dt * rng.next();
            const double dL = dec.drift * dt + sigma * dW;
            if (regulated) {
                for (std::size_t i = 0; i < N; ++i) {
                    const double hc = producers[i].effort(dec.a[i])
                                    + producers[i].cost(dec.q[i]);
                    const double zi = dec.z[i];
                    Y[i] += (hc + half_rs2 * zi * zi) * dt + zi * sigma * dW;
                    // Contract route: f_i dt + z_i dL, with
                    // f_i = h + c - z_i * drift + (rho sigma^2 / 2) z_i^2.
                    recon[i] += (hc - zi * dec.drift + half_rs2 * zi * zi) * dt
                              + zi * dL;
                    outlay[i] += hc * dt;
                }
            }
            L += dL;
        }

        b.production_cost[p] = prod_int;
        b.pollution_cost[p] = poll_int;
        b.effort_cost[p] = eff_int;
        b.terminal_L[p] = L;
        double worst = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            b.xi[p * N + i] = Y[i];
            b.agent_outlay[p * N + i] = outlay[i];
            const double scale = std::max(1.0, std::abs(Y[i]));
            worst = std::max(worst, std::abs(Y[i] - recon[i]) / scale);
        }
        b.recon_rel_err[p] = regulated ? worst : 0.0;
        if (clamped > 0) clamped_total.fetch_add(clamped);
    });

    b.clamped_steps = clamped_total.load();
    b.total_steps = cfg.n_paths * (steps + 1);
    if (b.clamped_fraction() > cfg.max_clamped_frac)
        throw ValidationError(
            "simulate: " + std::to_string(b.clamped_steps) +
            " policy lookups left the value grid; enlarge the grid domain");
    return b;
}

PathBundle simulate_regulated(const ValueSurface& surface, const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params, const SimConfig& cfg,
                              double l0) {
    net.validate();
    if (l0 < surface.grid.ell_min || l0 > surface.grid.ell_max)
        throw InputError("simulate: initial pollution outside the value grid");
    SurfacePolicy policy(surface, producers);
    return simulate_policy(policy, producers, params, cfg, l0, true);
}

PathBundle simulate_unregulated(const NetworkSpec& net,
                                std::span<const ProducerSpec> producers,
                                const MarketParams& params, const Plan& plan,
                                const SimConfig& cfg, double l0) {
    net.validate();
    if (!is_feasible(net, plan, 1e-6))
        throw InputError("simulate: plan is not feasible");
    FixedPlanPolicy policy(plan, producers);
    return simulate_policy(policy, producers, params, cfg, l0, false);
}

CostEstimate estimate_social_cost(const PathBundle& bundle,
                                  const MarketParams& params) {
    (void)params;
    const long n = static_cast<long>(bundle.production_cost.size());
    std::vector<double> per_path(n, 0.0);
    for (long p = 0; p < n; ++p) {
        double total = bundle.production_cost[p] + bundle.pollution_cost[p];
        if (bundle.regulated)
            for (int i = 0; i < bundle.n_producers; ++i)
                total += bundle.xi[p * bundle.n_producers + i];
        per_path[p] = total;
    }
    return estimate(per_path);
}

CostEstimate estimate_production_cost(const PathBundle& bundle) {
    return estimate(bundle.production_cost);
}

CostEstimate estimate_pollution_increment(const PathBundle& bundle, double l0) {
    std::vector<double> inc(bundle.terminal_L.size());
    for (std::size_t p = 0; p < inc.size(); ++p) inc[p] = bundle.terminal_L[p] - l0;
    return estimate(inc);
}

CostEstimate verify_agent_value(const PathBundle& bundle,
                                std::span<const ProducerSpec> producers,
                                const MarketParams& params, std::size_t i) {
    if (!bundle.regulated)
        throw InputError("verify_agent_value: needs a regulated bundle");
    if (i >= producers.size())
        throw InputError("verify_agent_value: producer index out of range");
    const long n = static_cast<long>(bundle.production_cost.size());
    std::vector<double> u(n);
    for (long p = 0; p < n; ++p) {
        const double net_gain = bundle.xi[p * bundle.n_producers + i]
                              - bundle.agent_outlay[p * bundle.n_producers + i];
        u[p] = cara_utility(params.rho, net_gain);
    }
    return estimate(u);
}

DeviationResult deviation_test(const Policy& policy,
                               std::span<const ProducerSpec> producers,
                               const MarketParams& params, const SimConfig& cfg,
                               double l0, std::size_t producer,
                               const EffortPerturbation& pert) {
    params.validate(producers.size());
    if (producer >= producers.size())
        throw InputError("deviation_test: producer index out of range");
    const double a_max = producers[producer].effort.a_max;
    if (pert.kind == EffortPerturbation::Kind::offset && std::abs(pert.delta) > a_max)
        throw InputError("deviation_test: offset exceeds the effort interval");

    double dt = cfg.dt;
    const long steps = resolve_steps(params, dt);
    const double sigma = params.sigma;
    const double half_rs2 = 0.5 * params.rho * sigma * sigma;
    const double sqrt_dt = std::sqrt(dt);
    const double y0 = params.initial_certainty_equivalent(producer);

    std::vector<double> u_eq(cfg.n_paths), u_dev(cfg.n_paths), diff(cfg.n_paths);

    for_each_path(cfg.n_paths, cfg.threads, [&](long p) {
        // Draw the noise once so both arms share it.
        NormalStream rng(cfg.seed, cfg.antithetic ? p / 2 : p,
                         cfg.antithetic && (p % 2 == 1));
        std::vector<double> dW(steps);
        for (long k = 0; k < steps; ++k) dW[k] = sqrt_dt * rng.next();

        auto run_arm = [&](bool deviate) {
            PolicyDecision dec;
            double L = l0;
            double xi = y0;     // contract payment, integrated along the path
            double outlay = 0.0; // producer's own h + c outlay
            for (long k = 0; k < steps; ++k) {
                policy.decide(k * dt, L, dec);
                double a_i = dec.a[producer];
                if (deviate) {
                    a_i = pert.kind == EffortPerturbation::Kind::force_zero
                              ? 0.0
                              : std::clamp(a_i + pert.delta, 0.0, a_max);
                }
                // Drift under the (possibly deviated) joint effort.
                double drift = dec.drift;
                if (deviate) {
                    const double pol_i =
                        producers[producer].pollution(dec.q[producer]);
                    drift += (dec.a[producer] - a_i) * pol_i;
                }
                const double dL = drift * dt + sigma * dW[k];
                // The contract keeps the equilibrium terms f(q, z).
                double abated_eq = dec.drift;
                const double zi = dec.z[producer];
                const double f_i = producers[producer].effort(dec.a[producer])
                                 + producers[producer].cost(dec.q[producer])
                                 - zi * abated_eq + half_rs2 * zi * zi;
                xi += f_i * dt + zi * dL;
                outlay += (producers[producer].effort(a_i)
                         + producers[producer].cost(dec.q[producer])) * dt;
                L += dL;
            }
            return cara_utility(params.rho, xi - outlay);
        };

        u_eq[p] = run_arm(false);
        u_dev[p] = run_arm(true);
        diff[p] = u_dev[p] - u_eq[p];
    });

    DeviationResult out;
    out.equilibrium = estimate(u_eq);
    out.deviated = estimate(u_dev);
    out.difference = estimate(diff);
    return out;
}

void write_paths_csv(const PathBundle& bundle, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("write_paths_csv: cannot open " + path);
    std::fprintf(f, "path_id,t,L");
    for (int i = 1; i <= bundle.n_producers; ++i) std::fprintf(f, ",Y_%d", i);
    for (int i = 1; i <= bundle.n_producers; ++i) std::fprintf(f, ",a_%d", i);
    std::fprintf(f, "\n");
    const std::size_t steps1 = bundle.times.size();
    for (std::size_t s = 0; s < bundle.sample_L.size(); ++s) {
        for (std::size_t k = 0; k < steps1; ++k) {
            std::fprintf(f, "%zu,%.17g,%.17g", s, bundle.times[k],
                         bundle.sample_L[s][k]);
            for (int i = 0; i < bundle.n_producers; ++i)
                std::fprintf(f, ",%.17g", bundle.sample_Y[s][i * steps1 + k]);
            for (int i = 0; i < bundle.n_producers; ++i)
                std::fprintf(f, ",%.17g", bundle.sample_a[s][i * steps1 + k]);
            std::fprintf(f, "\n");
        }
    }
    std::fclose(f);
}

void write_summary_csv(const PathBundle& bundle, const MarketParams& params,
                       const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("write_summary_csv: cannot open " + path);
    std::fprintf(f, "estimator,mean,se,n\n");
    auto row = [&](const char* name, const CostEstimate& e) {
        std::fprintf(f, "%s,%.17g,%.17g,%ld\n", name, e.mean, e.se, e.n);
    };
    row("social_cost", estimate_social_cost(bundle, params));
    row("production_cost", estimate_production_cost(bundle));
    row("pollution_penalty", estimate(bundle.pollution_cost));
    row("effort_cost", estimate(bundle.effort_cost));
    row("terminal_pollution", estimate(bundle.terminal_L));
    if (bundle.regulated) {
        std::vector<double> payments(bundle.production_cost.size(), 0.0);
        for (std::size_t p = 0; p < payments.size(); ++p)
            for (int i = 0; i < bundle.n_producers; ++i)
                payments[p] += bundle.xi[p * bundle.n_producers + i];
        row("total_payments", estimate(payments));
    }
    std::fclose(f);
}

} // namespace isoreg
