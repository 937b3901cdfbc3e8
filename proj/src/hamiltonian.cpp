#include "isoreg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {

// Closed form for quadratic effort costs.  p is the pollution level p_i(q_i).
InnerZResult inner_z_quadratic(double p, double h, double a_max,
                               double rho_sigma2, double alpha) {
    InnerZResult r;
    if (p <= 0.0) return r; // no pollution: z* = 0, value 0
    const double denom = p * p + rho_sigma2 * h;
    double z = -alpha * p * p / denom;
    z = std::clamp(z, -h * a_max / p, 0.0);
    const double a = std::clamp(-z * p / h, 0.0, a_max);
    r.z = z;
    r.value = alpha * (1.0 - a) * p + 0.5 * h * a * a + 0.5 * rho_sigma2 * z * z;
    return r;
}

InnerZResult inner_z_scan(const ProducerSpec& prod, const MarketParams& params,
                          double alpha, double q_i) {
    const double p = prod.pollution(q_i);
    InnerZResult best;
    if (p <= 0.0) return best;
    auto value_at = [&](double z) {
        const double a = best_effort(prod, q_i, z);
        return alpha * (1.0 - a) * p + prod.effort(a)
             + 0.5 * params.rho * params.sigma * params.sigma * z * z;
    };
    // Compact interval that must contain the minimizer: beyond it the
    // quadratic term alone exceeds the attainable gain.
    const double p_bar = prod.max_pollution();
    const double h_bar = prod.effort.max_cost();
    const double c_bar = prod.max_cost();
    const double gain_radius = 2.0 * std::abs(alpha) * p_bar + h_bar + 2.0 * c_bar;
    const double rs2 = params.rho * params.sigma * params.sigma;
    const double energy_radius =
        rs2 > 0.0 ? std::sqrt(4.0 * (std::abs(alpha) * p_bar + h_bar) / rs2) : gain_radius;
    const double radius = std::max({gain_radius, energy_radius,
                                    prod.effort.max_cost() / std::max(p, 1e-30) + 1.0});
    const int n_scan = 512;
    best.z = 0.0;
    best.value = value_at(0.0);
    for (int k = -n_scan; k <= n_scan; ++k) {
        const double z = radius * k / n_scan;
        const double v = value_at(z);
        if (v < best.value) {
            best.value = v;
            best.z = z;
        }
    }
    // Golden-section polish around the best scan cell.
    double lo = best.z - radius / n_scan;
    double hi = best.z + radius / n_scan;
    constexpr double invphi = 0.6180339887498949;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = value_at(x1), f2 = value_at(x2);
    const double tol = 1e-10 * std::max(1.0, std::abs(best.z));
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - invphi * (hi - lo); f1 = value_at(x1);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + invphi * (hi - lo); f2 = value_at(x2);
        }
    }
    const double z = 0.5 * (lo + hi);
    const double v = value_at(z);
    if (v < best.value) {
        best.z = z;
        best.value = v;
    }
    return best;
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

InnerZResult inner_z_min(const ProducerSpec& prod, const MarketParams& params,
                         double alpha, double q_i) {
    if (q_i < -1e-9 || q_i > prod.capacity * (1.0 + 1e-12) + 1e-9)
        throw InputError("inner_z_min: q outside [0, capacity]");
    q_i = std::clamp(q_i, 0.0, prod.capacity);
    if (prod.effort.kind == EffortCost::Kind::quadratic) {
        return inner_z_quadratic(prod.pollution(q_i), prod.effort.curvature,
                                 prod.effort.a_max,
                                 params.rho * params.sigma * params.sigma, alpha);
    }
    return inner_z_scan(prod, params, alpha, q_i);
}

double plan_objective(const NetworkSpec& net,
                      std::span<const ProducerSpec> producers,
                      const MarketParams& params,
                      double alpha, const Plan& plan, double feas_tol) {
    if (!is_feasible(net, plan, feas_tol))
        throw InputError("plan_objective: plan is not feasible");
    double total = 0.0;
    for (std::size_t i = 0; i < producers.size(); ++i) {
        total += inner_z_min(producers[i], params, alpha, plan.q[i]).value
               + 2.0 * producers[i].cost(plan.q[i]);
    }
    return total;
}

namespace {

OptimizerSelection assemble_selection(std::span<const ProducerSpec> producers,
                                      const MarketParams& params,
                                      double alpha, Plan plan) {
    OptimizerSelection sel;
    const std::size_t n = producers.size();
    sel.z_star.resize(n);
    sel.effort_star.resize(n);
    sel.g_value = 0.0;
    sel.drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::clamp(plan.q[i], 0.0, producers[i].capacity);
        const InnerZResult zi = inner_z_min(producers[i], params, alpha, q);
        sel.z_star[i] = zi.z;
        sel.effort_star[i] = best_effort(producers[i], q, zi.z);
        sel.g_value += zi.value + 2.0 * producers[i].cost(q);
        sel.drift += (1.0 - sel.effort_star[i]) * producers[i].pollution(q);
    }
    sel.plan_star = std::move(plan);
    return sel;
}

} // namespace

OptimizerSelection minimize_g(const NetworkSpec& net,
                              std::span<const ProducerSpec> producers,
                              const MarketParams& params,
                              double alpha,
                              const SearchOptions& opts) {
    if (producers.size() != net.node_count())
        throw InputError("minimize_g: need one producer per node");
    auto objective = [&](const Plan& plan) {
        double total = 0.0;
        for (std::size_t i = 0; i < producers.size(); ++i) {
            const double q = std::clamp(plan.q[i], 0.0, producers[i].capacity);
            total += inner_z_min(producers[i], params, alpha, q).value
                   + 2.0 * producers[i].cost(q);
        }
        return total;
    };
    Plan best = minimize_over_plans(net, objective, opts);
    return assemble_selection(producers, params, alpha, std::move(best));
}

double hamiltonian_G(const NetworkSpec& net,
                     std::span<const ProducerSpec> producers,
                     const MarketParams& params,
                     double ell, double alpha, double gamma,
                     const SearchOptions& opts) {
    const OptimizerSelection sel = minimize_g(net, producers, params, alpha, opts);
    return sel.g_value + 0.5 * gamma * params.sigma * params.sigma
         + params.social_cost(ell - params.ell0);
}

HamiltonianOracle::HamiltonianOracle(const NetworkSpec& net,
                                     std::span<const ProducerSpec> producers,
                                     const MarketParams& params,
                                     const SearchOptions& opts,
                                     double alpha_quantum)
    : net_(net), producers_(producers), params_(params), opts_(opts),
      quantum_(alpha_quantum) {
    if (!(quantum_ > 0.0))
        throw InputError("oracle: alpha quantum must be > 0");
    for (Plan& plan : plan_grid(net_, std::max(2, opts_.flow_steps))) {
        CachedPlan cp;
        cp.pol.resize(producers_.size());
        double drift = 0.0;
        for (std::size_t i = 0; i < producers_.size(); ++i) {
            const double q = std::clamp(plan.q[i], 0.0, producers_[i].capacity);
            cp.pol[i] = producers_[i].pollution(q);
            cp.cost2 += 2.0 * producers_[i].cost(q);
            drift += cp.pol[i];
        }
        max_drift_ = std::max(max_drift_, drift);
        cp.plan = std::move(plan);
        grid_.push_back(std::move(cp));
    }
    if (grid_.empty())
        throw InfeasibleError("oracle: no feasible plan on the coarse flow grid");
}

const OptimizerSelection& HamiltonianOracle::at(double alpha) const {
    const long long key = std::llround(alpha / quantum_);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
    }
    OptimizerSelection sel = compute(static_cast<double>(key) * quantum_);
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.try_emplace(key, std::move(sel)).first->second;
}

OptimizerSelection HamiltonianOracle::compute(double alpha) const {
    const double rs2 = params_.rho * params_.sigma * params_.sigma;
    const bool all_quadratic =
        std::all_of(producers_.begin(), producers_.end(), [](const ProducerSpec& p) {
            return p.effort.kind == EffortCost::Kind::quadratic;
        });

    // Fast sweep over the cached grid, then the shared refinement driver
    // seeded implicitly by rerunning it with the same coarse resolution.
    const CachedPlan* best = nullptr;
    double best_value = std::numeric_limits<double>::infinity();
    for (const CachedPlan& cp : grid_) {
        double value = cp.cost2;
        for (std::size_t i = 0; i < producers_.size(); ++i) {
            if (all_quadratic)
                value += inner_z_quadratic(cp.pol[i], producers_[i].effort.curvature,
                                           producers_[i].effort.a_max, rs2, alpha).value;
            else
                value += inner_z_min(producers_[i], params_, alpha, cp.plan.q[i]).value;
        }
        bool take = false;
        if (!best) {
            take = true;
        } else {
            const double tie = 1e-12 * std::max(1.0, std::abs(best_value));
            take = value < best_value - tie ||
                   (value < best_value + tie && lex_less(cp.plan.phi, best->plan.phi));
        }
        if (take) {
            best_value = value;
            best = &cp;
        }
    }

    // Pattern-search refinement from the best grid plan.
    auto objective = [&](const Plan& plan) {
        double total = 0.0;
        for (std::size_t i = 0; i < producers_.size(); ++i) {
            const double q = std::clamp(plan.q[i], 0.0, producers_[i].capacity);
            total += inner_z_min(producers_[i], params_, alpha, q).value
                   + 2.0 * producers_[i].cost(q);
        }
        return total;
    };
    Plan plan = best->plan;
    if (net_.edge_count() > 0) {
        double max_width = 0.0;
        for (const auto& e : net_.edges)
            max_width = std::max(max_width, e.flow_max - e.flow_min);
        const double step = max_width / (std::max(2, opts_.flow_steps) - 1);
        plan = refine_over_flows(net_, objective, std::move(plan), best_value,
                                 step, std::max(opts_.refine_step, 1e-12))
                   .plan;
    }
    return assemble_selection(producers_, params_, alpha, std::move(plan));
}

FixedPlanHamiltonian::FixedPlanHamiltonian(std::span<const ProducerSpec> producers,
                                           const MarketParams& params, Plan plan)
    : producers_(producers), params_(params), plan_(std::move(plan)) {
    pol_.resize(producers_.size());
    for (std::size_t i = 0; i < producers_.size(); ++i) {
        const double q = std::clamp(plan_.q[i], 0.0, producers_[i].capacity);
        pol_[i] = producers_[i].pollution(q);
        cost2_ += 2.0 * producers_[i].cost(q);
    }
}

OptimizerSelection FixedPlanHamiltonian::at(double alpha) const {
    OptimizerSelection sel;
    const std::size_t n = producers_.size();
    sel.z_star.resize(n);
    sel.effort_star.resize(n);
    sel.g_value = cost2_;
    sel.drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::clamp(plan_.q[i], 0.0, producers_[i].capacity);
        const InnerZResult zi = inner_z_min(producers_[i], params_, alpha, q);
        sel.z_star[i] = zi.z;
        sel.effort_star[i] = best_effort(producers_[i], q, zi.z);
        sel.g_value += zi.value;
        sel.drift += (1.0 - sel.effort_star[i]) * pol_[i];
    }
    sel.plan_star = plan_;
    return sel;
}

} // namespace isoreg
