#include "isoreg/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {

constexpr double kBoxSlack = 1e-9;

bool lex_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double box_slack(double width) { return kBoxSlack * std::max(1.0, width); }

} // namespace

void NetworkSpec::validate() const {
    if (nodes.empty()) throw InputError("network: need at least one node");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id != static_cast<int>(i) + 1)
            throw InputError("network: node ids must be 1..N in order");
        if (nodes[i].demand < 0.0) throw InputError("network: demand must be >= 0");
        if (nodes[i].capacity < 0.0) throw InputError("network: capacity must be >= 0");
    }
    const int n = static_cast<int>(nodes.size());
    for (const auto& e : edges) {
        if (e.from < 1 || e.from > n || e.to < 1 || e.to > n)
            throw InputError("network: edge endpoint out of range");
        if (e.from == e.to) throw InputError("network: self-loop edge");
        if (e.resistance < 0.0) throw InputError("network: resistance must be >= 0");
        if (!(0.0 <= e.flow_min && e.flow_min <= e.flow_max))
            throw InputError("network: need 0 <= flow_min <= flow_max");
    }
}

std::vector<double> induced_production(const NetworkSpec& net,
                                       std::span<const double> phi) {
    if (phi.size() != net.edge_count())
        throw InputError("induced_production: flow vector has wrong length");
    std::vector<double> q(net.node_count());
    for (std::size_t i = 0; i < net.node_count(); ++i) q[i] = net.nodes[i].demand;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
        const auto& edge = net.edges[e];
        const double half_loss = 0.5 * edge.resistance * phi[e] * phi[e];
        q[edge.from - 1] += half_loss + phi[e]; // sgn(e, from) = -1
        q[edge.to - 1] += half_loss - phi[e];   // sgn(e, to) = +1
    }
    return q;
}

std::vector<double> balance_residual(const NetworkSpec& net, const Plan& plan) {
    if (plan.q.size() != net.node_count() || plan.phi.size() != net.edge_count())
        throw InputError("balance_residual: plan dimensions do not match network");
    std::vector<double> res(net.node_count());
    for (std::size_t i = 0; i < net.node_count(); ++i)
        res[i] = plan.q[i] - net.nodes[i].demand;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
        const auto& edge = net.edges[e];
        const double half_loss = 0.5 * edge.resistance * plan.phi[e] * plan.phi[e];
        res[edge.from - 1] += -plan.phi[e] - half_loss; // sgn(e, from) = -1
        res[edge.to - 1] += plan.phi[e] - half_loss;    // sgn(e, to) = +1
    }
    return res;
}

bool is_feasible(const NetworkSpec& net, const Plan& plan, double tol) {
    if (!(tol > 0.0)) throw InputError("is_feasible: tol must be > 0");
    if (plan.q.size() != net.node_count() || plan.phi.size() != net.edge_count())
        return false;
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        const double slack = box_slack(net.nodes[i].capacity);
        if (plan.q[i] < -slack || plan.q[i] > net.nodes[i].capacity + slack)
            return false;
    }
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
        const auto& edge = net.edges[e];
        const double slack = box_slack(edge.flow_max - edge.flow_min);
        if (plan.phi[e] < edge.flow_min - slack || plan.phi[e] > edge.flow_max + slack)
            return false;
    }
    for (double r : balance_residual(net, plan))
        if (std::abs(r) > tol) return false;
    return true;
}

namespace {

// Visits every point of the flow box grid in lexicographic order.
template <class Visit>
void for_each_grid_flow(const NetworkSpec& net, int resolution, Visit&& visit) {
    const std::size_t ne = net.edge_count();
    std::vector<double> phi(ne);
    std::vector<int> idx(ne, 0);
    for (;;) {
        for (std::size_t e = 0; e < ne; ++e) {
            const auto& edge = net.edges[e];
            const double w = edge.flow_max - edge.flow_min;
            phi[e] = edge.flow_min + w * idx[e] / (resolution - 1);
        }
        visit(phi);
        std::size_t e = ne;
        while (e > 0) {
            --e;
            if (++idx[e] < resolution) break;
            idx[e] = 0;
            if (e == 0) return;
        }
        if (ne == 0) return;
    }
}

// Production-box check for a plan whose balance holds by construction.
bool q_in_box(const NetworkSpec& net, std::span<const double> q) {
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        const double slack = box_slack(net.nodes[i].capacity);
        if (q[i] < -slack || q[i] > net.nodes[i].capacity + slack) return false;
    }
    return true;
}

} // namespace

std::vector<Plan> plan_grid(const NetworkSpec& net, int resolution) {
    if (resolution < 2) throw InputError("plan_grid: resolution must be >= 2");
    net.validate();
    std::vector<Plan> out;
    for_each_grid_flow(net, resolution, [&](const std::vector<double>& phi) {
        std::vector<double> q = induced_production(net, phi);
        if (q_in_box(net, q)) out.push_back(Plan{std::move(q), phi});
    });
    return out;
}

Plan minimize_over_plans(const NetworkSpec& net,
                         const std::function<double(const Plan&)>& objective,
                         const SearchOptions& opts) {
    net.validate();
    const std::size_t ne = net.edge_count();
    const double inf = std::numeric_limits<double>::infinity();

    Plan best;
    double best_value = inf;
    bool have_best = false;
    auto consider = [&](const std::vector<double>& phi) {
        Plan plan{induced_production(net, phi), phi};
        if (!q_in_box(net, plan.q)) return;
        const double v = objective(plan);
        if (!std::isfinite(v)) return;
        bool take = false;
        if (!have_best) {
            take = true;
        } else {
            const double tie = 1e-12 * std::max(1.0, std::abs(best_value));
            take = v < best_value - tie ||
                   (v < best_value + tie && lex_less(plan.phi, best.phi));
        }
        if (take) {
            best_value = v;
            best = std::move(plan);
            have_best = true;
        }
    };

    for_each_grid_flow(net, std::max(2, opts.flow_steps), consider);
    if (!have_best)
        throw InfeasibleError("plan search: no feasible plan found on the flow grid");
    if (ne == 0) return best;

    double max_width = 0.0;
    for (const auto& e : net.edges) max_width = std::max(max_width, e.flow_max - e.flow_min);
    const double step = max_width / (std::max(2, opts.flow_steps) - 1);
    return refine_over_flows(net, objective, std::move(best), best_value, step,
                             std::max(opts.refine_step, 1e-12))
        .plan;
}

namespace {

// Direction set for the pattern search: the full {-1,0,1}^ne stencil for a
// handful of edges, coordinate and pairwise diagonal moves beyond that.
std::vector<std::vector<int>> poll_directions(std::size_t ne) {
    std::vector<std::vector<int>> dirs;
    if (ne <= 4) {
        std::vector<int> d(ne, -1);
        for (;;) {
            if (std::any_of(d.begin(), d.end(), [](int x) { return x != 0; }))
                dirs.push_back(d);
            std::size_t e = 0;
            while (e < ne && d[e] == 1) d[e++] = -1;
            if (e == ne) break;
            ++d[e];
        }
        return dirs;
    }
    for (std::size_t e = 0; e < ne; ++e) {
        for (int s : {-1, 1}) {
            std::vector<int> d(ne, 0);
            d[e] = s;
            dirs.push_back(d);
        }
    }
    for (std::size_t a = 0; a < ne; ++a) {
        for (std::size_t b = a + 1; b < ne; ++b) {
            for (int sa : {-1, 1}) {
                for (int sb : {-1, 1}) {
                    std::vector<int> d(ne, 0);
                    d[a] = sa;
                    d[b] = sb;
                    dirs.push_back(d);
                }
            }
        }
    }
    return dirs;
}

} // namespace

RefinedPlan refine_over_flows(const NetworkSpec& net,
                              const std::function<double(const Plan&)>& objective,
                              Plan start, double start_value, double step,
                              double target_step) {
    const std::size_t ne = net.edge_count();
    RefinedPlan best{std::move(start), start_value};
    if (ne == 0) return best;

    const auto dirs = poll_directions(ne);
    std::vector<double> phi(ne);
    while (step > target_step) {
        bool improved = false;
        for (const auto& d : dirs) {
            bool moved = false;
            for (std::size_t e = 0; e < ne; ++e) {
                phi[e] = std::clamp(best.plan.phi[e] + d[e] * step,
                                    net.edges[e].flow_min, net.edges[e].flow_max);
                moved = moved || phi[e] != best.plan.phi[e];
            }
            if (!moved) continue;
            Plan cand{induced_production(net, phi), phi};
            if (!q_in_box(net, cand.q)) continue;
            const double v = objective(cand);
            if (!std::isfinite(v)) continue;
            if (v < best.value - 1e-12 * std::max(1.0, std::abs(best.value))) {
                best.value = v;
                best.plan = std::move(cand);
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

Plan min_cost_dispatch(const NetworkSpec& net,
                       std::span<const ProducerSpec> producers,
                       double tol,
                       const SearchOptions& opts) {
    if (producers.size() != net.node_count())
        throw InputError("min_cost_dispatch: need one producer per node");
    auto objective = [&](const Plan& plan) {
        double total = 0.0;
        for (std::size_t i = 0; i < producers.size(); ++i)
            total += producers[i].cost(plan.q[i]);
        return total;
    };
    Plan best = minimize_over_plans(net, objective, opts);
    if (!is_feasible(net, best, tol))
        throw InfeasibleError("min_cost_dispatch: best plan fails feasibility check");
    return best;
}

} // namespace isoreg
