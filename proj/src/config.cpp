#include "isoreg/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {

using nlohmann::json;

// nlohmann reports byte offsets; convert to a 1-based line for error text.
std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

double number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key))
        throw ConfigError(ctx + ": missing key '" + key + "'");
    if (!j[key].is_number())
        throw ConfigError(ctx + ": key '" + key + "' must be a number");
    return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
}

std::vector<double> number_list(const json& j, const char* key,
                                const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError(ctx + ": missing array '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number())
            throw ConfigError(ctx + ": array '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

PiecewiseLinearFn piecewise_of(const json& j, const char* bp_key,
                               const char* slope_key, const std::string& ctx) {
    return PiecewiseLinearFn(number_list(j, bp_key, ctx),
                             number_list(j, slope_key, ctx));
}

EffortCost effort_of(const json& j, const std::string& ctx) {
    if (!j.contains("effort") || !j["effort"].is_object())
        throw ConfigError(ctx + ": missing object 'effort'");
    const json& e = j["effort"];
    const std::string kind = e.value("kind", "quadratic");
    if (kind == "quadratic") {
        return EffortCost::quadratic(number(e, "h", ctx + ".effort"),
                                     number(e, "a_max", ctx + ".effort"));
    }
    if (kind == "tabulated") {
        return EffortCost::tabulated(number_list(e, "a_samples", ctx + ".effort"),
                                     number_list(e, "h_samples", ctx + ".effort"));
    }
    throw ConfigError(ctx + ": unknown effort kind '" + kind + "'");
}

SocialCostFn social_cost_of(const json& m) {
    if (!m.contains("lambda"))
        throw ConfigError("market: missing key 'lambda'");
    const json& l = m["lambda"];
    SocialCostFn fn;
    if (l.is_number()) {
        fn.kind = SocialCostFn::Kind::rectified;
        fn.rate = l.get<double>();
        return fn;
    }
    if (!l.is_object())
        throw ConfigError("market.lambda: expected a number or {kind, rate}");
    const std::string kind = l.value("kind", "rectified");
    if (kind == "linear")
        fn.kind = SocialCostFn::Kind::linear;
    else if (kind == "rectified")
        fn.kind = SocialCostFn::Kind::rectified;
    else
        throw ConfigError("market.lambda: unknown kind '" + kind + "'");
    fn.rate = number(l, "rate", "market.lambda");
    return fn;
}

} // namespace

void Scenario::validate() const {
    network.validate();
    if (producers.size() != network.node_count())
        throw ConfigError("scenario: need exactly one producer per node");
    for (const auto& p : producers) p.validate();
    market.validate(producers.size());
    if (initial_pollution < 0.0)
        throw ConfigError("scenario: initial_pollution must be >= 0");
    if (sim.n_paths < 1) throw ConfigError("scenario: n_paths must be >= 1");
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError(origin + ":" + std::to_string(line_of_byte(text, err.byte)) +
                          ": " + err.what());
    }

    try {
        Scenario sc;
        sc.name = root.value("name", origin);

        if (!root.contains("nodes") || !root["nodes"].is_array())
            throw ConfigError("scenario: missing array 'nodes'");
        for (const auto& n : root["nodes"]) {
            NodeSpec node;
            node.id = static_cast<int>(number(n, "id", "node"));
            node.demand = number(n, "demand", "node");
            node.capacity = number(n, "capacity", "node");
            sc.network.nodes.push_back(node);
        }
        if (root.contains("edges")) {
            for (const auto& e : root["edges"]) {
                EdgeSpec edge;
                edge.from = static_cast<int>(number(e, "from", "edge"));
                edge.to = static_cast<int>(number(e, "to", "edge"));
                edge.resistance = number(e, "resistance", "edge");
                edge.flow_min = number(e, "flow_min", "edge");
                edge.flow_max = number(e, "flow_max", "edge");
                sc.network.edges.push_back(edge);
            }
        }

        if (!root.contains("producers") || !root["producers"].is_array())
            throw ConfigError("scenario: missing array 'producers'");
        std::size_t idx = 0;
        for (const auto& p : root["producers"]) {
            const std::string ctx = "producers[" + std::to_string(idx) + "]";
            ProducerSpec prod;
            prod.cost = piecewise_of(p, "cost_breakpoints", "cost_slopes", ctx);
            prod.pollution =
                piecewise_of(p, "pollution_breakpoints", "pollution_slopes", ctx);
            prod.effort = effort_of(p, ctx);
            if (idx < sc.network.nodes.size())
                prod.capacity = sc.network.nodes[idx].capacity;
            sc.producers.push_back(std::move(prod));
            ++idx;
        }

        if (!root.contains("market") || !root["market"].is_object())
            throw ConfigError("scenario: missing object 'market'");
        const json& m = root["market"];
        sc.market.rho = number(m, "rho", "market");
        sc.market.sigma = number(m, "sigma", "market");
        sc.market.social_cost = social_cost_of(m);
        sc.market.ell0 = number(m, "ell0", "market");
        sc.market.horizon = number(m, "horizon", "market");
        sc.market.reservations = number_list(m, "reservations", "market");

        sc.initial_pollution = number(root, "initial_pollution", "scenario");

        if (root.contains("grid")) {
            const json& g = root["grid"];
            sc.grid.n_ell = static_cast<int>(number_or(g, "n_ell", sc.grid.n_ell));
            sc.grid.n_t = static_cast<int>(number_or(g, "n_t", 0));
            if (g.contains("ell_min")) sc.grid.ell_min = g["ell_min"].get<double>();
            if (g.contains("ell_max")) sc.grid.ell_max = g["ell_max"].get<double>();
        }
        if (root.contains("simulation")) {
            const json& s = root["simulation"];
            sc.sim.n_paths = static_cast<long>(number_or(s, "n_paths", sc.sim.n_paths));
            sc.sim.dt = number_or(s, "dt", 0.0);
            sc.sim.seed = static_cast<std::uint64_t>(number_or(s, "seed", 1));
            sc.sim.antithetic = s.value("antithetic", false);
            sc.sim.store_paths =
                static_cast<int>(number_or(s, "store_paths", sc.sim.store_paths));
        }
        if (root.contains("search")) {
            const json& s = root["search"];
            sc.search.flow_steps =
                static_cast<int>(number_or(s, "flow_steps", sc.search.flow_steps));
            sc.search.refine_step = number_or(s, "refine_step", sc.search.refine_step);
        }
        if (root.contains("constant_plan")) {
            const json& c = root["constant_plan"];
            sc.constant_plan.flow_steps = static_cast<int>(
                number_or(c, "flow_steps", sc.constant_plan.flow_steps));
            sc.constant_plan.coarse_ratio = static_cast<int>(
                number_or(c, "coarse_ratio", sc.constant_plan.coarse_ratio));
            sc.constant_plan.finalists = static_cast<int>(
                number_or(c, "finalists", sc.constant_plan.finalists));
            sc.constant_plan.refine_step =
                number_or(c, "refine_step", sc.constant_plan.refine_step);
        }
        if (root.contains("alpha_quantum"))
            sc.alpha_quantum = root["alpha_quantum"].get<double>();

        sc.validate();
        return sc;
    } catch (const InputError& err) {
        throw ConfigError(origin + ": " + err.what());
    } catch (const json::exception& err) {
        throw ConfigError(origin + ": " + err.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

} // namespace isoreg
