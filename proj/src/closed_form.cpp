#include "isoreg/closed_form.hpp"

#include <cmath>

#include "isoreg/errors.hpp"

namespace isoreg {

void ExplicitSpec::validate() const {
    if (producers.empty()) throw InputError("explicit: need at least one producer");
    for (const auto& p : producers) {
        if (!(p.p > 0.0 && p.q > 0.0 && p.h > 0.0 && p.a_max > 0.0))
            throw InputError("explicit: producer parameters must be positive");
        if (p.cost < 0.0) throw InputError("explicit: cost must be >= 0");
    }
    if (!(lambda > 0.0 && sigma > 0.0 && rho > 0.0 && T > 0.0))
        throw InputError("explicit: lambda, sigma, rho, T must be positive");
}

double ExplicitSpec::z_coefficient(std::size_t i) const {
    const double pq_i = pq(i);
    return lambda * pq_i * pq_i
         / (sigma * sigma * rho * producers[i].h + pq_i * pq_i);
}

double ExplicitSpec::regime_margin(std::size_t i) const {
    const double pq_i = pq(i);
    const double h = producers[i].h;
    return producers[i].a_max * h * (sigma * sigma * rho * h + pq_i * pq_i)
         / (pq_i * pq_i * pq_i);
}

double ExplicitSpec::mu() const {
    double s = 0.0;
    for (std::size_t i = 0; i < producers.size(); ++i) s += pq(i);
    return s;
}

double ExplicitSpec::C() const {
    double s = 0.0;
    for (std::size_t i = 0; i < producers.size(); ++i) {
        const double pq_i = pq(i);
        const double h = producers[i].h;
        s += pq_i * pq_i * pq_i * pq_i
           / (2.0 * h * (sigma * sigma * rho * h + pq_i * pq_i));
    }
    return s;
}

double ExplicitSpec::D() const {
    double s = 0.0;
    for (const auto& p : producers) s += 2.0 * p.cost;
    return s;
}

ExplicitSpec ExplicitSpec::from_model(std::span<const ProducerSpec> producers,
                                      const MarketParams& params, const Plan& plan) {
    if (plan.q.size() != producers.size())
        throw InputError("explicit: plan does not match producers");
    if (params.social_cost.kind != SocialCostFn::Kind::linear)
        throw InputError("explicit: social cost must be linear");
    ExplicitSpec spec;
    spec.lambda = params.social_cost.rate;
    spec.sigma = params.sigma;
    spec.rho = params.rho;
    spec.T = params.horizon;
    spec.ell0 = params.ell0;
    for (std::size_t i = 0; i < producers.size(); ++i) {
        const auto& prod = producers[i];
        if (prod.pollution.slopes.size() != 1)
            throw InputError("explicit: pollution must be a single-slope function");
        if (prod.effort.kind != EffortCost::Kind::quadratic)
            throw InputError("explicit: effort cost must be quadratic");
        ExplicitProducer ep;
        ep.p = prod.pollution.slopes[0];
        ep.q = plan.q[i];
        ep.h = prod.effort.curvature;
        ep.a_max = prod.effort.a_max;
        ep.cost = prod.cost(plan.q[i]);
        spec.producers.push_back(ep);
    }
    spec.validate();
    return spec;
}

RegimeCheck check_regime(const ExplicitSpec& spec) {
    spec.validate();
    RegimeCheck rc;
    rc.valid = true;
    for (std::size_t i = 0; i < spec.producers.size(); ++i) {
        rc.margins.push_back(spec.regime_margin(i));
        if (rc.margins.back() < spec.lambda * spec.T) rc.valid = false;
    }
    return rc;
}

namespace {
void require_regime(const ExplicitSpec& spec) {
    if (!check_regime(spec).valid)
        throw RegimeError("explicit: regime M_i >= lambda T violated");
}
} // namespace

ClosedPolicyPoint closed_policy(const ExplicitSpec& spec, double s) {
    require_regime(spec);
    if (s < 0.0 || s > spec.T * (1.0 + 1e-12))
        throw InputError("closed_policy: time outside [0, T]");
    ClosedPolicyPoint out;
    for (std::size_t i = 0; i < spec.producers.size(); ++i) {
        const double zi = spec.z_coefficient(i);
        out.z.push_back(zi * (s - spec.T));
        out.a.push_back((spec.T - s) * zi * spec.pq(i) / spec.producers[i].h);
    }
    return out;
}

double closed_value(const ExplicitSpec& spec, double t, double ell) {
    require_regime(spec);
    const double tau = spec.T - t;
    return spec.D() * tau + spec.lambda * (ell - spec.ell0) * tau
         + 0.5 * spec.lambda * spec.mu() * tau * tau
         - spec.C() * spec.lambda * spec.lambda * tau * tau * tau / 3.0;
}

} // namespace isoreg
