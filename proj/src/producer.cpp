#include "isoreg/producer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "isoreg/errors.hpp"

namespace isoreg {

namespace {

constexpr double kEffortTol = 1e-10;
constexpr double kBoxSlack = 1e-9;

// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

EffortCost EffortCost::quadratic(double curvature, double a_max) {
    EffortCost e;
    e.kind = Kind::quadratic;
    e.curvature = curvature;
    e.a_max = a_max;
    e.validate();
    return e;
}

EffortCost EffortCost::tabulated(std::vector<double> a, std::vector<double> h) {
    EffortCost e;
    e.kind = Kind::tabulated;
    e.sample_a = std::move(a);
    e.sample_h = std::move(h);
    e.a_max = e.sample_a.empty() ? 0.0 : e.sample_a.back();
    e.validate();
    return e;
}

void EffortCost::validate() const {
    if (!(a_max > 0.0) || a_max > 1.0)
        throw InputError("effort: a_max must lie in (0, 1]");
    if (kind == Kind::quadratic) {
        if (curvature < 0.0)
            throw InputError("effort: quadratic curvature must be >= 0");
        return;
    }
    if (sample_a.size() < 2 || sample_a.size() != sample_h.size())
        throw InputError("effort: tabulated cost needs matching samples");
    if (sample_a.front() != 0.0 || sample_h.front() != 0.0)
        throw InputError("effort: tabulated cost must start at (0, 0)");
    for (std::size_t k = 1; k < sample_a.size(); ++k) {
        if (!(sample_a[k] > sample_a[k - 1]))
            throw InputError("effort: tabulated abscissae must increase");
        if (sample_h[k] < sample_h[k - 1])
            throw InputError("effort: tabulated cost must be nondecreasing");
    }
    // Convexity of the interpolant: slopes nondecreasing.
    double prev = -1e300;
    for (std::size_t k = 1; k < sample_a.size(); ++k) {
        double s = (sample_h[k] - sample_h[k - 1]) / (sample_a[k] - sample_a[k - 1]);
        if (s + 1e-12 < prev)
            throw InputError("effort: tabulated cost must be convex");
        prev = s;
    }
}

double EffortCost::operator()(double a) const {
    if (a < -kBoxSlack || a > a_max + kBoxSlack)
        throw InputError("effort: argument outside [0, a_max]");
    a = std::clamp(a, 0.0, a_max);
    if (kind == Kind::quadratic) return 0.5 * curvature * a * a;
    auto it = std::upper_bound(sample_a.begin(), sample_a.end(), a);
    std::size_t k = std::min<std::size_t>(it - sample_a.begin(), sample_a.size() - 1);
    if (k == 0) k = 1;
    double w = (a - sample_a[k - 1]) / (sample_a[k] - sample_a[k - 1]);
    return sample_h[k - 1] + w * (sample_h[k] - sample_h[k - 1]);
}

double EffortCost::max_cost() const {
    return (*this)(a_max);
}

void ProducerSpec::validate() const {
    cost.validate();
    pollution.validate();
    effort.validate();
    if (!(capacity >= 0.0))
        throw InputError("producer: capacity must be >= 0");
    if (!cost.nondecreasing() || !pollution.nondecreasing())
        throw InputError("producer: cost and pollution must be nondecreasing");
}

double SocialCostFn::operator()(double x) const {
    if (kind == Kind::linear) return rate * x;
    return x > 0.0 ? rate * x : 0.0;
}

double SocialCostFn::derivative(double x) const {
    if (kind == Kind::linear) return rate;
    return x > 0.0 ? rate : 0.0;
}

void MarketParams::validate(std::size_t n_producers) const {
    if (!(rho > 0.0)) throw InputError("market: rho must be > 0");
    if (!(sigma > 0.0)) throw InputError("market: sigma must be > 0");
    if (!(horizon > 0.0)) throw InputError("market: horizon must be > 0");
    if (reservations.size() != n_producers)
        throw InputError("market: need one reservation utility per producer");
    for (double r : reservations)
        if (!(r < 0.0))
            throw InputError("market: reservation utilities must be negative");
}

double MarketParams::initial_certainty_equivalent(std::size_t i) const {
    return certainty_equivalent(rho, reservations.at(i));
}

double cara_utility(double rho, double x) {
    if (!(rho > 0.0)) throw InputError("cara: rho must be > 0");
    return -std::exp(-rho * x);
}

double certainty_equivalent(double rho, double u) {
    if (!(rho > 0.0)) throw InputError("cara: rho must be > 0");
    if (!(u < 0.0)) throw InputError("cara: utility must be negative");
    return -std::log(-u) / rho;
}

double best_effort(const ProducerSpec& prod, double q_i, double z_i) {
    if (q_i < -kBoxSlack || q_i > prod.capacity * (1.0 + 1e-12) + kBoxSlack)
        throw InputError("best_effort: q outside [0, capacity]");
    const double p = prod.pollution(std::clamp(q_i, 0.0, prod.capacity));
    const double a_max = prod.effort.a_max;
    if (prod.effort.kind == EffortCost::Kind::quadratic) {
        const double h = prod.effort.curvature;
        if (h == 0.0) {
            // Degenerate: objective is linear in a with slope z*p.
            return z_i * p < 0.0 ? a_max : 0.0;
        }
        return std::clamp(-z_i * p / h, 0.0, a_max);
    }
    // Tabulated convex cost: minimize h(a) + z p a over [0, a_max].
    auto obj = [&](double a) { return prod.effort(a) + z_i * p * a; };
    const int n_scan = 64;
    double best_a = 0.0, best_v = obj(0.0);
    for (int k = 1; k <= n_scan; ++k) {
        double a = a_max * k / n_scan;
        double v = obj(a);
        if (v < best_v) {
            best_v = v;
            best_a = a;
        }
    }
    double lo = std::max(0.0, best_a - a_max / n_scan);
    double hi = std::min(a_max, best_a + a_max / n_scan);
    return golden_min(obj, lo, hi, kEffortTol);
}

std::vector<double> generator_f(std::span<const ProducerSpec> producers,
                                const MarketParams& params,
                                std::span<const double> q,
                                std::span<const double> z) {
    const std::size_t n = producers.size();
    if (q.size() != n || z.size() != n)
        throw InputError("generator_f: dimension mismatch");
    std::vector<double> effort(n), pol(n);
    double abated = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        effort[i] = best_effort(producers[i], q[i], z[i]);
        pol[i] = producers[i].pollution(q[i]);
        abated += (1.0 - effort[i]) * pol[i];
    }
    std::vector<double> f(n);
    const double half_rs2 = 0.5 * params.rho * params.sigma * params.sigma;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = producers[i].effort(effort[i]) + producers[i].cost(q[i])
             - z[i] * abated + half_rs2 * z[i] * z[i];
    }
    return f;
}

} // namespace isoreg
