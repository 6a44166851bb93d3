#include "cbipc/model.hpp"

#include <cmath>
#include <string>

#include "cbipc/error.hpp"

namespace cbipc {

namespace {

void check_component(const ComponentParams& c, int i) {
    const std::string s = std::to_string(i);
    auto bad = [&](const char* key, const char* what) {
        throw Error(ErrorCode::InvalidParams, std::string("model.") + key + s + " " + what,
                    std::string("model.") + key + s);
    };
    if (!(c.b > 0.0) || !std::isfinite(c.b)) bad("b", "must be positive");
    if (!std::isfinite(c.a)) bad("a", "must be finite");
    if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) bad("alpha", "must be positive");
    if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) bad("gamma", "must be positive");
    if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) bad("sigma", "must be nonnegative");
}

bool cond_ii(const ComponentParams& c) { return c.sigma > 0.0 || check_lower_bound(c.n).holds; }

}  // namespace

ConditionReport validate(const ModelParams& p) {
    check_component(p.c1, 1);
    check_component(p.c2, 2);
    if (!std::isfinite(p.k)) throw Error(ErrorCode::InvalidParams, "model.k must be finite", "model.k");
    ConditionReport r;
    r.cond_i_1 = p.c1.alpha > 1.0;
    r.cond_i_2 = p.c2.alpha > 1.0;
    r.cond_i = r.cond_i_1 && r.cond_i_2;
    r.cond_ii_1 = cond_ii(p.c1);
    r.cond_ii_2 = cond_ii(p.c2);
    r.uniform_ergodicity_expected = r.cond_i && r.cond_ii_1 && r.cond_ii_2;
    return r;
}

double phi(const ModelParams& p, double x) { return -p.c1.b * std::pow(x, p.c1.alpha) + p.c1.a * x + p.c1.gamma; }

double drift_x(const ModelParams& p, double x) { return phi(p, x); }

double drift_y(const ModelParams& p, double x, double y, double N) {
    const auto& c = p.c2;
    return p.k * std::min(x, N) * y - c.b * std::pow(y, c.alpha) + c.a * y + c.gamma;
}

double drift_root(const ModelParams& p) {
    const auto& c = p.c1;
    if (!(c.alpha > 1.0)) throw Error(ErrorCode::NotApplicable, "drift_root needs alpha1 > 1", "model.alpha1");
    double lo = c.gamma / (c.b + std::abs(c.a) + c.gamma);
    double hi = std::max(1.0, std::pow((std::abs(c.a) + c.gamma + 1.0) / c.b, 1.0 / (c.alpha - 1.0)));
    for (int i = 0; i < 200 && phi(p, lo) <= 0.0; ++i) lo *= 0.5;
    for (int i = 0; i < 200 && phi(p, hi) >= 0.0; ++i) hi *= 2.0;
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (phi(p, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

NoiseFloor noise_floor(const ModelParams& p, int component) {
    const auto& c = p.component(component);
    NoiseFloor nf;
    if (c.sigma > 0.0) {
        nf.beta = 0.5;
        nf.kappa0 = c.sigma;
    } else {
        const JumpLowerBound lb = check_lower_bound(c.n);
        if (!lb.holds)
            throw Error(ErrorCode::ConditionFails,
                        "component " + std::to_string(component) + " has neither diffusion nor small-jump activity",
                        "model.sigma" + std::to_string(component));
        nf.beta = (lb.theta - 1.0) / 2.0;
        nf.kappa0 = lb.constant / 3.0;
    }
    if (!verify_noise_floor(p, component, nf))
        throw Error(ErrorCode::ConditionFails, "noise floor grid verification failed",
                    "model.n" + std::to_string(component));
    return nf;
}

bool verify_noise_floor(const ModelParams& p, int component, const NoiseFloor& nf) {
    const auto& c = p.component(component);
    for (int j = 0; j <= 40; ++j) {
        const double x = std::ldexp(1.0, -j);
        const double lhs = c.sigma + truncated_second_moment(c.n, x) / 3.0;
        const double rhs = nf.kappa0 * std::pow(x, 1.0 - 2.0 * nf.beta);
        if (lhs < rhs * (1.0 - 1e-14)) return false;
    }
    return true;
}

DerivedScalars derived_scalars(const ModelParams& p) {
    DerivedScalars d;
    d.x0 = drift_root(p);
    const NoiseFloor nf = noise_floor(p, 2);
    d.beta = nf.beta;
    d.kappa0 = nf.kappa0;
    return d;
}

double m0_heuristic(const ModelParams& p) {
    const auto& c = p.c1;
    const double x0 = drift_root(p);
    auto excess = [&](double m) { return phi(p, m) + 2.0 * std::pow(1.0 + m, (c.alpha + 1.0) / 2.0) / (c.alpha - 1.0); };
    if (excess(x0) <= 0.0) return x0;
    double lo = x0, hi = std::max(1.0, 2.0 * x0);
    for (int i = 0; i < 2000 && excess(hi) > 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
    }
    if (excess(hi) > 0.0) throw Error(ErrorCode::NotApplicable, "M0 heuristic found no bracket", "model.alpha1");
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (excess(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

}  // namespace cbipc
