#include "cbipc/levy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cbipc/error.hpp"

namespace cbipc {

LevyMeasure LevyMeasure::zero() { return LevyMeasure{}; }

LevyMeasure LevyMeasure::compound_poisson(double lambda, double size) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::InvalidParams, "compound Poisson rate must be positive", "lambda");
    if (!(size > 0.0) || !std::isfinite(size))
        throw Error(ErrorCode::InvalidParams, "compound Poisson jump size must be positive", "size");
    LevyMeasure m;
    m.family_ = LevyFamily::CompoundPoisson;
    m.lambda_ = lambda;
    m.size_ = size;
    return m;
}

LevyMeasure LevyMeasure::stable(double c, double theta, double truncation) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw Error(ErrorCode::InvalidParams, "stable scale c must be positive", "c");
    if (!(theta > 1.0 && theta < 2.0))
        throw Error(ErrorCode::InvalidParams, "stable index theta must lie in (1,2)", "theta");
    if (!(truncation > 0.0))
        throw Error(ErrorCode::InvalidParams, "truncation must be positive", "truncation");
    LevyMeasure m;
    m.family_ = LevyFamily::StableLike;
    m.c_ = c;
    m.theta_ = theta;
    m.trunc_ = truncation;
    return m;
}

double LevyMeasure::density(double xi) const {
    if (family_ != LevyFamily::StableLike || !(xi > 0.0) || xi >= trunc_) return 0.0;
    return c_ * std::pow(xi, -1.0 - theta_);
}

double LevyMeasure::xi_wedge_xi2() const { return truncated_second_moment(*this, 1.0) + tail_linear_moment(*this, 1.0); }

double truncated_second_moment(const LevyMeasure& m, double x) {
    switch (m.family()) {
        case LevyFamily::Zero:
            return 0.0;
        case LevyFamily::CompoundPoisson:
            return m.size() <= x ? m.lambda() * m.size() * m.size() : 0.0;
        case LevyFamily::StableLike: {
            const double y = std::min(x, m.truncation());
            return m.c() * std::pow(y, 2.0 - m.theta()) / (2.0 - m.theta());
        }
    }
    return 0.0;
}

double tail_linear_moment(const LevyMeasure& m, double x) {
    switch (m.family()) {
        case LevyFamily::Zero:
            return 0.0;
        case LevyFamily::CompoundPoisson:
            return m.size() > x ? m.lambda() * m.size() : 0.0;
        case LevyFamily::StableLike: {
            if (x >= m.truncation()) return 0.0;
            const double e = 1.0 - m.theta();
            if (!m.truncated()) return m.c() * std::pow(x, e) / (m.theta() - 1.0);
            // x^e - u^e = x^e (1 - (u/x)^e), written to avoid cancellation near x = u
            const double d = -std::expm1(e * std::log(m.truncation() / x));
            return m.c() * std::pow(x, e) * d / (m.theta() - 1.0);
        }
    }
    return 0.0;
}

double tail_mass(const LevyMeasure& m, double x) {
    switch (m.family()) {
        case LevyFamily::Zero:
            return 0.0;
        case LevyFamily::CompoundPoisson:
            return m.size() > x ? m.lambda() : 0.0;
        case LevyFamily::StableLike: {
            if (x >= m.truncation()) return 0.0;
            const double t = m.theta();
            if (!m.truncated()) return m.c() * std::pow(x, -t) / t;
            const double d = -std::expm1(-t * std::log(m.truncation() / x));
            return m.c() * std::pow(x, -t) * d / t;
        }
    }
    return 0.0;
}

double tail_mass_inverse(const LevyMeasure& m, double rate) {
    if (m.family() != LevyFamily::StableLike)
        throw Error(ErrorCode::NotApplicable, "tail_mass_inverse is defined for StableLike measures only");
    if (!(rate > 0.0)) return m.truncation();
    const double t = m.theta();
    const double ut = m.truncated() ? std::pow(m.truncation(), -t) : 0.0;
    return std::pow(t * rate / m.c() + ut, -1.0 / t);
}

double tail_jump_from_uniform(const LevyMeasure& m, double x, double U) {
    if (!(tail_mass(m, x) > 0.0))
        throw Error(ErrorCode::ZeroTailMass, "no jump mass above x=" + std::to_string(x));
    switch (m.family()) {
        case LevyFamily::CompoundPoisson:
            return m.size();
        case LevyFamily::StableLike: {
            const double t = m.theta();
            if (!m.truncated()) return x * std::pow(U, -1.0 / t);
            // P(ξ > s | ξ > x) = (s^{-θ} - u^{-θ}) / (x^{-θ} - u^{-θ}); solve for s at probability U
            const double xr = std::pow(x, -t);
            const double ur = std::pow(m.truncation(), -t);
            const double s = std::pow(ur + U * (xr - ur), -1.0 / t);
            return std::clamp(s, x, m.truncation());
        }
        case LevyFamily::Zero:
            break;
    }
    throw Error(ErrorCode::ZeroTailMass, "zero measure has no jumps");
}

double sample_tail_jump(const LevyMeasure& m, double x, Stream& rng) {
    if (m.family() == LevyFamily::CompoundPoisson) {
        if (!(tail_mass(m, x) > 0.0))
            throw Error(ErrorCode::ZeroTailMass, "no jump mass above x=" + std::to_string(x));
        return m.size();
    }
    return tail_jump_from_uniform(m, x, rng.uniform());
}

JumpLowerBound check_lower_bound(const LevyMeasure& m) {
    JumpLowerBound out;
    if (m.family() != LevyFamily::StableLike) return out;
    const double t = m.theta();
    const double C = m.c() * std::pow(std::min(1.0, m.truncation()), 2.0 - t) / (2.0 - t);
    bool ok = true;
    for (int j = 0; j <= 20; ++j) {
        const double x = std::ldexp(1.0, -j);
        // relative slack of a few ulps: at x = 1 the two sides coincide
        if (truncated_second_moment(m, x) < C * std::pow(x, 2.0 - t) * (1.0 - 1e-14)) ok = false;
    }
    out.holds = ok;
    out.theta = t;
    out.constant = C;
    return out;
}

}  // namespace cbipc
