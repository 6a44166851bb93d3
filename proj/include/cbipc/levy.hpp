#pragma once

#include <limits>

#include "cbipc/rng.hpp"

namespace cbipc {

enum class LevyFamily { Zero, CompoundPoisson, StableLike };

// Jump intensity n(dξ) on (0,∞).
//   Zero:            n = 0
//   CompoundPoisson: n = λ·δ_s (all jumps have size s)
//   StableLike:      n(dξ) = c ξ^{-1-θ} 1{ξ < u} dξ, θ in (1,2), u in (0,∞]
class LevyMeasure {
public:
    LevyMeasure() = default;

    static LevyMeasure zero();
    static LevyMeasure compound_poisson(double lambda, double size);
    static LevyMeasure stable(double c, double theta,
                              double truncation = std::numeric_limits<double>::infinity());

    LevyFamily family() const { return family_; }
    double lambda() const { return lambda_; }
    double size() const { return size_; }
    double c() const { return c_; }
    double theta() const { return theta_; }
    double truncation() const { return trunc_; }
    bool truncated() const { return trunc_ < std::numeric_limits<double>::infinity(); }

    // Lebesgue density; zero for Zero, and CompoundPoisson has an atom instead.
    double density(double xi) const;

    // ∫ (ξ ∧ ξ²) n(dξ)
    double xi_wedge_xi2() const;

private:
    LevyFamily family_ = LevyFamily::Zero;
    double lambda_ = 0.0;
    double size_ = 0.0;
    double c_ = 0.0;
    double theta_ = 0.0;
    double trunc_ = std::numeric_limits<double>::infinity();
};

struct JumpLowerBound {
    bool holds = false;
    double theta = 0.0;
    double constant = 0.0;
};

// ∫₀^x ξ² n(dξ)
double truncated_second_moment(const LevyMeasure& m, double x);
// ∫_x^∞ ξ n(dξ)
double tail_linear_moment(const LevyMeasure& m, double x);
// n((x,∞))
double tail_mass(const LevyMeasure& m, double x);

// The largest x with tail_mass(m, x) <= rate. Only meaningful for StableLike.
double tail_mass_inverse(const LevyMeasure& m, double rate);

// Inverse-CDF map of the normalized restriction of m to (x,∞); U in (0,1].
double tail_jump_from_uniform(const LevyMeasure& m, double x, double U);
double sample_tail_jump(const LevyMeasure& m, double x, Stream& rng);

JumpLowerBound check_lower_bound(const LevyMeasure& m);

}  // namespace cbipc
