#pragma once

#include "cbipc/levy.hpp"

namespace cbipc {

// Coefficients of one component: competition b·x^α, linear growth a·x,
// immigration γ, branching diffusion σ, jump measure n.
struct ComponentParams {
    double b = 1.0;
    double a = 0.0;
    double alpha = 1.5;
    double gamma = 1.0;
    double sigma = 0.0;
    LevyMeasure n;
};

struct ModelParams {
    ComponentParams c1;  // prey X
    ComponentParams c2;  // predator Y
    double k = 0.0;      // predation coupling

    const ComponentParams& component(int i) const { return i == 1 ? c1 : c2; }
};

struct ConditionReport {
    bool cond_i_1 = false;  // α₁ > 1
    bool cond_i_2 = false;  // α₂ > 1
    bool cond_i = false;
    bool cond_ii_1 = false;  // σ₁ > 0 or the small-jump lower bound holds for n₁
    bool cond_ii_2 = false;
    bool uniform_ergodicity_expected = false;
};

struct NoiseFloor {
    double beta = 0.0;
    double kappa0 = 0.0;
};

struct DerivedScalars {
    double x0 = 0.0;
    double beta = 0.0;
    double kappa0 = 0.0;
};

// Throws InvalidParams (naming the offending key, e.g. "model.b1") when a standing assumption fails.
ConditionReport validate(const ModelParams& p);

// φ(x) = -b₁x^{α₁} + a₁x + γ₁
double phi(const ModelParams& p, double x);

double drift_x(const ModelParams& p, double x);
// Predator drift with predation k·min(x, N)·y; N = +inf for the untruncated system.
double drift_y(const ModelParams& p, double x, double y, double N);

// Positive root of φ; requires α₁ > 1.
double drift_root(const ModelParams& p);

// (β, κ₀) for the given component (1 or 2).
NoiseFloor noise_floor(const ModelParams& p, int component);

// Checks σ + m₂(x)/3 >= κ₀ x^{1-2β} on x = 2^{-j}, j = 0..40.
bool verify_noise_floor(const ModelParams& p, int component, const NoiseFloor& nf);

DerivedScalars derived_scalars(const ModelParams& p);

// Smallest M >= x₀ with φ(M) <= -2(1+M)^{(α₁+1)/2}/(α₁-1), by bisection.
double m0_heuristic(const ModelParams& p);

}  // namespace cbipc
