#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbipc/lyapunov.hpp"
#include "cbipc/paths.hpp"

namespace cbipc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for k successes out of n (z = 1.96 for 95%).
Interval wilson(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct TailPoint {
    double t = 0.0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t alive = 0;     // paths counted as surviving at t
    std::size_t censored = 0;  // of which censored at the horizon
};

// Survival estimates P(T > t) (or P(T >= t) when inclusive) on a time grid.
// Censored paths count as alive.
struct TailEstimate {
    std::string label;
    std::vector<TailPoint> points;
    std::size_t n_paths = 0;
    std::size_t censored = 0;
    double horizon = 0.0;
};

TailEstimate tail_from_times(const std::string& label, const std::vector<StopTime>& times,
                             const std::vector<double>& t_grid, double horizon, bool inclusive = false);
// Pointwise maximum over several estimates (the uniformity surrogate); CI taken from the maximizing one.
TailEstimate max_tail(const std::string& label, const std::vector<TailEstimate>& tails);

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t censored = 0;  // censored paths enter at the horizon (a lower bound)
};

MeanEstimate mean_of(const std::vector<StopTime>& times, double horizon);

struct HittingKind {
    enum class Type { TauMinus, TauPlus, ZetaBar0 };
    Type type = Type::TauMinus;
    double level = 0.0;  // M for TauMinus and ZetaBar0, b for TauPlus
};

const char* to_string(HittingKind::Type t);

struct HittingResult {
    std::vector<double> inits;
    std::vector<TailEstimate> tails;
    std::vector<MeanEstimate> means;
};

// Inits are x₀ values for TauMinus/TauPlus and z₀ values for ZetaBar0.
HittingResult hitting_tail(const ModelParams& p, const SimScheme& s, HittingKind kind, const std::vector<double>& inits,
                           std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                           unsigned workers = 1);

struct CouplingResult {
    std::vector<CoupledInit> inits;
    std::vector<TailEstimate> tails_X;
    std::vector<TailEstimate> tails_full;
    TailEstimate max_X;
    TailEstimate max_full;
    std::vector<double> meet_tols;
    std::string warning;
};

CouplingResult coupling_tail(const ModelParams& p, const SimScheme& s, const std::vector<CoupledInit>& inits,
                             std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                             unsigned workers = 1);

// 2·p̂(t) with the doubled Wilson interval, taken at the largest grid point <= t.
struct TvBound {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double t_used = 0.0;
};

TvBound tv_upper_bound(const TailEstimate& tail, double t);

struct RateFit {
    double lambda_hat = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t n_points = 0;
    double se_ols = 0.0;       // from the regression residuals
    double se_binomial = 0.0;  // delta-method sampling error of log p̂
    double se = 0.0;           // sqrt of the sum of squares of the two
};

// Least squares through (t, log p̂) using points with p̂ in (0.01, 0.9) that are not
// dominated by censored paths.
RateFit rate_fit(const TailEstimate& tail);

// E_{z1}[ζ₁] for the square-root diffusion with drift -bz + γ and diffusion 2σz.
double cir_mean_hitting_time(double b, double gamma, double sigma, double z1);

struct CirMcResult {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t censored = 0;
};

CirMcResult cir_mc_mean(double b, double gamma, double sigma, const SimScheme& s, double z1, std::size_t n_paths,
                        std::uint64_t seed, unsigned workers = 1);

struct AuditInit {
    double x = 0.0;
    double y = 0.0;
    double yt = 0.0;
};

struct LemmaAudit {
    std::string name;
    std::size_t violating_paths = 0;   // any violation beyond tol_cmp
    double fraction = 0.0;
    double max_violation = 0.0;        // largest raw violation (no tolerance applied)
    double mean_max_violation = 0.0;   // average over paths of the per-path largest raw violation
};

struct AuditReport {
    std::vector<AuditInit> inits;
    double M = 0.0;
    std::size_t n_paths = 0;
    std::size_t reached_exit = 0;  // paths that hit τ⁺_{2M}
    LemmaAudit lemma[3];           // Y ≥ Ỹ; Y - Ỹ ≤ Z; Z ≤ Z̄
};

// tol_cmp = 3·sqrt(v·dt·max(1, scale)) with v the predator's Gaussian variance per unit of state.
AuditReport comparison_audit(const ModelParams& p, const SimScheme& s, const std::vector<AuditInit>& inits,
                             std::size_t n_paths, double M, std::uint64_t seed, unsigned workers = 1,
                             bool localized = true);

struct ProbabilityEstimate {
    std::string label;
    double p_hat = 0.0;
    Interval ci;
    std::size_t n = 0;
    std::string argmin;  // init achieving the infimum
};

struct LocalizeConfig {
    double M = 0.0;   // 0: M₀ heuristic
    double t0 = 0.0;  // 0: from the drift certificates
    double t_cap = 0.0;  // cap on the simulated t₀ (0: horizon / 3)
    std::vector<double> a_inits;
    std::vector<CoupledInit> b_inits;
    std::vector<CoupledInit> c_inits;
    std::size_t n_paths = 1000;
};

struct LocalizeReport {
    std::string mode;  // "three-condition", "k<=0 two-stage", "fallback"
    double M = 0.0;
    double t0 = 0.0;
    double log10_t0 = 0.0;
    double t_used = 0.0;
    bool capped = false;
    ProbabilityEstimate cond_a, cond_b, cond_c;
    ProbabilityEstimate direct_2t;  // inf over (x,x,y,ỹ) of P(T̃ < 2t)
    double assembled = 0.0;         // lower bound for inf P(T̃ < 3t) (or 2t in the two-stage mode)
    bool consistent = true;         // cond_a·cond_b <= direct_2t + 3 SE
    std::vector<std::string> notes;
};

LocalizeReport localize(const ModelParams& p, const SimScheme& s, const LocalizeConfig& cfg, std::uint64_t seed,
                        unsigned workers = 1);

}  // namespace cbipc
