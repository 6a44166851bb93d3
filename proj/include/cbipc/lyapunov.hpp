#pragma once

#include <limits>
#include <string>
#include <vector>

#include "cbipc/model.hpp"
#include "cbipc/quadrature.hpp"

namespace cbipc {

enum class LyapunovKind { F, G, H, W, Identity, Square };

const char* to_string(LyapunovKind kind);

// Parameters of the three-piece construction (F, H); the unused ones stay zero for G and W.
struct LyapunovParams {
    double beta = 0.0;
    double kappa0 = 0.0;
    double l0 = 0.0;
    double l1 = 0.0;
    double c0 = 0.0;      // may underflow; log_c0 is always finite
    double log_c0 = 0.0;
    double c1 = 0.0;
    double lambda = 0.0;  // (1-β)/l₀, decay rate of the middle piece
    double alpha = 0.0;
    double b = 0.0;
    double K = 0.0;       // linear drift constant the construction absorbs (2kM + a⁺ for F, a₁⁺ for H)
    double M = 0.0;
    double p = 0.0;       // G exponent (α₁-1)/2
    int n0 = 0;
};

// A C² function on [0,∞) given by its derivative on consecutive segments:
//   Power: |V'(s)| = exp(log_k) · q(s)^{-e},  q(s) = q0 + c·(s - start)
//   Exp:   |V'(s)| = exp(log_k - rate·(s - start))
// V' has a fixed sign on (0,∞).
struct Segment {
    enum class Shape { Power, Exp };
    Shape shape = Shape::Power;
    double start = 0.0;
    double end = std::numeric_limits<double>::infinity();
    double log_k = 0.0;
    double q0 = 0.0;
    double c = 1.0;
    double e = 0.0;
    double rate = 0.0;
    double value_start = 0.0;
};

class PiecewiseLyapunov {
public:
    PiecewiseLyapunov(LyapunovKind kind, LyapunovParams params, int sign, std::vector<Segment> segments);

    LyapunovKind kind() const { return kind_; }
    const LyapunovParams& params() const { return params_; }
    const std::vector<Segment>& segments() const { return segs_; }
    int sign() const { return sign_; }

    double value(double z) const;
    double d1(double z) const;
    double d2(double z) const;
    double log_abs_d1(double z) const;
    // V''(z)/V'(z), computed without forming either factor.
    double d2_over_d1(double z) const;
    // (V(z+ξ) - V(z) - ξV'(z)) / |V'(z)|, cancellation free.
    double jump_ratio(double z, double xi) const;
    // Scale on which the derivative changes: |V'/V''|(z); infinite for linear pieces.
    double curvature_scale(double z) const;

    // sup over z >= 0; infinite for unbounded functions.
    double sup() const;

    // Per-segment evaluators, used to check junctions from both sides.
    std::size_t segment_index(double z) const;
    double piece_value(std::size_t i, double z) const;
    double piece_d1(std::size_t i, double z) const;
    double piece_d2(std::size_t i, double z) const;
    double piece_log_abs_d1(std::size_t i, double z) const;

private:
    double remainder(std::size_t i, double a, double d) const;

    LyapunovKind kind_;
    LyapunovParams params_;
    int sign_;
    std::vector<Segment> segs_;
};

PiecewiseLyapunov make_f(const ModelParams& p, double M);
PiecewiseLyapunov make_h(const ModelParams& p);
PiecewiseLyapunov make_g(const ModelParams& p);
PiecewiseLyapunov make_w(double M);
PiecewiseLyapunov make_identity();
PiecewiseLyapunov make_square();

enum class GeneratorTarget { Zbar, Xdiff, X };

const char* to_string(GeneratorTarget target);

// LV(z) is represented as scaled·exp(log_scale) with log_scale = log|V'(z)|, so that
// its sign and logarithm survive when |V'| underflows.
struct GeneratorValue {
    double value = 0.0;
    double scaled = 0.0;
    double log_scale = 0.0;
    double quad_error = 0.0;  // absolute, in scaled units
};

// Jump part ∫ (V(z+ξ)-V(z)-ξV'(z))/|V'(z)| n(dξ).
QuadResult jump_integral(const PiecewiseLyapunov& V, const LevyMeasure& n, double z, double abs_tol, double rel_tol);

GeneratorValue eval_generator(const ModelParams& p, double M, const PiecewiseLyapunov& V, double z,
                              GeneratorTarget target);
inline double eval_generator_1d(const ModelParams& p, double M, const PiecewiseLyapunov& V, double z,
                                GeneratorTarget target) {
    return eval_generator(p, M, V, z, target).value;
}

// Whether the certificate asserts LV <= -C (Negative) or LV >= C (Positive, used for w).
enum class DriftSense { Negative, Positive };

struct DriftCertificate {
    LyapunovKind func = LyapunovKind::F;
    GeneratorTarget target = GeneratorTarget::Zbar;
    DriftSense sense = DriftSense::Negative;
    LyapunovParams params;
    double M = 0.0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    std::vector<double> grid;
    std::vector<GeneratorValue> values;
    double certified_C = 0.0;        // exp(log_certified_C); may underflow
    double log_certified_C = -std::numeric_limits<double>::infinity();
    double min_scaled = 0.0;         // min over the grid of -LV/|V'| (sign witness)
    double margin_at_infinity = 0.0;  // lim_{z→∞} -LV(z); +inf when unbounded
    double log_margin_at_infinity = -std::numeric_limits<double>::infinity();
    double max_quad_error = 0.0;
    double sup_V = 0.0;
    bool valid = false;
};

// Default certification region for a function: (1/n₀, max(10³, 4 l₁)] for F and H.
std::pair<double, double> default_region(const PiecewiseLyapunov& V);

DriftCertificate certify_drift(const ModelParams& p, double M, const PiecewiseLyapunov& V, GeneratorTarget target,
                               double z_lo, double z_hi, int n_grid, unsigned workers = 1);

struct MeetingBudget {
    double sup_V = 0.0;
    double certified_C = 0.0;
    double log10_C = 0.0;
    double t0 = 0.0;  // may be +inf when not representable
    double log10_t0 = 0.0;
};

MeetingBudget meeting_time_budget(double sup_V, double certified_C, double slack = 0.05);
MeetingBudget meeting_time_budget(const DriftCertificate& cert, double slack = 0.05);
// Builds f for (p, M), certifies it on its default region with 400 points, then forms t₀.
MeetingBudget meeting_time_budget(const ModelParams& p, double M, double slack = 0.05);

// φ_n(z) = ∫₀^z∫₀^y ψ_n with ψ_n(x) = 1/(nx) on (a_n, a_{n-1}), a_n = exp(-n(n+1)/2).
class SmoothingFamily {
public:
    explicit SmoothingFamily(int n);

    int n() const { return n_; }
    double log_a(int m) const { return -0.5 * m * (m + 1.0); }
    double a_n() const;
    double a_prev() const;

    double psi(double x) const;
    double phi(double z) const;
    double dphi(double z) const;
    double d2phi(double z) const;

private:
    int n_;
};

inline SmoothingFamily make_smoothing(int n) { return SmoothingFamily(n); }

}  // namespace cbipc
