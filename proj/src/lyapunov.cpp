#include "cbipc/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "cbipc/error.hpp"
#include "cbipc/parallel.hpp"

namespace cbipc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ((1+v)^κ - 1 - κv)/κ, with the κ → 0 limit log1p(v) - v.
double pow_remainder(double kappa, double v) {
    if (kappa == 1.0) return 0.0;
    if (std::abs(v) < 0.1) {
        double term = 0.5 * (kappa - 1.0) * v * v;
        double sum = term;
        for (int j = 2; j < 80; ++j) {
            term *= (kappa - j) / (j + 1.0) * v;
            sum += term;
            if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    if (kappa == 0.0) return std::log1p(v) - v;
    return (std::expm1(kappa * std::log1p(v)) - kappa * v) / kappa;
}

// e^{-u} - 1 + u
double exp_remainder(double u) {
    if (u < 0.1) {
        double term = 0.5 * u * u;
        double sum = term;
        for (int j = 2; j < 40; ++j) {
            term *= -u / (j + 1.0);
            sum += term;
            if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    return std::expm1(-u) + u;
}

// (e^{κL} - 1)/κ with the κ → 0 limit L
double exp_ratio(double kappa, double L) { return kappa == 0.0 ? L : std::expm1(kappa * L) / kappa; }

double q_at(const Segment& s, double z) { return s.q0 + s.c * (z - s.start); }

}  // namespace

const char* to_string(LyapunovKind kind) {
    switch (kind) {
        case LyapunovKind::F: return "f";
        case LyapunovKind::G: return "g";
        case LyapunovKind::H: return "h";
        case LyapunovKind::W: return "w";
        case LyapunovKind::Identity: return "identity";
        case LyapunovKind::Square: return "square";
    }
    return "?";
}

const char* to_string(GeneratorTarget target) {
    switch (target) {
        case GeneratorTarget::Zbar: return "Zbar";
        case GeneratorTarget::Xdiff: return "Xdiff";
        case GeneratorTarget::X: return "X";
    }
    return "?";
}

PiecewiseLyapunov::PiecewiseLyapunov(LyapunovKind kind, LyapunovParams params, int sign, std::vector<Segment> segments)
    : kind_(kind), params_(params), sign_(sign), segs_(std::move(segments)) {}

std::size_t PiecewiseLyapunov::segment_index(double z) const {
    for (std::size_t i = 0; i + 1 < segs_.size(); ++i)
        if (z <= segs_[i].end) return i;
    return segs_.size() - 1;
}

double PiecewiseLyapunov::piece_log_abs_d1(std::size_t i, double z) const {
    const Segment& s = segs_[i];
    if (s.shape == Segment::Shape::Exp) return s.log_k - s.rate * (z - s.start);
    if (s.e == 0.0) return s.log_k;
    return s.log_k - s.e * std::log(q_at(s, z));
}

double PiecewiseLyapunov::piece_d1(std::size_t i, double z) const { return sign_ * std::exp(piece_log_abs_d1(i, z)); }

double PiecewiseLyapunov::piece_d2(std::size_t i, double z) const {
    const Segment& s = segs_[i];
    const double ratio = s.shape == Segment::Shape::Exp ? -s.rate : -s.e * s.c / q_at(s, z);
    return piece_d1(i, z) * ratio;
}

double PiecewiseLyapunov::piece_value(std::size_t i, double z) const {
    const Segment& s = segs_[i];
    const double a = s.start;
    double inc;
    if (s.shape == Segment::Shape::Exp) {
        inc = std::exp(s.log_k) * (-std::expm1(-s.rate * (z - a))) / s.rate;
    } else if (s.q0 > 0.0) {
        const double kappa = 1.0 - s.e;
        const double scale = std::exp(s.log_k - s.e * std::log(s.q0)) * s.q0 / s.c;
        inc = scale * exp_ratio(kappa, std::log(q_at(s, z) / s.q0));
    } else {
        const double kappa = 1.0 - s.e;
        inc = std::exp(s.log_k) * std::pow(q_at(s, z), kappa) / (s.c * kappa);
    }
    return s.value_start + sign_ * inc;
}

double PiecewiseLyapunov::value(double z) const { return piece_value(segment_index(z), z); }
double PiecewiseLyapunov::d1(double z) const { return piece_d1(segment_index(z), z); }
double PiecewiseLyapunov::d2(double z) const { return piece_d2(segment_index(z), z); }
double PiecewiseLyapunov::log_abs_d1(double z) const { return piece_log_abs_d1(segment_index(z), z); }

double PiecewiseLyapunov::d2_over_d1(double z) const {
    const Segment& s = segs_[segment_index(z)];
    if (s.shape == Segment::Shape::Exp) return -s.rate;
    return -s.e * s.c / q_at(s, z);
}

double PiecewiseLyapunov::curvature_scale(double z) const {
    const double r = std::abs(d2_over_d1(z));
    return r > 0.0 ? 1.0 / r : kInf;
}

double PiecewiseLyapunov::sup() const {
    if (sign_ < 0) return value(0.0);
    const Segment& s = segs_.back();
    if (s.shape == Segment::Shape::Exp) return s.value_start + std::exp(s.log_k) / s.rate;
    if (s.e <= 1.0 || !(s.q0 > 0.0)) return kInf;
    return s.value_start + std::exp(s.log_k - s.e * std::log(s.q0)) * s.q0 / (s.c * (s.e - 1.0));
}

// ∫_a^{a+d} (|V'(s)|/|V'(a)| - 1) ds inside segment i
double PiecewiseLyapunov::remainder(std::size_t i, double a, double d) const {
    const Segment& s = segs_[i];
    if (d <= 0.0) return 0.0;
    if (s.shape == Segment::Shape::Exp) return -exp_remainder(s.rate * d) / s.rate;
    if (s.e == 0.0) return 0.0;
    const double qa = q_at(s, a);
    return qa / s.c * pow_remainder(1.0 - s.e, s.c * d / qa);
}

double PiecewiseLyapunov::jump_ratio(double z, double xi) const {
    std::size_t i = segment_index(z);
    const double log_d1z = piece_log_abs_d1(i, z);
    const double end = z + xi;
    // use ξ itself when the jump stays in the segment: (z+ξ)-z loses digits for tiny ξ
    double total = remainder(i, z, end <= segs_[i].end ? xi : segs_[i].end - z);
    while (end > segs_[i].end && i + 1 < segs_.size()) {
        ++i;
        const double a = segs_[i].start;
        const double b = std::min(end, segs_[i].end);
        const double dl = piece_log_abs_d1(i, a) - log_d1z;
        total += std::exp(dl) * remainder(i, a, b - a) + std::expm1(dl) * (b - a);
    }
    return sign_ * total;
}

namespace {

PiecewiseLyapunov three_piece(LyapunovKind kind, const NoiseFloor& nf, double b, double alpha, double K, double M) {
    LyapunovParams pr;
    pr.beta = nf.beta;
    pr.kappa0 = nf.kappa0;
    pr.b = b;
    pr.alpha = alpha;
    pr.K = K;
    pr.M = M;
    const double beta = nf.beta;
    const double kap = nf.kappa0;
    const double t1 = 1.0 - beta;
    const double t2 = K > 0.0 ? std::pow(kap * (1.0 - beta) * std::pow(2.0, beta - 3.0) * std::exp(beta - 1.0) / K,
                                         1.0 / (2.0 * beta))
                              : kInf;
    const double t3 = (1.0 - beta) * std::pow(kap / (K + 1.0), 1.0 / (2.0 * beta));
    pr.l0 = 0.9 * std::min({t1, t2, t3});
    pr.l1 = std::max(2.0, 2.0 * std::pow(2.0 * K / b, 1.0 / (alpha - 1.0)));
    pr.lambda = (1.0 - beta) / pr.l0;
    pr.log_c0 = std::log(b * beta / 2.0) + (beta - 1.0) * std::log(pr.l0) + alpha * std::log(pr.l1) -
                pr.lambda * (pr.l1 - pr.l0);
    pr.c0 = std::exp(pr.log_c0);
    pr.c1 = (1.0 - beta) * pr.l1 / (alpha * pr.l0);
    pr.n0 = static_cast<int>(std::ceil(2.0 / pr.l0));

    std::vector<Segment> segs(3);
    segs[0].shape = Segment::Shape::Power;
    segs[0].start = 0.0;
    segs[0].end = pr.l0;
    segs[0].log_k = std::log(beta);
    segs[0].q0 = 0.0;
    segs[0].c = 1.0;
    segs[0].e = 1.0 - beta;
    segs[0].value_start = 1.0;

    segs[1].shape = Segment::Shape::Exp;
    segs[1].start = pr.l0;
    segs[1].end = pr.l1;
    segs[1].log_k = std::log(beta) + (beta - 1.0) * std::log(pr.l0);
    segs[1].rate = pr.lambda;
    segs[1].value_start = 1.0 + std::pow(pr.l0, beta);

    segs[2].shape = Segment::Shape::Power;
    segs[2].start = pr.l1;
    segs[2].log_k = std::log(2.0 / b) + pr.log_c0;
    segs[2].q0 = pr.l1;
    segs[2].c = pr.c1;
    segs[2].e = alpha;
    const double amp = beta * std::pow(pr.l0, beta) / (1.0 - beta);
    segs[2].value_start = segs[1].value_start + amp * (-std::expm1(-pr.lambda * (pr.l1 - pr.l0)));
    return PiecewiseLyapunov(kind, pr, +1, std::move(segs));
}

}  // namespace

PiecewiseLyapunov make_f(const ModelParams& p, double M) {
    if (!(M > 0.0)) throw Error(ErrorCode::InvalidParams, "make_f needs M > 0", "lyapunov.M");
    if (!(p.c2.alpha > 1.0)) throw Error(ErrorCode::NotApplicable, "make_f needs alpha2 > 1", "model.alpha2");
    const NoiseFloor nf = noise_floor(p, 2);
    const double K = std::max(0.0, 2.0 * p.k * M) + std::max(0.0, p.c2.a);
    return three_piece(LyapunovKind::F, nf, p.c2.b, p.c2.alpha, K, M);
}

PiecewiseLyapunov make_h(const ModelParams& p) {
    if (!(p.c1.alpha > 1.0)) throw Error(ErrorCode::NotApplicable, "make_h needs alpha1 > 1", "model.alpha1");
    const NoiseFloor nf = noise_floor(p, 1);
    return three_piece(LyapunovKind::H, nf, p.c1.b, p.c1.alpha, std::max(0.0, p.c1.a), 0.0);
}

PiecewiseLyapunov make_g(const ModelParams& p) {
    if (!(p.c1.alpha > 1.0)) throw Error(ErrorCode::NotApplicable, "make_g needs alpha1 > 1", "model.alpha1");
    LyapunovParams pr;
    pr.alpha = p.c1.alpha;
    pr.b = p.c1.b;
    pr.p = (p.c1.alpha - 1.0) / 2.0;
    Segment s;
    s.log_k = std::log(pr.p);
    s.q0 = 1.0;
    s.e = pr.p + 1.0;
    s.value_start = 1.0;
    return PiecewiseLyapunov(LyapunovKind::G, pr, +1, {s});
}

PiecewiseLyapunov make_w(double M) {
    if (!(M > 0.0)) throw Error(ErrorCode::InvalidParams, "make_w needs M > 0", "lyapunov.M");
    LyapunovParams pr;
    pr.M = M;
    Segment s;
    s.log_k = std::log(M);
    s.q0 = M;
    s.e = 2.0;
    s.value_start = 1.0;
    return PiecewiseLyapunov(LyapunovKind::W, pr, -1, {s});
}

PiecewiseLyapunov make_identity() {
    Segment s;
    s.q0 = 1.0;
    s.e = 0.0;
    return PiecewiseLyapunov(LyapunovKind::Identity, {}, +1, {s});
}

PiecewiseLyapunov make_square() {
    Segment s;
    s.log_k = std::log(2.0);
    s.q0 = 0.0;
    s.e = -1.0;
    return PiecewiseLyapunov(LyapunovKind::Square, {}, +1, {s});
}

QuadResult jump_integral(const PiecewiseLyapunov& V, const LevyMeasure& n, double z, double abs_tol, double rel_tol) {
    QuadResult total;
    total.converged = true;
    switch (n.family()) {
        case LevyFamily::Zero:
            return total;
        case LevyFamily::CompoundPoisson:
            total.value = n.lambda() * V.jump_ratio(z, n.size());
            return total;
        case LevyFamily::StableLike:
            break;
    }
    const double u = n.truncation();
    const double theta = n.theta();
    const double cc = n.c();
    if (!n.truncated() && V.kind() == LyapunovKind::Square)
        throw Error(ErrorCode::QuadratureFail, "jump integral of z^2 diverges against an untruncated stable measure");

    std::vector<double> splits{1.0};
    for (const auto& s : V.segments())
        if (s.end - z > 0.0 && std::isfinite(s.end)) splits.push_back(s.end - z);
    const double sc = V.curvature_scale(z);
    if (std::isfinite(sc))
        for (double f : {0.1, 1.0, 10.0, 100.0}) splits.push_back(f * sc);
    std::vector<double> pts;
    for (double s : splits)
        if (s > 0.0 && s < u) pts.push_back(s);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](double a, double b) { return b <= a * (1.0 + 1e-12); }),
              pts.end());
    if (pts.empty()) pts.push_back(std::min(1.0, 0.5 * u));

    const std::size_t panels = pts.size() + 1;
    const double tol = abs_tol / static_cast<double>(panels);

    // [0, p₁]: ξ = t^m with m = 1/(2-θ) removes the ξ^{1-θ} singularity
    {
        const double m = 1.0 / (2.0 - theta);
        const double T = std::pow(pts.front(), 2.0 - theta);
        auto f = [&](double t) {
            const double xi = std::pow(t, m);
            if (!(xi > 0.0)) return 0.0;
            return cc * m * V.jump_ratio(z, xi) / (xi * xi);
        };
        accumulate(total, integrate_adaptive(f, 0.0, T, tol, rel_tol));
    }
    auto plain = [&](double xi) { return cc * V.jump_ratio(z, xi) * std::pow(xi, -1.0 - theta); };
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) accumulate(total, integrate_adaptive(plain, pts[j], pts[j + 1], tol, rel_tol));
    const double last = pts.back();
    if (n.truncated()) {
        accumulate(total, integrate_adaptive(plain, last, u, tol, rel_tol));
    } else {
        // [p, ∞): ξ = p·s^{-m'} with m' = 1/(θ-1)
        const double mp = 1.0 / (theta - 1.0);
        const double pre = cc * std::pow(last, 1.0 - theta) * mp;
        auto f = [&](double s) {
            const double xi = last * std::pow(s, -mp);
            // far tail: V' has decayed, so the ratio tends to -sign(V')·ξ
            if (!std::isfinite(xi)) return V.kind() == LyapunovKind::Identity ? 0.0 : -V.sign() * pre;
            return pre * V.jump_ratio(z, xi) / xi;
        };
        accumulate(total, integrate_adaptive(f, 0.0, 1.0, tol, rel_tol));
    }
    return total;
}

namespace {

struct TargetCoefficients {
    double sigma;
    const LevyMeasure* n;
    double b;
    double alpha;
};

TargetCoefficients target_coefficients(const ModelParams& p, GeneratorTarget target) {
    if (target == GeneratorTarget::Zbar) return {p.c2.sigma, &p.c2.n, p.c2.b, p.c2.alpha};
    return {p.c1.sigma, &p.c1.n, p.c1.b, p.c1.alpha};
}

double target_drift(const ModelParams& p, double M, double z, GeneratorTarget target) {
    switch (target) {
        case GeneratorTarget::Zbar:
            return (2.0 * p.k * M + p.c2.a) * z - p.c2.b * std::pow(z, p.c2.alpha);
        case GeneratorTarget::Xdiff:
            return -p.c1.b * std::pow(z, p.c1.alpha) + p.c1.a * z;
        case GeneratorTarget::X:
            return phi(p, z);
    }
    return 0.0;
}

}  // namespace

GeneratorValue eval_generator(const ModelParams& p, double M, const PiecewiseLyapunov& V, double z,
                              GeneratorTarget target) {
    if (!(z > 0.0)) throw Error(ErrorCode::InvalidRegion, "generator evaluated at z <= 0");
    const TargetCoefficients tc = target_coefficients(p, target);
    const double drift = target_drift(p, M, z, target);
    const double base = V.sign() * drift + tc.sigma * z * V.sign() * V.d2_over_d1(z);
    constexpr double kTol = 1e-9;
    double abs_tol = 0.25 * kTol * (1.0 + std::abs(base)) / z;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const QuadResult q = jump_integral(V, *tc.n, z, abs_tol, 0.25 * kTol);
        GeneratorValue g;
        g.scaled = base + z * q.value;
        g.log_scale = V.log_abs_d1(z);
        g.value = g.scaled * std::exp(g.log_scale);
        g.quad_error = z * q.error;
        if (q.converged && g.quad_error <= kTol * (1.0 + std::abs(g.scaled))) return g;
        abs_tol = 0.1 * kTol * (1.0 + std::abs(g.scaled)) / z;
    }
    throw Error(ErrorCode::QuadratureFail,
                "jump integral did not reach tolerance at z=" + std::to_string(z) + " for " + to_string(V.kind()));
}

std::pair<double, double> default_region(const PiecewiseLyapunov& V) {
    const auto& pr = V.params();
    if (V.kind() == LyapunovKind::F || V.kind() == LyapunovKind::H)
        return {1.0 / pr.n0, std::max(1e3, 4.0 * pr.l1)};
    return {1e-3, 1e3};
}

DriftCertificate certify_drift(const ModelParams& p, double M, const PiecewiseLyapunov& V, GeneratorTarget target,
                               double z_lo, double z_hi, int n_grid, unsigned workers) {
    if (!(z_lo > 0.0) || !(z_hi > z_lo) || !std::isfinite(z_hi))
        throw Error(ErrorCode::InvalidRegion, "certification region must satisfy 0 < z_lo < z_hi < inf",
                    "lyapunov.region");
    if (n_grid < 2) throw Error(ErrorCode::InvalidRegion, "certification grid needs at least 2 points", "lyapunov.n_grid");
    if (V.kind() == LyapunovKind::Identity || V.kind() == LyapunovKind::Square)
        throw Error(ErrorCode::NotApplicable, "test hooks carry no drift certificate");

    DriftCertificate cert;
    cert.func = V.kind();
    cert.target = target;
    cert.sense = V.kind() == LyapunovKind::W ? DriftSense::Positive : DriftSense::Negative;
    cert.params = V.params();
    cert.M = M;
    cert.z_lo = z_lo;
    cert.z_hi = z_hi;
    cert.grid.resize(static_cast<std::size_t>(n_grid));
    const double llo = std::log(z_lo), lhi = std::log(z_hi);
    for (int i = 0; i < n_grid; ++i) cert.grid[i] = std::exp(llo + (lhi - llo) * i / (n_grid - 1));
    cert.grid.front() = z_lo;
    cert.grid.back() = z_hi;
    cert.values.resize(cert.grid.size());
    parallel_for(cert.grid.size(), workers, [&](std::size_t i) { cert.values[i] = eval_generator(p, M, V, cert.grid[i], target); });

    const double s = cert.sense == DriftSense::Negative ? -1.0 : 1.0;
    double min_w = kInf, log_c = kInf, max_err = 0.0;
    for (const auto& g : cert.values) {
        const double w = s * g.scaled;
        min_w = std::min(min_w, w);
        if (w > 0.0) log_c = std::min(log_c, std::log(w) + g.log_scale);
        max_err = std::max(max_err, g.quad_error);
    }
    cert.min_scaled = min_w;
    cert.max_quad_error = max_err;
    if (min_w > 0.0) {
        cert.log_certified_C = log_c;
        cert.certified_C = std::exp(log_c);
    } else {
        cert.log_certified_C = -kInf;
        cert.certified_C = 0.0;
    }

    if (cert.sense == DriftSense::Positive) {
        // bounded region, no tail to control
        cert.margin_at_infinity = kInf;
        cert.log_margin_at_infinity = kInf;
    } else {
        // LV/|V'| ~ -b z^α on the last power segment, |V'| ~ k (c z)^{-e}
        const Segment& last = V.segments().back();
        const TargetCoefficients tc = target_coefficients(p, target);
        if (last.shape == Segment::Shape::Power && std::abs(tc.alpha - last.e) <= 1e-12 * tc.alpha) {
            cert.log_margin_at_infinity = std::log(tc.b) + last.log_k - last.e * std::log(last.c);
        } else if (last.shape == Segment::Shape::Power && tc.alpha > last.e) {
            cert.log_margin_at_infinity = kInf;
        } else {
            cert.log_margin_at_infinity = -kInf;
        }
        cert.margin_at_infinity = std::exp(cert.log_margin_at_infinity);
    }
    cert.sup_V = V.sup();
    cert.valid = min_w > 0.0 && cert.log_margin_at_infinity > -kInf;
    return cert;
}

MeetingBudget meeting_time_budget(double sup_V, double certified_C, double slack) {
    if (!(certified_C > 0.0) || !(sup_V > 0.0) || !std::isfinite(sup_V))
        throw Error(ErrorCode::InvalidCertificate, "meeting time budget needs sup V finite and C > 0");
    MeetingBudget b;
    b.sup_V = sup_V;
    b.certified_C = certified_C;
    b.log10_C = std::log10(certified_C);
    b.t0 = 2.0 * sup_V / certified_C * (1.0 + slack);
    b.log10_t0 = std::log10(2.0 * sup_V * (1.0 + slack)) - b.log10_C;
    return b;
}

MeetingBudget meeting_time_budget(const DriftCertificate& cert, double slack) {
    if (!cert.valid || cert.sense != DriftSense::Negative)
        throw Error(ErrorCode::InvalidCertificate, "certificate is not valid");
    if (!std::isfinite(cert.sup_V))
        throw Error(ErrorCode::InvalidCertificate, "certified function is unbounded");
    MeetingBudget b;
    b.sup_V = cert.sup_V;
    b.certified_C = cert.certified_C;
    b.log10_C = cert.log_certified_C / std::log(10.0);
    b.log10_t0 = std::log10(2.0 * cert.sup_V * (1.0 + slack)) - b.log10_C;
    b.t0 = b.log10_t0 < 300.0 ? std::pow(10.0, b.log10_t0) : kInf;
    return b;
}

MeetingBudget meeting_time_budget(const ModelParams& p, double M, double slack) {
    const PiecewiseLyapunov f = make_f(p, M);
    const auto [lo, hi] = default_region(f);
    return meeting_time_budget(certify_drift(p, M, f, GeneratorTarget::Zbar, lo, hi, 400), slack);
}

SmoothingFamily::SmoothingFamily(int n) : n_(n) {
    if (n < 1) throw Error(ErrorCode::InvalidParams, "smoothing index n must be >= 1", "lyapunov.n");
}

double SmoothingFamily::a_n() const { return std::exp(log_a(n_)); }
double SmoothingFamily::a_prev() const { return std::exp(log_a(n_ - 1)); }

double SmoothingFamily::psi(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double lx = std::log(x);
    if (lx <= log_a(n_) || lx >= log_a(n_ - 1)) return 0.0;
    return 1.0 / (n_ * x);
}

double SmoothingFamily::dphi(double z) const {
    if (!(z > 0.0)) return 0.0;
    const double lz = std::log(z);
    if (lz <= log_a(n_)) return 0.0;
    if (lz >= log_a(n_ - 1)) return 1.0;
    return (lz - log_a(n_)) / n_;
}

double SmoothingFamily::d2phi(double z) const { return psi(z); }

double SmoothingFamily::phi(double z) const {
    if (!(z > 0.0)) return 0.0;
    const double lz = std::log(z);
    if (lz <= log_a(n_)) return 0.0;
    if (lz >= log_a(n_ - 1)) return z - (a_prev() - a_n()) / n_;
    return (z * (lz - log_a(n_)) - z + a_n()) / n_;
}

}  // namespace cbipc
