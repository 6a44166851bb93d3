#include "cbipc/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbipc/error.hpp"
#include "cbipc/parallel.hpp"

namespace cbipc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string describe(const CoupledInit& c) {
    return "(" + fmt(c.x) + "," + fmt(c.xt) + "," + fmt(c.y) + "," + fmt(c.yt) + ")";
}

// Infimum over inits of a success frequency; success(i, j) simulates path j from init i.
template <class Init, class Success>
ProbabilityEstimate inf_probability(const std::string& label, const std::vector<Init>& inits, std::size_t n_paths,
                                    unsigned workers, Success&& success, std::string (*name)(const Init&)) {
    if (inits.empty()) throw Error(ErrorCode::ConfigError, label + ": no initial points", "localize");
    std::vector<unsigned char> hit(inits.size() * n_paths, 0);
    parallel_for(hit.size(), workers, [&](std::size_t k) { hit[k] = success(k / n_paths, k % n_paths) ? 1 : 0; });
    ProbabilityEstimate best;
    best.label = label;
    best.p_hat = kInf;
    for (std::size_t i = 0; i < inits.size(); ++i) {
        std::size_t s = 0;
        for (std::size_t j = 0; j < n_paths; ++j) s += hit[i * n_paths + j];
        const double p = static_cast<double>(s) / static_cast<double>(n_paths);
        if (p < best.p_hat) {
            best.p_hat = p;
            best.ci = wilson(s, n_paths);
            best.n = n_paths;
            best.argmin = name(inits[i]);
        }
    }
    return best;
}

std::string name_x(const double& x) { return fmt(x); }
std::string name_c(const CoupledInit& c) { return describe(c); }

double se_of(const ProbabilityEstimate& e) {
    return e.n ? std::sqrt(std::max(e.p_hat * (1.0 - e.p_hat), 0.25 / e.n) / e.n) : 0.0;
}

}  // namespace

Interval wilson(std::size_t k, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

TailEstimate tail_from_times(const std::string& label, const std::vector<StopTime>& times,
                             const std::vector<double>& t_grid, double horizon, bool inclusive) {
    TailEstimate est;
    est.label = label;
    est.n_paths = times.size();
    est.horizon = horizon;
    for (const auto& s : times) est.censored += s.censored ? 1 : 0;
    est.points.reserve(t_grid.size());
    for (double t : t_grid) {
        TailPoint pt;
        pt.t = t;
        for (const auto& s : times) {
            if (s.censored) {
                ++pt.alive;
                ++pt.censored;
            } else if (inclusive ? s.t >= t : s.t > t) {
                ++pt.alive;
            }
        }
        pt.p_hat = times.empty() ? 0.0 : static_cast<double>(pt.alive) / static_cast<double>(times.size());
        const Interval ci = wilson(pt.alive, times.size());
        pt.ci_lo = ci.lo;
        pt.ci_hi = ci.hi;
        est.points.push_back(pt);
    }
    return est;
}

TailEstimate max_tail(const std::string& label, const std::vector<TailEstimate>& tails) {
    if (tails.empty()) throw Error(ErrorCode::InsufficientPaths, "no tail estimates to combine");
    TailEstimate out = tails.front();
    out.label = label;
    for (std::size_t j = 1; j < tails.size(); ++j) {
        const auto& t = tails[j];
        if (t.points.size() != out.points.size()) throw Error(ErrorCode::InvalidParams, "tail grids differ");
        out.censored = std::max(out.censored, t.censored);
        for (std::size_t i = 0; i < t.points.size(); ++i)
            if (t.points[i].p_hat > out.points[i].p_hat) out.points[i] = t.points[i];
    }
    return out;
}

MeanEstimate mean_of(const std::vector<StopTime>& times, double horizon) {
    MeanEstimate m;
    m.n = times.size();
    if (times.empty()) return m;
    double s = 0.0, s2 = 0.0;
    for (const auto& st : times) {
        const double v = st.censored ? horizon : st.t;
        m.censored += st.censored ? 1 : 0;
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(times.size());
    m.mean = s / n;
    m.se = times.size() > 1 ? std::sqrt(std::max(0.0, (s2 - n * m.mean * m.mean) / (n - 1.0)) / n) : 0.0;
    return m;
}

const char* to_string(HittingKind::Type t) {
    switch (t) {
        case HittingKind::Type::TauMinus: return "tau_minus";
        case HittingKind::Type::TauPlus: return "tau_plus";
        case HittingKind::Type::ZetaBar0: return "zeta_bar_0";
    }
    return "?";
}

HittingResult hitting_tail(const ModelParams& p, const SimScheme& s, HittingKind kind, const std::vector<double>& inits,
                           std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                           unsigned workers) {
    validate(p);
    check_scheme(s);
    if (n_paths == 0) throw Error(ErrorCode::InsufficientPaths, "n_paths must be positive", "n_paths");
    if (inits.empty()) throw Error(ErrorCode::ConfigError, "no initial points", "inits");
    if (kind.type == HittingKind::Type::ZetaBar0 && !(p.c2.alpha > 1.0))
        throw Error(ErrorCode::NotApplicable, "the comparison process needs alpha2 > 1", "model.alpha2");
    if (kind.type == HittingKind::Type::TauMinus && p.c1.alpha > 1.0 && kind.level < m0_heuristic(p) * (1.0 - 1e-12))
        throw Error(ErrorCode::InvalidParams, "tau_minus level must be at least the M0 heuristic", "hitting.level");

    std::vector<StopTime> times(inits.size() * n_paths);
    parallel_for(times.size(), workers, [&](std::size_t k) {
        const std::size_t i = k / n_paths;
        const StreamKey key{seed, path_id(i, k % n_paths)};
        StopTime& st = times[k];
        const double L = kind.level;
        if (kind.type == HittingKind::Type::ZetaBar0) {
            ZbarEngine e(p, s, key, L, inits[i]);
            while (!e.zeta.hit() && !e.done()) e.step();
            st = e.zeta;
            return;
        }
        CbipcEngine e(p, s, key, inits[i], 0.0, kInf, false);
        auto check = [&] {
            if (kind.type == HittingKind::Type::TauMinus ? e.x <= L : e.x >= L) st.set(e.t);
        };
        check();
        while (!st.hit() && !e.done()) {
            e.step();
            check();
        }
    });

    HittingResult r;
    r.inits = inits;
    std::size_t censored = 0;
    for (const auto& st : times) censored += st.censored ? 1 : 0;
    if (censored == times.size())
        throw Error(ErrorCode::InsufficientPaths, "every path was censored at the horizon", "scheme.horizon");
    for (std::size_t i = 0; i < inits.size(); ++i) {
        const std::vector<StopTime> slice(times.begin() + i * n_paths, times.begin() + (i + 1) * n_paths);
        r.tails.push_back(tail_from_times(std::string(to_string(kind.type)) + " x0=" + fmt(inits[i]), slice, t_grid,
                                          s.horizon, true));
        r.means.push_back(mean_of(slice, s.horizon));
    }
    return r;
}

CouplingResult coupling_tail(const ModelParams& p, const SimScheme& s, const std::vector<CoupledInit>& inits,
                             std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                             unsigned workers) {
    const ConditionReport cond = validate(p);
    check_scheme(s);
    if (n_paths == 0) throw Error(ErrorCode::InsufficientPaths, "n_paths must be positive", "n_paths");
    if (inits.empty()) throw Error(ErrorCode::ConfigError, "no initial points", "inits");

    std::vector<StopTime> tx(inits.size() * n_paths), tf(inits.size() * n_paths);
    parallel_for(tx.size(), workers, [&](std::size_t k) {
        const std::size_t i = k / n_paths;
        CoupledEngine e(p, s, StreamKey{seed, path_id(i, k % n_paths)}, inits[i]);
        while (!e.glued_full && !e.done()) e.step();
        tx[k] = e.T_X;
        tf[k] = e.T_full;
    });

    CouplingResult r;
    r.inits = inits;
    for (std::size_t i = 0; i < inits.size(); ++i) {
        const auto a = tx.begin() + i * n_paths, b = a + n_paths;
        const auto c = tf.begin() + i * n_paths, d = c + n_paths;
        const std::string tag = describe(inits[i]);
        r.tails_X.push_back(tail_from_times("T_X " + tag, {a, b}, t_grid, s.horizon));
        r.tails_full.push_back(tail_from_times("T " + tag, {c, d}, t_grid, s.horizon));
        const auto& in = inits[i];
        r.meet_tols.push_back(resolve_meet_tol(s, std::max({in.x, in.xt, in.y, in.yt})));
    }
    r.max_X = max_tail("max T_X", r.tails_X);
    r.max_full = max_tail("max T", r.tails_full);
    if (!cond.uniform_ergodicity_expected)
        r.warning = "conditions for uniform ergodicity do not hold; the tails need not decay uniformly";
    return r;
}

TvBound tv_upper_bound(const TailEstimate& tail, double t) {
    if (tail.points.empty() || t < tail.points.front().t || t > tail.points.back().t)
        throw Error(ErrorCode::OutOfGrid, "t=" + fmt(t) + " lies outside the estimated time grid", "t_grid");
    const TailPoint* use = &tail.points.front();
    for (const auto& pt : tail.points)
        if (pt.t <= t) use = &pt;
    return {2.0 * use->p_hat, 2.0 * use->ci_lo, std::min(2.0, 2.0 * use->ci_hi), use->t};
}

RateFit rate_fit(const TailEstimate& tail) {
    std::vector<double> ts, ys, vs;
    const double n = static_cast<double>(tail.n_paths);
    for (const auto& pt : tail.points) {
        if (!(pt.p_hat > 0.01 && pt.p_hat < 0.9)) continue;
        if (2 * pt.censored > pt.alive) continue;  // censored paths dominate the estimate
        ts.push_back(pt.t);
        ys.push_back(std::log(pt.p_hat));
        vs.push_back((1.0 - pt.p_hat) / (n * pt.p_hat));
    }
    const std::size_t m = ts.size();
    if (m < 4) throw Error(ErrorCode::DegenerateFit, "fewer than 4 usable tail points for the rate fit");
    double tb = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        tb += ts[i];
        yb += ys[i];
    }
    tb /= m;
    yb /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (ts[i] - tb) * (ts[i] - tb);
        sxy += (ts[i] - tb) * (ys[i] - yb);
        syy += (ys[i] - yb) * (ys[i] - yb);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateFit, "tail points share one time");
    RateFit f;
    const double slope = sxy / sxx;
    f.lambda_hat = -slope;
    f.intercept = yb - slope * tb;
    const double ssr = std::max(0.0, syy - slope * sxy);
    f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    f.t_lo = ts.front();
    f.t_hi = ts.back();
    f.n_points = m;
    f.se_ols = std::sqrt(ssr / (m - 2.0) / sxx);
    // points treated as independent; the survival curve is positively correlated in t
    double vb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = (ts[i] - tb) / sxx;
        vb += w * w * vs[i];
    }
    f.se_binomial = std::sqrt(vb);
    f.se = std::hypot(f.se_ols, f.se_binomial);
    return f;
}

double cir_mean_hitting_time(double b, double gamma, double sigma, double z1) {
    if (!(b > 0.0) || !(gamma > 0.0) || !(sigma > 0.0))
        throw Error(ErrorCode::InvalidParams, "square-root diffusion needs b, gamma, sigma > 0", "cir");
    if (!(z1 > 1.0) || !std::isfinite(z1)) throw Error(ErrorCode::InvalidParams, "z1 must exceed 1", "cir.z1");
    const double r = gamma / sigma;
    auto integrand = [=](double xi) {
        if (xi <= 0.0) return (z1 - 1.0) / b;
        const double lead = -std::exp(-xi) * std::expm1(-(z1 - 1.0) * xi) / (xi * (b + sigma * xi));
        return lead * std::exp(r * std::log1p(sigma * xi / b));
    };
    // log of a bound on the integrand beyond U
    auto log_tail = [=](double U) { return -U + r * std::log1p(sigma * U / b) - std::log(sigma * U * U); };
    double U = 50.0;
    while (log_tail(U) > std::log(1e-18) && U < 1e7) U *= 2.0;

    std::vector<double> br = {0.0, 1.0 / z1, 10.0 / z1, 1.0, U};
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    QuadResult total;
    total.converged = true;
    for (std::size_t i = 0; i + 1 < br.size(); ++i)
        accumulate(total, integrate_adaptive(integrand, br[i], br[i + 1], 1e-14, 1e-12));
    if (!total.converged)
        throw Error(ErrorCode::QuadratureFail, "mean hitting time integral did not converge at z1=" + fmt(z1));
    return total.value;
}

CirMcResult cir_mc_mean(double b, double gamma, double sigma, const SimScheme& s, double z1, std::size_t n_paths,
                        std::uint64_t seed, unsigned workers) {
    check_scheme(s);
    std::vector<StopTime> times(n_paths);
    parallel_for(n_paths, workers, [&](std::size_t j) {
        CirEngine e(b, gamma, sigma, s, StreamKey{seed, path_id(0, j)}, z1);
        while (!e.done()) e.step();
        times[j] = e.hit;
    });
    const MeanEstimate m = mean_of(times, s.horizon);
    return {m.mean, m.se, m.n, m.censored};
}

AuditReport comparison_audit(const ModelParams& p, const SimScheme& s, const std::vector<AuditInit>& inits,
                             std::size_t n_paths, double M, std::uint64_t seed, unsigned workers, bool localized) {
    validate(p);
    check_scheme(s);
    if (!(M > 0.0)) throw Error(ErrorCode::InvalidParams, "audit level M must be positive", "audit.M");
    if (n_paths == 0) throw Error(ErrorCode::InsufficientPaths, "n_paths must be positive", "n_paths");
    for (const auto& in : inits)
        if (!(in.y >= in.yt)) throw Error(ErrorCode::InvalidParams, "audit needs y >= yt", "inits");
    const double var = 2.0 * p.c2.sigma + make_channel(p.c2, s).m2_eps;

    struct PathStats {
        bool exited = false;
        double worst[3] = {0, 0, 0};
        bool violated[3] = {false, false, false};
    };
    std::vector<PathStats> stats(inits.size() * n_paths);
    parallel_for(stats.size(), workers, [&](std::size_t k) {
        const AuditInit& in = inits[k / n_paths];
        AuxSpec aux{true, M, in.y - in.yt, in.y - in.yt};
        CoupledEngine e(p, s, StreamKey{seed, path_id(k / n_paths, k % n_paths)}, {in.x, in.x, in.y, in.yt}, aux);
        PathStats& ps = stats[k];
        while (!e.done()) {
            e.step();
            if (localized && e.x > 2.0 * M) {
                ps.exited = true;
                break;
            }
            const double v[3] = {e.yt - e.y, (e.y - e.yt) - e.z, e.z - e.zb};
            const double scale = std::max({e.y, e.yt, e.z, e.zb});
            const double tol = 3.0 * std::sqrt(var * s.dt * std::max(1.0, scale));
            for (int j = 0; j < 3; ++j) {
                ps.worst[j] = std::max(ps.worst[j], v[j]);
                if (v[j] > tol) ps.violated[j] = true;
            }
            if (e.glued_full && e.z == 0.0) break;
        }
    });

    AuditReport r;
    r.inits = inits;
    r.M = M;
    r.n_paths = stats.size();
    const char* names[3] = {"Y >= Yt", "Y - Yt <= Z", "Z <= Zbar"};
    for (int j = 0; j < 3; ++j) {
        LemmaAudit& la = r.lemma[j];
        la.name = names[j];
        double sum = 0.0;
        for (const auto& ps : stats) {
            la.violating_paths += ps.violated[j] ? 1 : 0;
            la.max_violation = std::max(la.max_violation, ps.worst[j]);
            sum += ps.worst[j];
        }
        la.fraction = static_cast<double>(la.violating_paths) / static_cast<double>(stats.size());
        la.mean_max_violation = sum / static_cast<double>(stats.size());
    }
    for (const auto& ps : stats) r.reached_exit += ps.exited ? 1 : 0;
    return r;
}

LocalizeReport localize(const ModelParams& p, const SimScheme& s, const LocalizeConfig& cfg, std::uint64_t seed,
                        unsigned workers) {
    const ConditionReport cond = validate(p);
    check_scheme(s);
    if (cfg.n_paths == 0) throw Error(ErrorCode::InsufficientPaths, "n_paths must be positive", "localize.n_paths");
    LocalizeReport r;

    if (!cond.cond_i_1) {
        r.mode = "fallback";
        if (!(cfg.M > 0.0) || !(cfg.t0 > 0.0))
            throw Error(ErrorCode::ConfigError, "alpha1 <= 1: localize.M and localize.t0 must be given", "localize.M");
        r.M = cfg.M;
        r.t0 = cfg.t0;
        r.notes.push_back("alpha1 <= 1: no M0 heuristic, M and t0 taken from the config");
    } else if (p.k <= 0.0) {
        r.mode = "k<=0 two-stage";
        // with k <= 0 the predation term only helps: Zbar drifts with a2 alone (M = 0)
        const PiecewiseLyapunov f = make_f(p, 1.0), h = make_h(p);
        const auto [flo, fhi] = default_region(f);
        const auto [hlo, hhi] = default_region(h);
        const DriftCertificate c5 = certify_drift(p, 0.0, f, GeneratorTarget::Zbar, flo, fhi, 400, workers);
        const DriftCertificate c4 = certify_drift(p, 0.0, h, GeneratorTarget::Xdiff, hlo, hhi, 400, workers);
        if (!c5.valid || !c4.valid)
            throw Error(ErrorCode::InvalidCertificate, "drift certificate failed in the k <= 0 case", "localize");
        const double log_c = std::min(c5.log_certified_C, c4.log_certified_C);
        const double sup = std::max(c5.sup_V, c4.sup_V);
        r.log10_t0 = (std::log(2.0 * sup * 1.05) - log_c) / std::log(10.0);
        r.t0 = cfg.t0 > 0.0 ? cfg.t0 : std::pow(10.0, r.log10_t0);
        r.M = 0.0;
        r.notes.push_back("Markov bound per stage: sup P(coupling stage longer than t0) <= 1/2");
    } else {
        r.mode = "three-condition";
        r.M = cfg.M > 0.0 ? cfg.M : m0_heuristic(p);
        if (cfg.t0 > 0.0) {
            r.t0 = cfg.t0;
            r.log10_t0 = std::log10(cfg.t0);
        } else {
            const PiecewiseLyapunov f = make_f(p, r.M), h = make_h(p);
            const auto [flo, fhi] = default_region(f);
            const auto [hlo, hhi] = default_region(h);
            const MeetingBudget bf =
                meeting_time_budget(certify_drift(p, r.M, f, GeneratorTarget::Zbar, flo, fhi, 400, workers));
            const MeetingBudget bh =
                meeting_time_budget(certify_drift(p, r.M, h, GeneratorTarget::Xdiff, hlo, hhi, 400, workers));
            r.log10_t0 = std::max(bf.log10_t0, bh.log10_t0);
            r.t0 = std::max(bf.t0, bh.t0);
        }
    }
    if (r.log10_t0 == 0.0 && r.t0 > 0.0) r.log10_t0 = std::log10(r.t0);
    const double cap = cfg.t_cap > 0.0 ? cfg.t_cap : s.horizon / 3.0;
    r.t_used = std::min(r.t0, cap);
    r.capped = r.t_used < r.t0;
    if (r.capped)
        r.notes.push_back("t0 = 10^" + fmt(r.log10_t0) + " capped at " + fmt(r.t_used) +
                          "; the estimates are lower bounds for the probabilities at t0");

    const double M = r.M;
    const double Mi = M > 0.0 ? M : 1.0;  // scale for default grids
    std::vector<double> a_inits = cfg.a_inits;
    if (a_inits.empty()) a_inits = {2.0 * Mi, 10.0 * Mi, 100.0 * Mi};
    std::vector<CoupledInit> b_inits = cfg.b_inits;
    if (b_inits.empty())
        for (double x : {0.0, 0.5 * M, M})
            for (double y : {0.0, 1.0, Mi})
                for (double yt : {0.0, 1.0, Mi})
                    if (y != yt) b_inits.push_back({x, x, y, yt});
    std::vector<CoupledInit> c_inits = cfg.c_inits;
    if (c_inits.empty())
        for (double x : {0.0, Mi, 10.0 * Mi})
            for (double xt : {0.0, Mi, 10.0 * Mi})
                if (x < xt) c_inits.push_back({x, xt, 0.0, 0.0});

    const std::size_t n = cfg.n_paths;
    SimScheme s1 = s;
    s1.horizon = r.t_used;
    SimScheme s2 = s;
    s2.horizon = 2.0 * r.t_used;

    auto couple_full = [&](const SimScheme& sc, const std::vector<CoupledInit>& in, std::uint64_t salt, bool exit_2M) {
        return [&, salt, exit_2M, sc_ptr = &sc, in_ptr = &in](std::size_t i, std::size_t j) {
            CoupledEngine e(p, *sc_ptr, StreamKey{seed ^ salt, path_id(i, j)}, (*in_ptr)[i]);
            while (!e.glued_full && !e.done()) {
                e.step();
                if (exit_2M && e.x > 2.0 * M) return false;
            }
            return e.glued_full;
        };
    };

    if (r.mode == "k<=0 two-stage") {
        r.cond_a = {"(a) not used", 1.0, {1.0, 1.0}, n, ""};
        r.cond_c = inf_probability<CoupledInit>(
            "P(T_X < t)", c_inits, n, workers,
            [&](std::size_t i, std::size_t j) {
                CoupledEngine e(p, s1, StreamKey{seed ^ 0xc, path_id(i, j)}, c_inits[i]);
                while (!e.glued_x && !e.done()) e.step();
                return e.glued_x;
            },
            name_c);
        r.cond_b = inf_probability<CoupledInit>("P(T < t) from x = xt", b_inits, n, workers,
                                                couple_full(s1, b_inits, 0xb, false), name_c);
        std::vector<CoupledInit> d_inits = c_inits;
        for (auto& c : d_inits) {
            c.y = 0.0;
            c.yt = Mi;
        }
        r.direct_2t = inf_probability<CoupledInit>("P(T < 2t)", d_inits, n, workers,
                                                   couple_full(s2, d_inits, 0xd, false), name_c);
        r.assembled = r.cond_c.p_hat * r.cond_b.p_hat;
        const double prod_se = std::hypot(r.cond_b.p_hat * se_of(r.cond_c), r.cond_c.p_hat * se_of(r.cond_b));
        r.consistent = r.assembled <= r.direct_2t.p_hat + 3.0 * std::hypot(prod_se, se_of(r.direct_2t));
        return r;
    }

    r.cond_a = inf_probability<double>(
        "(a) P(tau_minus_M < t)", a_inits, n, workers,
        [&](std::size_t i, std::size_t j) {
            CbipcEngine e(p, s1, StreamKey{seed ^ 0xa, path_id(i, j)}, a_inits[i], 0.0, kInf, false);
            if (e.x <= M) return true;
            while (!e.done()) {
                e.step();
                if (e.x <= M) return true;
            }
            return false;
        },
        name_x);
    r.cond_b = inf_probability<CoupledInit>("(b) P(T < tau_plus_2M ^ t)", b_inits, n, workers,
                                            couple_full(s1, b_inits, 0xb, true), name_c);
    r.cond_c = inf_probability<CoupledInit>(
        "(c) P(T_X < t)", c_inits, n, workers,
        [&](std::size_t i, std::size_t j) {
            CoupledEngine e(p, s1, StreamKey{seed ^ 0xc, path_id(i, j)}, c_inits[i]);
            while (!e.glued_x && !e.done()) e.step();
            return e.glued_x;
        },
        name_c);

    // direct check of the two-stage bound from the (a) starting points
    std::vector<CoupledInit> d_inits;
    for (double x : a_inits)
        for (const auto& c : b_inits)
            if (c.x == b_inits.front().x) d_inits.push_back({x, x, c.y, c.yt});
    r.direct_2t = inf_probability<CoupledInit>("P(T < 2t) from x = xt", d_inits, n, workers,
                                               couple_full(s2, d_inits, 0xd, false), name_c);
    const double ab = r.cond_a.p_hat * r.cond_b.p_hat;
    const double prod_se = std::hypot(r.cond_b.p_hat * se_of(r.cond_a), r.cond_a.p_hat * se_of(r.cond_b));
    r.consistent = ab <= r.direct_2t.p_hat + 3.0 * std::hypot(prod_se, se_of(r.direct_2t));
    r.assembled = ab * r.cond_c.p_hat;

    if (r.mode == "fallback") {
        // growing init grid as a surrogate for the missing uniformity in x
        for (double f : {2.0, 4.0}) {
            std::vector<double> grown;
            for (double x : a_inits) grown.push_back(f * x);
            const ProbabilityEstimate g = inf_probability<double>(
                "(a) grown", grown, n, workers,
                [&](std::size_t i, std::size_t j) {
                    CbipcEngine e(p, s1, StreamKey{seed ^ 0xaa, path_id(i, j)}, grown[i], 0.0, kInf, false);
                    while (!e.done()) {
                        if (e.x <= M) return true;
                        e.step();
                    }
                    return e.x <= M;
                },
                name_x);
            r.notes.push_back("(a) with inits x" + fmt(f) + ": inf p = " + fmt(g.p_hat));
        }
    }
    return r;
}

}  // namespace cbipc
