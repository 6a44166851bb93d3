#include "cbipc/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cbipc/error.hpp"
#include "cbipc/lyapunov.hpp"
#include "cbipc/parallel.hpp"

namespace cbipc::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// JSON has no infinities; they are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> init_row(const ExperimentConfig& c, std::size_t i, std::size_t width, const char* shape) {
    const auto& r = c.inits[i];
    if (r.size() != width)
        throw Error(ErrorCode::ConfigError, "inits[" + std::to_string(i) + "] must be " + shape, "inits");
    return r;
}

std::vector<CoupledInit> coupled_inits(const ExperimentConfig& c) {
    std::vector<CoupledInit> out;
    for (std::size_t i = 0; i < c.inits.size(); ++i) {
        const auto r = init_row(c, i, 4, "[x, xt, y, yt]");
        out.push_back({r[0], r[1], r[2], r[3]});
    }
    return out;
}

double level_or_m0(const ModelParams& p, double level) {
    if (level > 0.0) return level;
    return p.c1.alpha > 1.0 ? m0_heuristic(p) : 1.0;
}

json tail_json(const TailEstimate& t) {
    json pts = json::array();
    for (const auto& pt : t.points)
        pts.push_back({{"t", pt.t}, {"p_hat", pt.p_hat}, {"ci_lo", pt.ci_lo}, {"ci_hi", pt.ci_hi}, {"censored", pt.censored}});
    return {{"event", t.label}, {"n_paths", t.n_paths}, {"censored", t.censored}, {"horizon", t.horizon}, {"estimates", pts}};
}

void tail_csv(std::ostringstream& os, const std::string& prefix, const TailEstimate& t) {
    for (const auto& pt : t.points)
        os << prefix << ',' << num(pt.t) << ',' << num(pt.p_hat) << ',' << num(pt.ci_lo) << ',' << num(pt.ci_hi) << '\n';
}

json rate_json(const TailEstimate& t) {
    try {
        const RateFit f = rate_fit(t);
        return {{"lambda_hat", f.lambda_hat}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
                {"t_lo", f.t_lo},             {"t_hi", f.t_hi},           {"n_points", f.n_points},
                {"se_ols", f.se_ols},         {"se_binomial", f.se_binomial}, {"se", f.se}};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateFit) throw;
        return {{"error", to_string(e.code())}, {"message", e.what()}};
    }
}

json prob_json(const ProbabilityEstimate& e) {
    return {{"label", e.label}, {"p_hat", e.p_hat}, {"ci_lo", e.ci.lo}, {"ci_hi", e.ci.hi}, {"n", e.n}, {"argmin", e.argmin}};
}

void prob_csv(std::ostringstream& os, const std::string& name, const ProbabilityEstimate& e) {
    os << name << ',' << num(e.p_hat) << ',' << num(e.ci.lo) << ',' << num(e.ci.hi) << ',' << e.n << ",\"" << e.argmin
       << "\"\n";
}

RunOutput run_simulate(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < c.inits.size(); ++i) rows.push_back(init_row(c, i, 2, "[x, y]"));
    std::vector<PathGrid> grids(rows.size() * c.n_paths);
    RecordOptions opt;
    opt.stride = c.simulate.record_stride;
    parallel_for(grids.size(), workers, [&](std::size_t k) {
        const auto& r = rows[k / c.n_paths];
        const StreamKey key{c.seed, path_id(k / c.n_paths, k % c.n_paths)};
        grids[k] = c.simulate.truncation > 0.0
                       ? simulate_truncated(c.model, c.scheme, c.simulate.truncation, r[0], r[1], key, opt)
                       : simulate_cbipc(c.model, c.scheme, r[0], r[1], key, opt);
    });
    std::ostringstream os;
    json per = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double sx = 0, sy = 0;
        std::size_t aborted = 0, jumps = 0;
        for (std::size_t j = 0; j < c.n_paths; ++j) {
            const PathGrid& g = grids[i * c.n_paths + j];
            const auto& X = g.column("X");
            const auto& Y = g.column("Y");
            sx += X.back();
            sy += Y.back();
            aborted += g.aborted ? 1 : 0;
            jumps += g.events.size();
            for (std::size_t s = 0; s < g.times.size(); ++s)
                os << i << ',' << j << ',' << num(g.times[s]) << ',' << num(X[s]) << ',' << num(Y[s]) << '\n';
        }
        const double n = static_cast<double>(c.n_paths);
        per.push_back({{"init", rows[i]}, {"mean_X_end", sx / n}, {"mean_Y_end", sy / n}, {"aborted", aborted},
                       {"large_jumps", jumps}});
    }
    out.summary["results"] = per;
    out.csv = os.str();
    return out;
}

RunOutput run_couple(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    const auto inits = coupled_inits(c);
    AuxSpec aux;
    if (c.simulate.aux) {
        aux.enabled = true;
        aux.M = level_or_m0(c.model, c.simulate.M);
    }
    std::vector<PathGrid> grids(inits.size() * c.n_paths);
    RecordOptions opt;
    opt.stride = c.simulate.record_stride;
    parallel_for(grids.size(), workers, [&](std::size_t k) {
        const CoupledInit& in = inits[k / c.n_paths];
        AuxSpec a = aux;
        a.z0 = a.zbar0 = std::max(0.0, in.y - in.yt);
        grids[k] = simulate_coupled(c.model, c.scheme, in, StreamKey{c.seed, path_id(k / c.n_paths, k % c.n_paths)}, opt, a);
    });
    std::ostringstream os;
    json per = json::array();
    for (std::size_t i = 0; i < inits.size(); ++i) {
        std::size_t gx = 0, gf = 0, aborted = 0;
        double sum_t = 0.0;
        for (std::size_t j = 0; j < c.n_paths; ++j) {
            const PathGrid& g = grids[i * c.n_paths + j];
            gx += g.stopping.T_X.hit() ? 1 : 0;
            if (g.stopping.T_full.hit()) {
                ++gf;
                sum_t += g.stopping.T_full.t;
            }
            aborted += g.aborted ? 1 : 0;
            const auto& X = g.column("X");
            const auto& Xt = g.column("Xt");
            const auto& Y = g.column("Y");
            const auto& Yt = g.column("Yt");
            for (std::size_t s = 0; s < g.times.size(); ++s) {
                os << i << ',' << j << ',' << num(g.times[s]) << ',' << num(X[s]) << ',' << num(Xt[s]) << ','
                   << num(Y[s]) << ',' << num(Yt[s]) << ',';
                if (aux.enabled) os << num(g.column("Z")[s]) << ',' << num(g.column("Zbar")[s]);
                else os << ',';
                os << '\n';
            }
        }
        const double n = static_cast<double>(c.n_paths);
        const auto& in = inits[i];
        per.push_back({{"init", {in.x, in.xt, in.y, in.yt}},
                       {"meet_tol", resolve_meet_tol(c.scheme, std::max({in.x, in.xt, in.y, in.yt}))},
                       {"fraction_glued_X", gx / n},
                       {"fraction_glued_full", gf / n},
                       {"mean_T_given_glued", gf ? json(sum_t / gf) : json(nullptr)},
                       {"aborted", aborted}});
    }
    out.summary["results"] = per;
    if (aux.enabled) out.summary["aux_M"] = aux.M;
    out.csv = os.str();
    return out;
}

RunOutput run_drift(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    const auto& p = c.model;
    const DriftSection& d = c.drift;
    validate(p);
    double M = d.M;
    std::string target = d.target;
    std::optional<PiecewiseLyapunov> V;
    if (d.function == "f") {
        if (M <= 0.0) M = level_or_m0(p, 0.0);
        V = make_f(p, M);
        if (target.empty()) target = "Zbar";
    } else if (d.function == "h") {
        V = make_h(p);
        if (target.empty()) target = "Xdiff";
    } else if (d.function == "g") {
        if (M <= 0.0) M = level_or_m0(p, 0.0);
        V = make_g(p);
        if (target.empty()) target = "X";
    } else if (d.function == "w") {
        if (M <= 0.0) M = level_or_m0(p, 0.0);
        V = make_w(M);
        if (target.empty()) target = "X";
    } else {
        throw Error(ErrorCode::ConfigError, "drift.function must be f, g, h or w", "drift.function");
    }
    GeneratorTarget tg;
    if (target == "Zbar") tg = GeneratorTarget::Zbar;
    else if (target == "Xdiff") tg = GeneratorTarget::Xdiff;
    else if (target == "X") tg = GeneratorTarget::X;
    else throw Error(ErrorCode::ConfigError, "drift.target must be Zbar, Xdiff or X", "drift.target");

    auto [lo, hi] = default_region(*V);
    if (d.function == "g") lo = M;
    if (d.function == "w") {
        lo = M;
        hi = 2.0 * M;
    }
    if (d.z_lo > 0.0) lo = d.z_lo;
    if (d.z_hi > 0.0) hi = d.z_hi;
    const DriftCertificate cert = certify_drift(p, M, *V, tg, lo, hi, d.n_grid, workers);
    const auto& pr = cert.params;
    json params = {{"beta", pr.beta}, {"kappa0", pr.kappa0}, {"l0", pr.l0},         {"l1", pr.l1},
                   {"c0", pr.c0},     {"log_c0", pr.log_c0}, {"c1", pr.c1},         {"alpha", pr.alpha},
                   {"K", pr.K},       {"M", pr.M},           {"n0", pr.n0}};
    out.summary["function"] = d.function;
    out.summary["target"] = target;
    out.summary["sense"] = cert.sense == DriftSense::Negative ? "LV <= -C" : "LV >= C";
    out.summary["M"] = M;
    out.summary["params"] = params;
    out.summary["region"] = {cert.z_lo, cert.z_hi};
    out.summary["n_grid"] = cert.grid.size();
    out.summary["certified_C"] = cert.certified_C;
    out.summary["log_certified_C"] = number_or_null(cert.log_certified_C);
    out.summary["tail_margin"] = number_or_null(cert.margin_at_infinity);
    out.summary["log_tail_margin"] = number_or_null(cert.log_margin_at_infinity);
    out.summary["max_quad_error"] = cert.max_quad_error;
    out.summary["sup_V"] = number_or_null(cert.sup_V);
    out.summary["valid"] = cert.valid;
    if (cert.valid && cert.sense == DriftSense::Negative && std::isfinite(cert.sup_V)) {
        const MeetingBudget b = meeting_time_budget(cert, d.slack);
        out.summary["t0"] = number_or_null(b.t0);
        out.summary["log10_t0"] = b.log10_t0;
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < cert.grid.size(); ++i) {
        const auto& g = cert.values[i];
        os << num(cert.grid[i]) << ',' << num(g.value) << ',' << num(g.scaled) << ',' << num(g.log_scale) << '\n';
    }
    out.csv = os.str();
    if (!cert.valid) out.exit_code = CertificateInvalid;
    return out;
}

RunOutput run_hitting(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    HittingKind kind;
    if (c.hitting.kind == "tau_minus") kind.type = HittingKind::Type::TauMinus;
    else if (c.hitting.kind == "tau_plus") kind.type = HittingKind::Type::TauPlus;
    else if (c.hitting.kind == "zeta_bar_0") kind.type = HittingKind::Type::ZetaBar0;
    else throw Error(ErrorCode::ConfigError, "hitting.kind must be tau_minus, tau_plus or zeta_bar_0", "hitting.kind");
    if (kind.type == HittingKind::Type::TauPlus) {
        if (!(c.hitting.level > 0.0)) throw Error(ErrorCode::ConfigError, "tau_plus needs a positive level", "hitting.level");
        kind.level = c.hitting.level;
    } else {
        kind.level = level_or_m0(c.model, c.hitting.level);
    }
    std::vector<double> inits;
    for (std::size_t i = 0; i < c.inits.size(); ++i) inits.push_back(init_row(c, i, 1, "[x]")[0]);
    const HittingResult r = hitting_tail(c.model, c.scheme, kind, inits, c.n_paths, c.t_grid, c.seed, workers);
    std::ostringstream os;
    json per = json::array();
    for (std::size_t i = 0; i < inits.size(); ++i) {
        json e = tail_json(r.tails[i]);
        e["init"] = inits[i];
        e["mean"] = r.means[i].mean;
        e["mean_se"] = r.means[i].se;
        e["mean_censored"] = r.means[i].censored;
        if (kind.type == HittingKind::Type::TauMinus) e["mean_within_bound_2"] = r.means[i].mean <= 2.0 + 3.0 * r.means[i].se;
        per.push_back(e);
        tail_csv(os, num(inits[i]), r.tails[i]);
    }
    out.summary["kind"] = c.hitting.kind;
    out.summary["level"] = kind.level;
    out.summary["results"] = per;
    if (kind.type == HittingKind::Type::ZetaBar0) {
        const MeetingBudget b = meeting_time_budget(c.model, kind.level);
        out.summary["t0"] = number_or_null(b.t0);
        out.summary["log10_t0"] = b.log10_t0;
    }
    out.csv = os.str();
    return out;
}

RunOutput run_coupling_tail(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    const auto inits = coupled_inits(c);
    std::ostringstream os;
    json runs = json::array();
    for (double f : c.coupling.meet_tol_factors) {
        SimScheme s = c.scheme;
        s.meet_tol_factor = c.scheme.meet_tol_factor * f;
        const CouplingResult r = coupling_tail(c.model, s, inits, c.n_paths, c.t_grid, c.seed, workers);
        json per = json::array();
        for (std::size_t i = 0; i < inits.size(); ++i) {
            per.push_back({{"init", {inits[i].x, inits[i].xt, inits[i].y, inits[i].yt}},
                           {"meet_tol", r.meet_tols[i]},
                           {"T_X", tail_json(r.tails_X[i])},
                           {"T", tail_json(r.tails_full[i])}});
            tail_csv(os, num(f) + "," + std::to_string(i) + ",T_X", r.tails_X[i]);
            tail_csv(os, num(f) + "," + std::to_string(i) + ",T", r.tails_full[i]);
        }
        tail_csv(os, num(f) + ",max,T_X", r.max_X);
        tail_csv(os, num(f) + ",max,T", r.max_full);
        json tv = json::array();
        for (const auto& pt : r.max_full.points) {
            const TvBound b = tv_upper_bound(r.max_full, pt.t);
            tv.push_back({{"t", b.t_used}, {"bound", b.point}, {"lo", b.lo}, {"hi", b.hi}});
        }
        json run = {{"meet_tol_factor", f},   {"per_init", per},          {"max_T_X", tail_json(r.max_X)},
                    {"max_T", tail_json(r.max_full)}, {"rate_fit_T", rate_json(r.max_full)},
                    {"rate_fit_T_X", rate_json(r.max_X)}, {"tv_upper_bound", tv}};
        if (!r.warning.empty()) run["warning"] = r.warning;
        runs.push_back(run);
    }
    out.summary["runs"] = runs;
    out.csv = os.str();
    return out;
}

RunOutput run_cir(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    const CirSection& s = c.cir;
    std::ostringstream os;
    json rows = json::array();
    bool increasing = true;
    double prev = -kInf;
    for (std::size_t i = 0; i < s.z1.size(); ++i) {
        const double z = s.z1[i];
        const double q = cir_mean_hitting_time(s.b, s.gamma, s.sigma, z);
        if (!(q > prev)) increasing = false;
        prev = q;
        json row = {{"z1", z}, {"mean_hitting_time", q}};
        os << num(z) << ',' << num(q) << ',';
        if (s.mc_paths > 0) {
            const CirMcResult mc = cir_mc_mean(s.b, s.gamma, s.sigma, c.scheme, z, s.mc_paths, c.seed + i, workers);
            row["mc_mean"] = mc.mean;
            row["mc_se"] = mc.se;
            row["mc_censored"] = mc.censored;
            os << num(mc.mean) << ',' << num(mc.se);
        } else {
            os << ',';
        }
        os << '\n';
        rows.push_back(row);
    }
    out.summary["b"] = s.b;
    out.summary["gamma"] = s.gamma;
    out.summary["sigma"] = s.sigma;
    out.summary["table"] = rows;
    out.summary["strictly_increasing"] = increasing;
    out.csv = os.str();
    return out;
}

RunOutput run_audit(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    std::vector<AuditInit> inits;
    for (std::size_t i = 0; i < c.inits.size(); ++i) {
        const auto r = init_row(c, i, 3, "[x, y, yt]");
        inits.push_back({r[0], r[1], r[2]});
    }
    const double M = level_or_m0(c.model, c.audit.M);
    const AuditReport r = comparison_audit(c.model, c.scheme, inits, c.n_paths, M, c.seed, workers, c.audit.localized);
    std::ostringstream os;
    json lemmas = json::array();
    for (const auto& l : r.lemma) {
        lemmas.push_back({{"ordering", l.name},
                          {"violating_paths", l.violating_paths},
                          {"fraction", l.fraction},
                          {"max_violation", l.max_violation},
                          {"mean_max_violation", l.mean_max_violation}});
        os << '"' << l.name << "\"," << l.violating_paths << ',' << num(l.fraction) << ',' << num(l.max_violation) << ','
           << num(l.mean_max_violation) << '\n';
    }
    out.summary["M"] = M;
    out.summary["n_paths"] = r.n_paths;
    out.summary["reached_exit"] = r.reached_exit;
    out.summary["lemmas"] = lemmas;
    out.csv = os.str();
    return out;
}

RunOutput run_localize(const ExperimentConfig& c, unsigned workers) {
    RunOutput out;
    LocalizeConfig lc = c.localize;
    lc.n_paths = c.n_paths;
    const LocalizeReport r = localize(c.model, c.scheme, lc, c.seed, workers);
    out.summary["mode"] = r.mode;
    out.summary["M"] = r.M;
    out.summary["t0"] = number_or_null(r.t0);
    out.summary["log10_t0"] = r.log10_t0;
    out.summary["t_used"] = r.t_used;
    out.summary["capped"] = r.capped;
    out.summary["cond_a"] = prob_json(r.cond_a);
    out.summary["cond_b"] = prob_json(r.cond_b);
    out.summary["cond_c"] = prob_json(r.cond_c);
    out.summary["direct_2t"] = prob_json(r.direct_2t);
    out.summary["assembled"] = r.assembled;
    out.summary["consistent"] = r.consistent;
    out.summary["notes"] = r.notes;
    if (r.assembled > 0.0 && r.assembled < 1.0) {
        const double span = r.mode == "k<=0 two-stage" ? 2.0 : 3.0;
        out.summary["lambda_star"] = -std::log(1.0 - r.assembled) / (span * r.t_used);
    }
    std::ostringstream os;
    prob_csv(os, "a", r.cond_a);
    prob_csv(os, "b", r.cond_b);
    prob_csv(os, "c", r.cond_c);
    prob_csv(os, "direct_2t", r.direct_2t);
    out.csv = os.str();
    return out;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParams:
        case ErrorCode::NotApplicable:
        case ErrorCode::ConditionFails:
        case ErrorCode::ZeroTailMass:
        case ErrorCode::InvalidRegion:
        case ErrorCode::ConfigError: return ValidationFailure;
        case ErrorCode::InvalidCertificate: return CertificateInvalid;
        case ErrorCode::QuadratureFail: return QuadratureFailure;
        default: return Failure;
    }
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"simulate",      "couple",    "drift-check",      "hitting",
                                                   "coupling-tail", "cir-check", "comparison-audit", "localize"};
    return names;
}

const char* csv_header(const std::string& e) {
    if (e == "simulate") return "init,path,t,X,Y";
    if (e == "couple") return "init,path,t,X,Xt,Y,Yt,Z,Zbar";
    if (e == "drift-check") return "z,LV,LV_over_abs_dV,log_abs_dV";
    if (e == "hitting") return "init,t,p_hat,ci_lo,ci_hi";
    if (e == "coupling-tail") return "meet_tol_factor,init,event,t,p_hat,ci_lo,ci_hi";
    if (e == "cir-check") return "z1,mean_hitting_time,mc_mean,mc_se";
    if (e == "comparison-audit") return "ordering,violating_paths,fraction,max_violation,mean_max_violation";
    if (e == "localize") return "condition,p_hat,ci_lo,ci_hi,n,argmin";
    return "";
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
    check_scheme(cfg.scheme);
    validate(cfg.model);
    if (cfg.n_paths == 0) throw Error(ErrorCode::ConfigError, "n_paths must be positive", "n_paths");
    const unsigned workers = resolve_workers(cfg.workers);
    const std::string& e = cfg.experiment;
    RunOutput out;
    if (e == "simulate") out = run_simulate(cfg, workers);
    else if (e == "couple") out = run_couple(cfg, workers);
    else if (e == "drift-check") out = run_drift(cfg, workers);
    else if (e == "hitting") out = run_hitting(cfg, workers);
    else if (e == "coupling-tail") out = run_coupling_tail(cfg, workers);
    else if (e == "cir-check") out = run_cir(cfg, workers);
    else if (e == "comparison-audit") out = run_audit(cfg, workers);
    else if (e == "localize") out = run_localize(cfg, workers);
    else throw Error(ErrorCode::ConfigError, "unknown experiment '" + e + "'", "experiment");

    json summary;
    summary["schema"] = 1;
    summary["experiment"] = e;
    summary["config"] = to_json(cfg, false);
    summary["seed"] = cfg.seed;
    summary["timestamp"] = timestamp();
    for (auto it = out.summary.begin(); it != out.summary.end(); ++it) summary[it.key()] = it.value();
    out.summary = std::move(summary);
    out.csv = std::string(csv_header(e)) + "\n" + out.csv;
    return out;
}

int main(int argc, char** argv) {
    CLI::App app{"Simulation and certification experiments for predator-prey branching processes"};
    app.require_subcommand(1, 1);

    std::string config_path, workers_arg, out_prefix;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    std::vector<std::string> sets;

    std::string footer = "CSV columns per experiment:\n";
    for (const auto& name : experiment_names()) {
        footer += "  " + name + ": " + csv_header(name) + "\n";
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "JSON experiment config");
        sub->add_option("--seed", seed, "master seed (u64)");
        sub->add_option("--paths", paths, "paths per initial condition");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--workers", workers_arg, "worker threads (n or auto); default from CBIPC_WORKERS");
        sub->add_option("--out", out_prefix, "output prefix for <out>.json and <out>.csv");
        sub->add_option("--set", sets, "dotted-key override key=value (repeatable)");
    }
    app.footer(footer);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Ok : ValidationFailure;
    }

    try {
        const std::string experiment = app.get_subcommands().front()->get_name();
        std::vector<std::string> overrides = {"experiment=\"" + experiment + "\""};
        if (seed) overrides.push_back("seed=" + std::to_string(*seed));
        if (paths) overrides.push_back("n_paths=" + std::to_string(*paths));
        if (dt) overrides.push_back("scheme.dt=" + num(*dt));
        if (!out_prefix.empty()) overrides.push_back("out=" + json(out_prefix).dump());
        std::string w = workers_arg;
        if (w.empty())
            if (const char* env = std::getenv("CBIPC_WORKERS")) w = env;
        if (!w.empty()) overrides.push_back(w == "auto" ? "workers=\"auto\"" : "workers=" + w);
        overrides.insert(overrides.end(), sets.begin(), sets.end());

        const ExperimentConfig cfg = load_config(config_path, overrides);
        const RunOutput r = run_experiment(cfg);
        std::ofstream(cfg.out + ".json") << r.summary.dump(2) << '\n';
        std::ofstream(cfg.out + ".csv") << r.csv;
        std::cout << experiment << ": wrote " << cfg.out << ".json and " << cfg.out << ".csv\n";
        if (r.exit_code != Ok) std::cerr << "certificate is not valid\n";
        return r.exit_code;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]";
        if (!e.config_path().empty()) std::cerr << " at " << e.config_path();
        std::cerr << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Failure;
    }
}

}  // namespace cbipc::cli
