#include "cbipc/paths.hpp"

#include <algorithm>
#include <cmath>

#include "cbipc/error.hpp"

namespace cbipc {

void check_scheme(const SimScheme& s) {
    auto bad = [](const char* key, const char* what) {
        throw Error(ErrorCode::InvalidParams, std::string("scheme.") + key + " " + what, std::string("scheme.") + key);
    };
    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) bad("dt", "must be positive");
    if (!(s.jump_cutoff >= 0.0)) bad("jump_cutoff", "must be nonnegative (0 = automatic)");
    if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) bad("horizon", "must be positive");
    if (!(s.state_cap > 0.0)) bad("state_cap", "must be positive");
    if (!(s.jump_rate > 0.0)) bad("jump_rate", "must be positive");
    if (!(s.max_jumps_per_step > 0.0)) bad("max_jumps_per_step", "must be positive");
    if (std::isnan(s.meet_tol)) bad("meet_tol", "must be a number");
    if (!(s.meet_tol_factor > 0.0)) bad("meet_tol_factor", "must be positive");
}

double resolve_meet_tol(const SimScheme& s, double initial_scale) {
    return s.meet_tol_factor * (s.meet_tol >= 0.0 ? s.meet_tol : 1e-4 * (1.0 + initial_scale));
}

double resolve_cutoff(const LevyMeasure& n, const SimScheme& s) {
    if (s.jump_cutoff > 0.0) return s.jump_cutoff;
    switch (n.family()) {
        case LevyFamily::Zero: return 1.0;
        case LevyFamily::CompoundPoisson: return 0.5 * n.size();
        case LevyFamily::StableLike: return tail_mass_inverse(n, s.jump_rate);
    }
    return 1.0;
}

ChannelSpec make_channel(const ComponentParams& c, const SimScheme& s) {
    ChannelSpec ch;
    ch.two_sigma = 2.0 * c.sigma;
    ch.n = &c.n;
    ch.eps = resolve_cutoff(c.n, s);
    ch.m2_eps = truncated_second_moment(c.n, ch.eps);
    ch.tl_eps = tail_linear_moment(c.n, ch.eps);
    ch.tm_eps = tail_mass(c.n, ch.eps);
    ch.gaussian_small = s.small_jump_mode == SmallJumpMode::GaussianAR;
    ch.max_jumps = s.max_jumps_per_step;
    return ch;
}

void layered_noise(const ChannelSpec& ch, int m, const double* lo, const double* hi, double dt, Stream& rng,
                   double* out, double* jumps) {
    double ends[16];
    int ne = 0;
    for (int i = 0; i < m; ++i) {
        out[i] = 0.0;
        if (jumps) jumps[i] = 0.0;
        if (hi[i] > lo[i]) {
            ends[ne++] = lo[i];
            ends[ne++] = hi[i];
        }
    }
    if (ne == 0) return;
    std::sort(ends, ends + ne);
    ne = static_cast<int>(std::unique(ends, ends + ne) - ends);
    const LevyMeasure& n = *ch.n;
    const bool stable = n.family() == LevyFamily::StableLike;
    for (int j = 0; j + 1 < ne; ++j) {
        const double a = ends[j], b = ends[j + 1];
        const double len = b - a;
        unsigned mask = 0;
        for (int i = 0; i < m; ++i)
            if (hi[i] > lo[i] && lo[i] <= a && b <= hi[i]) mask |= 1u << i;
        if (mask == 0 || !(len > 0.0)) continue;

        double eps = ch.eps, m2 = ch.m2_eps, tl = ch.tl_eps, tm = ch.tm_eps;
        if (stable && ch.gaussian_small && len * tm * dt > ch.max_jumps) {
            // many jumps in this segment: raise the cutoff, the rest joins the Gaussian part
            eps = tail_mass_inverse(n, ch.max_jumps / (len * dt));
            m2 = truncated_second_moment(n, eps);
            tl = tail_linear_moment(n, eps);
            tm = tail_mass(n, eps);
        }
        const double var = (ch.two_sigma + (ch.gaussian_small ? m2 : 0.0)) * len * dt;
        double inc = var > 0.0 ? std::sqrt(var) * rng.normal() : 0.0;
        double big = 0.0;
        if (tm > 0.0) {
            const std::uint64_t count = rng.poisson(len * tm * dt);
            if (n.family() == LevyFamily::CompoundPoisson) {
                big = static_cast<double>(count) * n.size();
            } else {
                for (std::uint64_t r = 0; r < count; ++r) big += tail_jump_from_uniform(n, eps, rng.uniform());
            }
        }
        inc += big - len * tl * dt;
        for (int i = 0; i < m; ++i) {
            if (!(mask & (1u << i))) continue;
            out[i] += inc;
            if (jumps) jumps[i] += big;
        }
    }
}

const std::vector<double>& PathGrid::column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
        if (columns[j] == name) return states[j];
    throw Error(ErrorCode::InvalidParams, "path has no column " + name);
}

// ---------------------------------------------------------------------------

CbipcEngine::CbipcEngine(const ModelParams& p, const SimScheme& s, StreamKey key, double x0, double y0, double N,
                         bool with_y)
    : x(x0), y(y0), p_(&p), dt_(s.dt), horizon_(s.horizon), cap_(s.state_cap), N_(N), with_y_(with_y),
      chx_(make_channel(p.c1, s)), chy_(make_channel(p.c2, s)),
      rx_(key.seed, key.path, Channel::X), ry_(key.seed, key.path, Channel::Y) {
    if (!(x0 >= 0.0) || !(y0 >= 0.0)) throw Error(ErrorCode::InvalidParams, "initial state must be nonnegative", "inits");
}

void CbipcEngine::step() {
    const double lo = 0.0;
    double ix = 0.0, iy = 0.0;
    layered_noise(chx_, 1, &lo, &x, dt_, rx_, &ix, &jump_x);
    double nx = x + drift_x(*p_, x) * dt_ + ix;
    double ny = y;
    if (with_y_) {
        layered_noise(chy_, 1, &lo, &y, dt_, ry_, &iy, &jump_y);
        ny = y + drift_y(*p_, x, y, N_) * dt_ + iy;
    }
    x = std::max(0.0, nx);
    y = std::max(0.0, ny);
    ++steps;
    t = static_cast<double>(steps) * dt_;
    if (x > cap_ || y > cap_) aborted = true;
}

// ---------------------------------------------------------------------------

CoupledEngine::CoupledEngine(const ModelParams& p, const SimScheme& s, StreamKey key, CoupledInit init, AuxSpec aux)
    : x(init.x), xt(init.xt), y(init.y), yt(init.yt), p_(&p), dt_(s.dt), horizon_(s.horizon), cap_(s.state_cap),
      aux_(aux), chx_(make_channel(p.c1, s)), chy_(make_channel(p.c2, s)),
      rx_(key.seed, key.path, Channel::X), ry_(key.seed, key.path, Channel::Y) {
    if (!(init.x >= 0.0 && init.xt >= 0.0 && init.y >= 0.0 && init.yt >= 0.0))
        throw Error(ErrorCode::InvalidParams, "initial state must be nonnegative", "inits");
    tol_ = resolve_meet_tol(s, std::max({init.x, init.xt, init.y, init.yt}));
    if (std::abs(x - xt) <= tol_) {
        xt = x;
        glued_x = true;
        T_X.set(0.0);
        if (std::abs(y - yt) <= tol_) {
            yt = y;
            glued_full = true;
            T_full.set(0.0);
        }
    }
    prev_dx_ = x - xt;
    prev_dy_ = y - yt;
    if (aux_.enabled) {
        z = aux_.z0;
        zb = aux_.zbar0;
        if (z <= tol_) zeta0.set(0.0);
        if (zb <= tol_) zeta0_bar.set(0.0);
    }
}

void CoupledEngine::step() {
    const ModelParams& p = *p_;
    double lo[4], hi[4], inc[4];

    // prey channel
    lo[0] = 0.0;
    hi[0] = x;
    lo[1] = 0.0;
    hi[1] = glued_x ? 0.0 : xt;
    layered_noise(chx_, 2, lo, hi, dt_, rx_, inc, jumps);
    double nx = std::max(0.0, x + drift_x(p, x) * dt_ + inc[0]);
    double nxt = glued_x ? nx : std::max(0.0, xt + drift_x(p, xt) * dt_ + inc[1]);

    // predator channel
    const double off = yt;
    lo[0] = 0.0;
    hi[0] = y;
    lo[1] = 0.0;
    hi[1] = glued_full ? 0.0 : yt;
    lo[2] = off;
    hi[2] = aux_.enabled ? off + z : off;
    lo[3] = off;
    hi[3] = aux_.enabled ? off + zb : off;
    layered_noise(chy_, 4, lo, hi, dt_, ry_, inc, jumps + 2);
    const auto& c2 = p.c2;
    const double inf = std::numeric_limits<double>::infinity();
    double ny = std::max(0.0, y + drift_y(p, x, y, inf) * dt_ + inc[0]);
    double nyt = glued_full ? ny : std::max(0.0, yt + drift_y(p, xt, yt, inf) * dt_ + inc[1]);
    if (aux_.enabled) {
        const double dz = p.k * x * z - c2.b * std::pow(z, c2.alpha) + c2.a * z;
        const double dzb = (2.0 * p.k * aux_.M + c2.a) * zb - c2.b * std::pow(zb, c2.alpha);
        z = std::max(0.0, z + dz * dt_ + inc[2]);
        zb = std::max(0.0, zb + dzb * dt_ + inc[3]);
    }
    ++steps;
    t = static_cast<double>(steps) * dt_;

    if (!glued_x) {
        const double d = nx - nxt;
        raw_dx = d;
        // a sign change means the paths crossed inside the step
        if (std::abs(d) <= tol_ || d * prev_dx_ < 0.0) {
            nxt = nx;
            glued_x = true;
            T_X.set(t);
        }
        prev_dx_ = d;
    } else {
        raw_dx = 0.0;
    }
    if (!glued_full) {
        const double d = ny - nyt;
        raw_dy = d;
        if (glued_x && (std::abs(d) <= tol_ || d * prev_dy_ < 0.0)) {
            nyt = ny;
            glued_full = true;
            T_full.set(t);
        }
        prev_dy_ = d;
    } else {
        raw_dy = 0.0;
    }
    x = nx;
    xt = nxt;
    y = ny;
    yt = nyt;
    if (aux_.enabled) {
        if (z <= tol_) zeta0.set(t);
        if (zb <= tol_) zeta0_bar.set(t);
    }
    if (std::max({x, xt, y, yt, z, zb}) > cap_) aborted = true;
}

// ---------------------------------------------------------------------------

ZbarEngine::ZbarEngine(const ModelParams& p, const SimScheme& s, StreamKey key, double M, double z0)
    : z(z0), p_(&p), dt_(s.dt), horizon_(s.horizon), cap_(s.state_cap), lin_(2.0 * p.k * M + p.c2.a),
      ch_(make_channel(p.c2, s)), r_(key.seed, key.path, Channel::Y) {
    if (!(z0 >= 0.0)) throw Error(ErrorCode::InvalidParams, "z0 must be nonnegative", "inits");
    if (!(M > 0.0)) throw Error(ErrorCode::InvalidParams, "M must be positive", "localize.M");
    tol = resolve_meet_tol(s, z0);
    if (z <= tol) zeta.set(0.0);
}

void ZbarEngine::step() {
    const double lo = 0.0;
    double inc = 0.0;
    layered_noise(ch_, 1, &lo, &z, dt_, r_, &inc, &jump);
    const auto& c2 = p_->c2;
    z = std::max(0.0, z + (lin_ * z - c2.b * std::pow(z, c2.alpha)) * dt_ + inc);
    t = static_cast<double>(++steps) * dt_;
    if (z <= tol) zeta.set(t);
    if (z > cap_) aborted = true;
}

// ---------------------------------------------------------------------------

CirEngine::CirEngine(double b, double gamma, double sigma, const SimScheme& s, StreamKey key, double x0)
    : z(x0), b_(b), g_(gamma), s_(sigma), dt_(s.dt), horizon_(s.horizon), r_(key.seed, key.path, Channel::Cir) {
    if (!(b > 0.0) || !(gamma > 0.0) || !(sigma > 0.0))
        throw Error(ErrorCode::InvalidParams, "CIR needs b, gamma, sigma > 0", "cir");
    if (!(x0 > 1.0)) throw Error(ErrorCode::InvalidParams, "CIR start must exceed 1", "cir.z1");
}

void CirEngine::step() {
    const double v = 2.0 * s_ * z * dt_;
    const double zn = z + (-b_ * z + g_) * dt_ + std::sqrt(v) * r_.normal();
    const double u = r_.uniform();
    if (zn <= 1.0) {
        hit.set(t + dt_ * (z - 1.0) / (z - zn));
    } else if (u < std::exp(-2.0 * (z - 1.0) * (zn - 1.0) / v)) {
        hit.set(t + 0.5 * dt_);
    }
    z = std::max(0.0, zn);
    t = static_cast<double>(++steps) * dt_;
}

// ---------------------------------------------------------------------------

namespace {

void record(PathGrid& g, double t, std::initializer_list<double> vals) {
    g.times.push_back(t);
    std::size_t j = 0;
    for (double v : vals) g.states[j++].push_back(v);
}

void init_grid(PathGrid& g, std::initializer_list<const char*> cols, double horizon, const RecordOptions& opt) {
    for (const char* c : cols) g.columns.emplace_back(c);
    g.states.resize(g.columns.size());
    g.stopping.horizon = horizon;
    g.stopping.minus_level = opt.minus_level;
    g.stopping.plus_level = opt.plus_level;
}

void observe_levels(StoppingRecord& r, double t, double x) {
    if (x <= r.minus_level) r.tau_minus.set(t);
    if (x >= r.plus_level) r.tau_plus.set(t);
}

PathGrid run_single(const ModelParams& p, const SimScheme& s, double N, double x0, double y0, StreamKey key,
                    const RecordOptions& opt) {
    check_scheme(s);
    CbipcEngine e(p, s, key, x0, y0, N);
    PathGrid g;
    init_grid(g, {"X", "Y"}, s.horizon, opt);
    record(g, 0.0, {e.x, e.y});
    observe_levels(g.stopping, 0.0, e.x);
    const int stride = std::max(1, opt.stride);
    while (!e.done()) {
        e.step();
        if (opt.log_jumps) {
            if (e.jump_x > 0.0) g.events.push_back({e.t, EventKind::LargeJump, "X", e.jump_x});
            if (e.jump_y > 0.0) g.events.push_back({e.t, EventKind::LargeJump, "Y", e.jump_y});
        }
        observe_levels(g.stopping, e.t, e.x);
        if (e.steps % stride == 0 || e.done()) record(g, e.t, {e.x, e.y});
    }
    if (e.aborted) {
        g.aborted = true;
        g.events.push_back({e.t, EventKind::CapAbort, "", 0.0});
    }
    return g;
}

}  // namespace

PathGrid simulate_cbipc(const ModelParams& p, const SimScheme& s, double x0, double y0, StreamKey key,
                        const RecordOptions& opt) {
    return run_single(p, s, std::numeric_limits<double>::infinity(), x0, y0, key, opt);
}

PathGrid simulate_truncated(const ModelParams& p, const SimScheme& s, double N, double x0, double y0, StreamKey key,
                            const RecordOptions& opt) {
    if (!(N > 0.0)) throw Error(ErrorCode::InvalidParams, "truncation level N must be positive", "truncation");
    return run_single(p, s, N, x0, y0, key, opt);
}

PathGrid simulate_coupled(const ModelParams& p, const SimScheme& s, CoupledInit init, StreamKey key,
                          const RecordOptions& opt, AuxSpec aux) {
    check_scheme(s);
    CoupledEngine e(p, s, key, init, aux);
    PathGrid g;
    if (aux.enabled)
        init_grid(g, {"X", "Xt", "Y", "Yt", "Z", "Zbar"}, s.horizon, opt);
    else
        init_grid(g, {"X", "Xt", "Y", "Yt"}, s.horizon, opt);
    auto rec = [&] {
        if (aux.enabled)
            record(g, e.t, {e.x, e.xt, e.y, e.yt, e.z, e.zb});
        else
            record(g, e.t, {e.x, e.xt, e.y, e.yt});
    };
    rec();
    observe_levels(g.stopping, 0.0, e.x);
    if (e.glued_x) g.events.push_back({0.0, EventKind::Glue, "X", 0.0});
    if (e.glued_full) g.events.push_back({0.0, EventKind::Glue, "XY", 0.0});
    static const char* names[6] = {"X", "Xt", "Y", "Yt", "Z", "Zbar"};
    const int stride = std::max(1, opt.stride);
    while (!e.done()) {
        const bool gx = e.glued_x, gf = e.glued_full;
        e.step();
        if (opt.log_jumps)
            for (int i = 0; i < 6; ++i)
                if (e.jumps[i] > 0.0) g.events.push_back({e.t, EventKind::LargeJump, names[i], e.jumps[i]});
        if (!gx && e.glued_x) g.events.push_back({e.t, EventKind::Glue, "X", 0.0});
        if (!gf && e.glued_full) g.events.push_back({e.t, EventKind::Glue, "XY", 0.0});
        observe_levels(g.stopping, e.t, e.x);
        if (e.steps % stride == 0 || e.done()) rec();
    }
    g.stopping.T_X = e.T_X;
    g.stopping.T_full = e.T_full;
    g.stopping.zeta0 = e.zeta0;
    g.stopping.zeta0_bar = e.zeta0_bar;
    if (e.aborted) {
        g.aborted = true;
        g.events.push_back({e.t, EventKind::CapAbort, "", 0.0});
    }
    return g;
}

PathGrid simulate_aux_Z(const ModelParams& p, const SimScheme& s, const PathGrid& driver, double z0, StreamKey key) {
    check_scheme(s);
    if (!(z0 >= 0.0)) throw Error(ErrorCode::InvalidParams, "z0 must be nonnegative", "inits");
    const auto& X = driver.column("X");
    const ChannelSpec ch = make_channel(p.c2, s);
    Stream rng(key.seed, key.path, Channel::Y);
    const double tol = resolve_meet_tol(s, z0);
    PathGrid g;
    init_grid(g, {"Z"}, s.horizon, {});
    double z = z0;
    record(g, 0.0, {z});
    if (z <= tol) g.stopping.zeta0.set(0.0);
    const auto& c2 = p.c2;
    const double lo = 0.0;
    for (std::size_t k = 0; k + 1 < X.size(); ++k) {
        double inc = 0.0, big = 0.0;
        layered_noise(ch, 1, &lo, &z, s.dt, rng, &inc, &big);
        z = std::max(0.0, z + (p.k * X[k] * z - c2.b * std::pow(z, c2.alpha) + c2.a * z) * s.dt + inc);
        const double t = driver.times[k + 1];
        if (big > 0.0) g.events.push_back({t, EventKind::LargeJump, "Z", big});
        record(g, t, {z});
        if (z <= tol) g.stopping.zeta0.set(t);
        if (z > s.state_cap) {
            g.aborted = true;
            g.events.push_back({t, EventKind::CapAbort, "", 0.0});
            break;
        }
    }
    return g;
}

PathGrid simulate_aux_Zbar(const ModelParams& p, const SimScheme& s, double M, double z0, StreamKey key,
                           const RecordOptions& opt) {
    check_scheme(s);
    ZbarEngine e(p, s, key, M, z0);
    PathGrid g;
    init_grid(g, {"Zbar"}, s.horizon, opt);
    record(g, 0.0, {e.z});
    const int stride = std::max(1, opt.stride);
    std::uint64_t k = 0;
    while (!e.done()) {
        e.step();
        ++k;
        if (opt.log_jumps && e.jump > 0.0) g.events.push_back({e.t, EventKind::LargeJump, "Zbar", e.jump});
        if (k % stride == 0 || e.done()) record(g, e.t, {e.z});
    }
    g.stopping.zeta0_bar = e.zeta;
    if (e.aborted) {
        g.aborted = true;
        g.events.push_back({e.t, EventKind::CapAbort, "", 0.0});
    }
    return g;
}

PathGrid simulate_cir(double b, double gamma, double sigma, const SimScheme& s, double x0, StreamKey key,
                      const RecordOptions& opt) {
    check_scheme(s);
    CirEngine e(b, gamma, sigma, s, key, x0);
    PathGrid g;
    init_grid(g, {"Z"}, s.horizon, opt);
    record(g, 0.0, {e.z});
    const int stride = std::max(1, opt.stride);
    std::uint64_t k = 0;
    while (!e.done()) {
        e.step();
        ++k;
        if (k % stride == 0 || e.done()) record(g, e.t, {e.z});
    }
    // the hitting time of level 1 is reported as zeta0
    g.stopping.zeta0 = e.hit;
    g.stopping.minus_level = 1.0;
    g.stopping.tau_minus = e.hit;
    return g;
}

}  // namespace cbipc
