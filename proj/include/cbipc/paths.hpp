#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cbipc/model.hpp"
#include "cbipc/rng.hpp"

namespace cbipc {

enum class SmallJumpMode { CompensatorDrift, GaussianAR };

struct SimScheme {
    double dt = 1e-3;
    // Jumps below the cutoff are not simulated individually. 0 selects it from jump_rate.
    double jump_cutoff = 0.0;
    SmallJumpMode small_jump_mode = SmallJumpMode::GaussianAR;
    // δ_meet; a negative value means 1e-4·(1 + initial scale).
    double meet_tol = -1.0;
    // Multiplies δ_meet (auto or explicit); used to rerun experiments at δ/2.
    double meet_tol_factor = 1.0;
    double horizon = 10.0;
    double state_cap = 1e9;
    // Target number of simulated jumps per unit of state and unit time (sets the automatic cutoff).
    double jump_rate = 50.0;
    // Per mark segment and step, at most about this many jumps are drawn; in GaussianAR mode
    // the cutoff is raised locally beyond it.
    double max_jumps_per_step = 10.0;
};

void check_scheme(const SimScheme& s);

// Resolved per-component noise description.
struct ChannelSpec {
    double two_sigma = 0.0;
    const LevyMeasure* n = nullptr;
    double eps = 1.0;
    double m2_eps = 0.0;  // ∫₀^ε ξ² n(dξ)
    double tl_eps = 0.0;  // ∫_ε^∞ ξ n(dξ)
    double tm_eps = 0.0;  // n((ε,∞))
    bool gaussian_small = false;
    double max_jumps = 10.0;
};

double resolve_cutoff(const LevyMeasure& n, const SimScheme& s);
ChannelSpec make_channel(const ComponentParams& c, const SimScheme& s);

// One step of the u-indexed noise. Process i occupies the mark interval [lo[i], hi[i]);
// every mark segment receives one Gaussian (branching plus substituted small jumps), a Poisson
// number of large jumps and its compensator, all shared by the processes covering it.
// out[i] receives the increment; jumps[i] (optional) the sum of large jumps.
void layered_noise(const ChannelSpec& ch, int m, const double* lo, const double* hi, double dt, Stream& rng,
                   double* out, double* jumps = nullptr);

// Identifies the random streams of one path.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
};

struct StopTime {
    double t = std::numeric_limits<double>::infinity();
    bool censored = true;

    bool hit() const { return !censored; }
    void set(double time) {
        if (censored) {
            t = time;
            censored = false;
        }
    }
};

struct StoppingRecord {
    double minus_level = -std::numeric_limits<double>::infinity();
    double plus_level = std::numeric_limits<double>::infinity();
    StopTime tau_minus;
    StopTime tau_plus;
    StopTime T_X;
    StopTime T_full;
    StopTime zeta0;
    StopTime zeta0_bar;
    double horizon = 0.0;
};

enum class EventKind { LargeJump, Glue, CapAbort };

struct PathEvent {
    double t = 0.0;
    EventKind kind = EventKind::LargeJump;
    std::string component;
    double size = 0.0;
};

// Recorded trajectory. columns names the recorded processes (X, Xt, Y, Yt, Z, Zbar);
// states[j][k] is column j at times[k].
struct PathGrid {
    std::vector<double> times;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> states;
    std::vector<PathEvent> events;
    StoppingRecord stopping;
    bool aborted = false;

    const std::vector<double>& column(const std::string& name) const;
};

// Single CBIPC system, Euler-Maruyama with clamping at zero. N truncates the predation term.
class CbipcEngine {
public:
    CbipcEngine(const ModelParams& p, const SimScheme& s, StreamKey key, double x0, double y0,
                double N = std::numeric_limits<double>::infinity(), bool with_y = true);

    void step();
    bool done() const { return aborted || t >= horizon_ - 0.5 * dt_; }

    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double jump_x = 0.0;
    double jump_y = 0.0;
    bool aborted = false;
    std::uint64_t steps = 0;

private:
    const ModelParams* p_;
    double dt_, horizon_, cap_, N_;
    bool with_y_;
    ChannelSpec chx_, chy_;
    Stream rx_, ry_;
};

struct CoupledInit {
    double x = 0.0, xt = 0.0, y = 0.0, yt = 0.0;
};

struct AuxSpec {
    bool enabled = false;
    double M = 1.0;
    double z0 = 0.0;
    double zbar0 = 0.0;
};

// Coupled pair ((X,Y),(X̃,Ỹ)) with optional auxiliary Z, Z̄ on the predator channel.
// Marks: X on [0,X), X̃ on [0,X̃); Y on [0,Y), Ỹ on [0,Ỹ), Z on [Ỹ,Ỹ+Z), Z̄ on [Ỹ,Ỹ+Z̄).
class CoupledEngine {
public:
    CoupledEngine(const ModelParams& p, const SimScheme& s, StreamKey key, CoupledInit init, AuxSpec aux = {});

    void step();
    bool done() const { return aborted || t >= horizon_ - 0.5 * dt_; }
    double meet_tol() const { return tol_; }

    double t = 0.0;
    double x = 0.0, xt = 0.0, y = 0.0, yt = 0.0, z = 0.0, zb = 0.0;
    bool glued_x = false;
    bool glued_full = false;
    StopTime T_X, T_full, zeta0, zeta0_bar;
    // Pre-gluing differences of the last step (the gap closed by gluing).
    double raw_dx = 0.0, raw_dy = 0.0;
    double jumps[6] = {0, 0, 0, 0, 0, 0};
    bool aborted = false;
    std::uint64_t steps = 0;

private:
    const ModelParams* p_;
    double dt_, horizon_, cap_, tol_;
    AuxSpec aux_;
    ChannelSpec chx_, chy_;
    Stream rx_, ry_;
    double prev_dx_ = 0.0, prev_dy_ = 0.0;
};

// Z̄ alone: dZ̄ = (2kM + a₂)Z̄ - b₂Z̄^{α₂} + noise, on marks [0,Z̄) of the predator channel.
class ZbarEngine {
public:
    ZbarEngine(const ModelParams& p, const SimScheme& s, StreamKey key, double M, double z0);

    void step();
    bool done() const { return aborted || t >= horizon_ - 0.5 * dt_; }

    double t = 0.0;
    double z = 0.0;
    double jump = 0.0;
    bool aborted = false;
    std::uint64_t steps = 0;
    StopTime zeta;
    double tol = 0.0;

private:
    const ModelParams* p_;
    double dt_, horizon_, cap_, lin_;
    ChannelSpec ch_;
    Stream r_;
};

// Square-root diffusion dZ = (-bZ + γ)dt + √(2σZ)dB, absorbed at level 1. Crossings of the
// level between grid points are detected with the Brownian-bridge probability.
class CirEngine {
public:
    CirEngine(double b, double gamma, double sigma, const SimScheme& s, StreamKey key, double x0);

    void step();
    bool done() const { return hit.hit() || t >= horizon_ - 0.5 * dt_; }

    double t = 0.0;
    double z = 0.0;
    StopTime hit;
    std::uint64_t steps = 0;

private:
    double b_, g_, s_, dt_, horizon_;
    Stream r_;
};

struct RecordOptions {
    int stride = 1;  // record every stride-th step
    double minus_level = -std::numeric_limits<double>::infinity();
    double plus_level = std::numeric_limits<double>::infinity();
    bool log_jumps = true;
};

PathGrid simulate_cbipc(const ModelParams& p, const SimScheme& s, double x0, double y0, StreamKey key,
                        const RecordOptions& opt = {});
PathGrid simulate_truncated(const ModelParams& p, const SimScheme& s, double N, double x0, double y0, StreamKey key,
                            const RecordOptions& opt = {});
PathGrid simulate_coupled(const ModelParams& p, const SimScheme& s, CoupledInit init, StreamKey key,
                          const RecordOptions& opt = {}, AuxSpec aux = {});
// Z driven by a recorded X path (recorded with stride 1 on the same dt); uses the predator channel.
PathGrid simulate_aux_Z(const ModelParams& p, const SimScheme& s, const PathGrid& driver, double z0, StreamKey key);
PathGrid simulate_aux_Zbar(const ModelParams& p, const SimScheme& s, double M, double z0, StreamKey key,
                           const RecordOptions& opt = {});
PathGrid simulate_cir(double b, double gamma, double sigma, const SimScheme& s, double x0, StreamKey key,
                      const RecordOptions& opt = {});

// δ_meet actually used for a given initial scale.
double resolve_meet_tol(const SimScheme& s, double initial_scale);

}  // namespace cbipc
