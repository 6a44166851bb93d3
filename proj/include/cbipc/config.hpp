#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbipc/ergodicity.hpp"
#include "cbipc/model.hpp"
#include "cbipc/paths.hpp"

namespace cbipc {

using json = nlohmann::json;

struct SimulateSection {
    int record_stride = 10;
    double truncation = 0.0;  // N for the truncated system; 0 = untruncated
    bool aux = false;         // couple: also run Z and Z̄
    double M = 0.0;           // level for Z̄; 0 = M₀ heuristic
};

struct DriftSection {
    std::string function = "f";  // f, g, h, w
    double M = 0.0;              // 0 = M₀ heuristic (f, w) or 1 when α₁ <= 1
    std::string target;          // empty = natural target of the function
    double z_lo = 0.0;           // 0 = default region
    double z_hi = 0.0;
    int n_grid = 400;
    double slack = 0.05;
};

struct HittingSection {
    std::string kind = "tau_minus";  // tau_minus, tau_plus, zeta_bar_0
    double level = 0.0;              // 0 = M₀ heuristic
};

struct CouplingSection {
    std::vector<double> meet_tol_factors{1.0, 0.5};
};

struct CirSection {
    double b = 1.0;
    double gamma = 1.0;
    double sigma = 1.0;
    std::vector<double> z1{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    std::size_t mc_paths = 0;  // 0 = quadrature only
};

struct AuditSection {
    double M = 0.0;  // 0 = M₀ heuristic
    bool localized = true;
};

struct ExperimentConfig {
    int schema = 1;
    std::string experiment = "simulate";
    ModelParams model;
    SimScheme scheme;
    // Shape depends on the experiment: [x, y] (simulate), [x, xt, y, yt] (couple, coupling-tail),
    // [x] or [z0] (hitting), [x, y, yt] (comparison-audit).
    std::vector<std::vector<double>> inits;
    std::size_t n_paths = 100;
    std::vector<double> t_grid;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = auto
    std::string out = "cbipc_out";

    SimulateSection simulate;
    DriftSection drift;
    HittingSection hitting;
    CouplingSection coupling;
    CirSection cir;
    AuditSection audit;
    LocalizeConfig localize;
};

// The reference model: both components σ=1, α=1.5, b=1, a=0.5, γ=1 with stable(1, 1.5, 10) jumps, k=0.5.
ModelParams reference_model();
ExperimentConfig default_config();

json to_json(const LevyMeasure& n);
json to_json(const ModelParams& p);
json to_json(const SimScheme& s);
// The resolved config; workers is left out when include_workers is false (results must not depend on it).
json to_json(const ExperimentConfig& c, bool include_workers = true);

// Missing keys keep their defaults; unknown keys are a ConfigError naming the key.
ExperimentConfig config_from_json(const json& j);

// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(json& j, const std::string& assignment);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace cbipc
