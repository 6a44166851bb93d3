#include "cbipc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cbipc/error.hpp"

namespace cbipc {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigError, path + ": " + what, path);
}

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) config_error(key(it.key()), "unknown key");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json* find(const std::string& k) {
        seen_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    template <class T>
    void get(const std::string& k, T& dst) {
        if (const json* v = find(k)) {
            try {
                if constexpr (std::is_floating_point_v<T>) {
                    if (!v->is_number()) config_error(key(k), "expected a number");
                } else if constexpr (std::is_same_v<T, bool>) {
                    if (!v->is_boolean()) config_error(key(k), "expected true or false");
                } else if constexpr (std::is_integral_v<T>) {
                    if (!v->is_number_integer()) config_error(key(k), "expected an integer");
                    if (std::is_unsigned_v<T> && v->is_number_integer() && !v->is_number_unsigned())
                        config_error(key(k), "must be nonnegative");
                }
                dst = v->get<T>();
            } catch (const json::exception& e) {
                config_error(key(k), e.what());
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json levy_json(const LevyMeasure& n) {
    switch (n.family()) {
        case LevyFamily::Zero: return {{"family", "zero"}};
        case LevyFamily::CompoundPoisson: return {{"family", "compound_poisson"}, {"lambda", n.lambda()}, {"size", n.size()}};
        case LevyFamily::StableLike: {
            json j = {{"family", "stable"}, {"c", n.c()}, {"theta", n.theta()}};
            j["truncation"] = n.truncated() ? json(n.truncation()) : json(nullptr);
            return j;
        }
    }
    return {};
}

LevyMeasure levy_from(const json& j, const std::string& path) {
    Section s(j, path);
    std::string family = "zero";
    s.get("family", family);
    double lambda = 0, size = 0, c = 0, theta = 0, trunc = std::numeric_limits<double>::infinity();
    s.get("lambda", lambda);
    s.get("size", size);
    s.get("c", c);
    s.get("theta", theta);
    s.get("truncation", trunc);
    try {
        if (family == "zero") return LevyMeasure::zero();
        if (family == "compound_poisson") return LevyMeasure::compound_poisson(lambda, size);
        if (family == "stable") return LevyMeasure::stable(c, theta, trunc);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), path + "." + e.config_path());
    }
    config_error(path + ".family", "expected zero, compound_poisson or stable");
}

std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) config_error(path, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<CoupledInit> coupled_list(const json& v, const std::string& path) {
    std::vector<CoupledInit> out;
    if (!v.is_array()) config_error(path, "expected an array of [x, xt, y, yt]");
    for (const auto& e : v) {
        const auto xs = number_list(e, path);
        if (xs.size() != 4) config_error(path, "each entry needs 4 numbers [x, xt, y, yt]");
        out.push_back({xs[0], xs[1], xs[2], xs[3]});
    }
    return out;
}

json coupled_json(const std::vector<CoupledInit>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({c.x, c.xt, c.y, c.yt});
    return a;
}

}  // namespace

ModelParams reference_model() {
    ModelParams p;
    for (ComponentParams* c : {&p.c1, &p.c2}) {
        c->b = 1.0;
        c->a = 0.5;
        c->alpha = 1.5;
        c->gamma = 1.0;
        c->sigma = 1.0;
        c->n = LevyMeasure::stable(1.0, 1.5, 10.0);
    }
    p.k = 0.5;
    return p;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.model = reference_model();
    c.inits = {{1.0, 1.0}};
    for (int i = 0; i <= 20; ++i) c.t_grid.push_back(0.5 * i);
    return c;
}

json to_json(const LevyMeasure& n) { return levy_json(n); }

json to_json(const ModelParams& p) {
    json j;
    for (int i = 1; i <= 2; ++i) {
        const auto& c = p.component(i);
        const std::string s = std::to_string(i);
        j["b" + s] = c.b;
        j["a" + s] = c.a;
        j["alpha" + s] = c.alpha;
        j["gamma" + s] = c.gamma;
        j["sigma" + s] = c.sigma;
        j["n" + s] = levy_json(c.n);
    }
    j["k"] = p.k;
    return j;
}

json to_json(const SimScheme& s) {
    return {{"dt", s.dt},
            {"jump_cutoff", s.jump_cutoff},
            {"small_jump_mode", s.small_jump_mode == SmallJumpMode::GaussianAR ? "gaussian" : "compensator"},
            {"meet_tol", s.meet_tol},
            {"meet_tol_factor", s.meet_tol_factor},
            {"horizon", s.horizon},
            {"state_cap", s.state_cap},
            {"jump_rate", s.jump_rate},
            {"max_jumps_per_step", s.max_jumps_per_step}};
}

json to_json(const ExperimentConfig& c, bool include_workers) {
    json j;
    j["schema"] = c.schema;
    j["experiment"] = c.experiment;
    j["model"] = to_json(c.model);
    j["scheme"] = to_json(c.scheme);
    j["inits"] = c.inits;
    j["n_paths"] = c.n_paths;
    j["t_grid"] = c.t_grid;
    j["seed"] = c.seed;
    if (include_workers) j["workers"] = c.workers == 0 ? json("auto") : json(c.workers);
    j["out"] = c.out;
    j["simulate"] = {{"record_stride", c.simulate.record_stride},
                     {"truncation", c.simulate.truncation},
                     {"aux", c.simulate.aux},
                     {"M", c.simulate.M}};
    j["drift"] = {{"function", c.drift.function}, {"M", c.drift.M},         {"target", c.drift.target},
                  {"z_lo", c.drift.z_lo},         {"z_hi", c.drift.z_hi},   {"n_grid", c.drift.n_grid},
                  {"slack", c.drift.slack}};
    j["hitting"] = {{"kind", c.hitting.kind}, {"level", c.hitting.level}};
    j["coupling"] = {{"meet_tol_factors", c.coupling.meet_tol_factors}};
    j["cir"] = {{"b", c.cir.b},   {"gamma", c.cir.gamma},       {"sigma", c.cir.sigma},
                {"z1", c.cir.z1}, {"mc_paths", c.cir.mc_paths}};
    j["audit"] = {{"M", c.audit.M}, {"localized", c.audit.localized}};
    j["localize"] = {{"M", c.localize.M},
                     {"t0", c.localize.t0},
                     {"t_cap", c.localize.t_cap},
                     {"a_inits", c.localize.a_inits},
                     {"b_inits", coupled_json(c.localize.b_inits)},
                     {"c_inits", coupled_json(c.localize.c_inits)}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c = default_config();
    Section root(j, "");
    root.get("schema", c.schema);
    if (c.schema != 1) config_error("schema", "only schema 1 is supported");
    root.get("experiment", c.experiment);

    if (const json* m = root.find("model")) {
        Section s(*m, "model");
        for (int i = 1; i <= 2; ++i) {
            ComponentParams& cp = i == 1 ? c.model.c1 : c.model.c2;
            const std::string n = std::to_string(i);
            s.get("b" + n, cp.b);
            s.get("a" + n, cp.a);
            s.get("alpha" + n, cp.alpha);
            s.get("gamma" + n, cp.gamma);
            s.get("sigma" + n, cp.sigma);
            if (const json* l = s.find("n" + n)) cp.n = levy_from(*l, "model.n" + n);
        }
        s.get("k", c.model.k);
    }
    if (const json* v = root.find("scheme")) {
        Section s(*v, "scheme");
        SimScheme& sc = c.scheme;
        s.get("dt", sc.dt);
        s.get("jump_cutoff", sc.jump_cutoff);
        if (const json* mode = s.find("small_jump_mode")) {
            const std::string m = mode->is_string() ? mode->get<std::string>() : "";
            if (m == "gaussian")
                sc.small_jump_mode = SmallJumpMode::GaussianAR;
            else if (m == "compensator")
                sc.small_jump_mode = SmallJumpMode::CompensatorDrift;
            else
                config_error("scheme.small_jump_mode", "expected gaussian or compensator");
        }
        if (const json* mt = s.find("meet_tol")) {
            if (mt->is_string() && mt->get<std::string>() == "auto")
                sc.meet_tol = -1.0;
            else if (mt->is_number())
                sc.meet_tol = mt->get<double>();
            else
                config_error("scheme.meet_tol", "expected a number or \"auto\"");
        }
        s.get("meet_tol_factor", sc.meet_tol_factor);
        s.get("horizon", sc.horizon);
        s.get("state_cap", sc.state_cap);
        s.get("jump_rate", sc.jump_rate);
        s.get("max_jumps_per_step", sc.max_jumps_per_step);
    }
    if (const json* v = root.find("inits")) {
        if (!v->is_array()) config_error("inits", "expected an array of arrays");
        c.inits.clear();
        for (const auto& e : *v) c.inits.push_back(number_list(e.is_array() ? e : json::array({e}), "inits"));
    }
    root.get("n_paths", c.n_paths);
    if (const json* v = root.find("t_grid")) {
        if (v->is_object()) {
            Section s(*v, "t_grid");
            double start = 0, stop = 10;
            int count = 21;
            s.get("start", start);
            s.get("stop", stop);
            s.get("count", count);
            if (count < 2 || !(stop > start)) config_error("t_grid", "needs count >= 2 and stop > start");
            c.t_grid.clear();
            for (int i = 0; i < count; ++i) c.t_grid.push_back(start + (stop - start) * i / (count - 1));
        } else {
            c.t_grid = number_list(*v, "t_grid");
        }
        for (std::size_t i = 1; i < c.t_grid.size(); ++i)
            if (!(c.t_grid[i] > c.t_grid[i - 1])) config_error("t_grid", "must be strictly increasing");
    }
    root.get("seed", c.seed);
    if (const json* v = root.find("workers")) {
        if (v->is_string() && v->get<std::string>() == "auto")
            c.workers = 0;
        else if (v->is_number_unsigned() && v->get<unsigned>() > 0)
            c.workers = v->get<unsigned>();
        else
            config_error("workers", "expected a positive integer or \"auto\"");
    }
    root.get("out", c.out);

    if (const json* v = root.find("simulate")) {
        Section s(*v, "simulate");
        s.get("record_stride", c.simulate.record_stride);
        s.get("truncation", c.simulate.truncation);
        s.get("aux", c.simulate.aux);
        s.get("M", c.simulate.M);
        if (c.simulate.record_stride < 1) config_error("simulate.record_stride", "must be >= 1");
    }
    if (const json* v = root.find("drift")) {
        Section s(*v, "drift");
        s.get("function", c.drift.function);
        s.get("M", c.drift.M);
        s.get("target", c.drift.target);
        s.get("z_lo", c.drift.z_lo);
        s.get("z_hi", c.drift.z_hi);
        s.get("n_grid", c.drift.n_grid);
        s.get("slack", c.drift.slack);
    }
    if (const json* v = root.find("hitting")) {
        Section s(*v, "hitting");
        s.get("kind", c.hitting.kind);
        s.get("level", c.hitting.level);
    }
    if (const json* v = root.find("coupling")) {
        Section s(*v, "coupling");
        if (const json* f = s.find("meet_tol_factors")) c.coupling.meet_tol_factors = number_list(*f, "coupling.meet_tol_factors");
    }
    if (const json* v = root.find("cir")) {
        Section s(*v, "cir");
        s.get("b", c.cir.b);
        s.get("gamma", c.cir.gamma);
        s.get("sigma", c.cir.sigma);
        if (const json* z = s.find("z1")) c.cir.z1 = number_list(*z, "cir.z1");
        s.get("mc_paths", c.cir.mc_paths);
    }
    if (const json* v = root.find("audit")) {
        Section s(*v, "audit");
        s.get("M", c.audit.M);
        s.get("localized", c.audit.localized);
    }
    if (const json* v = root.find("localize")) {
        Section s(*v, "localize");
        s.get("M", c.localize.M);
        s.get("t0", c.localize.t0);
        s.get("t_cap", c.localize.t_cap);
        if (const json* a = s.find("a_inits")) c.localize.a_inits = number_list(*a, "localize.a_inits");
        if (const json* b = s.find("b_inits")) c.localize.b_inits = coupled_list(*b, "localize.b_inits");
        if (const json* d = s.find("c_inits")) c.localize.c_inits = coupled_list(*d, "localize.c_inits");
    }
    return c;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) config_error(assignment, "override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) config_error(path, "empty key in override");
        if (!node->is_object()) {
            if (!node->is_null()) config_error(path, "override descends into a non-object");
            *node = json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) config_error("config", "cannot open " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        j = json::parse(buf.str(), nullptr, false, true);
        if (j.is_discarded()) config_error("config", "cannot parse " + path + " as JSON");
    }
    for (const auto& o : overrides) apply_override(j, o);
    return config_from_json(j);
}

}  // namespace cbipc
