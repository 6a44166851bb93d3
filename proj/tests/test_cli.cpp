#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cbipc/cli.hpp"
#include "cbipc/config.hpp"
#include "cbipc/error.hpp"

using namespace cbipc;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cbipc");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

fs::path scratch_dir() {
    const fs::path d = fs::temp_directory_path() / "cbipc_cli_tests";
    fs::create_directories(d);
    return d;
}

ErrorCode config_error(const json& j, std::string* path = nullptr) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        if (path) *path = e.config_path();
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidParams;
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("round trip is bit exact") {
        ExperimentConfig c = default_config();
        c.experiment = "coupling-tail";
        c.model.c1.a = 0.1;
        c.model.c2.sigma = 1.0 / 3.0;
        c.model.k = 1e-300;
        c.model.c2.n = LevyMeasure::compound_poisson(0.7, std::sqrt(2.0));
        c.scheme.dt = 1.0 / 1024 / 3;
        c.scheme.meet_tol = 2.5e-7;
        c.scheme.small_jump_mode = SmallJumpMode::CompensatorDrift;
        c.inits = {{0.1, 0.2, 0.3, 0.7}, {1, 2, 3, 4}};
        c.t_grid = {0, 0.1, 0.30000000000000004};
        c.seed = 0xfedcba9876543210ULL;
        c.coupling.meet_tol_factors = {1, 0.25};
        c.localize.a_inits = {3.0, 7.5};
        c.localize.b_inits = {{0, 0, 1, 2}};
        const json j = to_json(c);
        const std::string text = j.dump();
        const ExperimentConfig back = config_from_json(json::parse(text));
        CHECK(to_json(back).dump() == text);
        CHECK(back.model.c2.sigma == c.model.c2.sigma);
        CHECK(back.model.k == c.model.k);
        CHECK(back.scheme.dt == c.scheme.dt);
        CHECK(back.seed == c.seed);
        CHECK(back.t_grid == c.t_grid);
        CHECK(back.model.c2.n.family() == LevyFamily::CompoundPoisson);
        CHECK(back.model.c1.n.truncation() == 10.0);
        CHECK(std::isinf(config_from_json(json::parse(to_json(default_config()).dump())).model.c1.n.truncation()) ==
              std::isinf(default_config().model.c1.n.truncation()));
    }

    TEST_CASE("overrides and grid forms") {
        json j = to_json(default_config());
        apply_override(j, "scheme.dt=0.002");
        apply_override(j, "experiment=hitting");
        apply_override(j, "model.n2.family=zero");
        apply_override(j, "t_grid={\"start\":0,\"stop\":2,\"count\":5}");
        apply_override(j, "workers=auto");
        const auto c = config_from_json(j);
        CHECK(c.scheme.dt == 0.002);
        CHECK(c.experiment == "hitting");
        CHECK(c.model.c2.n.family() == LevyFamily::Zero);
        CHECK(c.t_grid == std::vector<double>{0, 0.5, 1, 1.5, 2});
        CHECK(c.workers == 0);
        CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), Error);
    }

    TEST_CASE("unknown and malformed keys are named") {
        json j = to_json(default_config());
        j["scheme"]["dtt"] = 0.1;
        std::string path;
        CHECK(config_error(j, &path) == ErrorCode::ConfigError);
        CHECK(path == "scheme.dtt");
        json k = to_json(default_config());
        k["model"]["n1"]["family"] = "gamma";
        CHECK(config_error(k, &path) == ErrorCode::ConfigError);
        CHECK(path == "model.n1.family");
        json w = to_json(default_config());
        w["workers"] = -2;
        CHECK(config_error(w) == ErrorCode::ConfigError);
    }
}

TEST_SUITE("cli") {
    TEST_CASE("exit codes") {
        CHECK(cli::exit_code_for(ErrorCode::InvalidParams) == 2);
        CHECK(cli::exit_code_for(ErrorCode::ConfigError) == 2);
        CHECK(cli::exit_code_for(ErrorCode::InvalidCertificate) == 3);
        CHECK(cli::exit_code_for(ErrorCode::QuadratureFail) == 4);
        CHECK(cli::exit_code_for(ErrorCode::InsufficientPaths) == 1);

        const fs::path d = scratch_dir();
        CHECK(run_cli({"simulate", "--set", "model.b1=-1", "--out", (d / "bad").string()}) == 2);
        CHECK(run_cli({"simulate", "--set", "model.nonsense=1", "--out", (d / "bad").string()}) == 2);
        CHECK(run_cli({"simulate", "--config", (d / "missing.json").string(), "--out", (d / "bad").string()}) == 2);
    }

    TEST_CASE("drift-check on the reference model") {
        const fs::path d = scratch_dir();
        CHECK(run_cli({"drift-check", "--out", (d / "drift").string()}) == 0);
        const json j = read_json(d / "drift.json");
        CHECK(j["schema"] == 1);
        CHECK(j["valid"] == true);
        CHECK(j["function"] == "f");
        CHECK(j.contains("config"));
        CHECK(fs::exists(d / "drift.csv"));
    }

    TEST_CASE("cir-check table") {
        const fs::path d = scratch_dir();
        CHECK(run_cli({"cir-check", "--out", (d / "cir").string()}) == 0);
        const json j = read_json(d / "cir.json");
        CHECK(j["strictly_increasing"] == true);
        double prev = 0;
        for (const auto& row : j["table"]) {
            const double v = row["mean_hitting_time"];
            CHECK(v > prev);
            prev = v;
        }
        std::ifstream csv(d / "cir.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == cli::csv_header("cir-check"));
    }

    TEST_CASE("results do not depend on the worker count") {
        ExperimentConfig c = default_config();
        c.experiment = "coupling-tail";
        c.inits = {{0, 5, 0, 5}, {2, 1, 3, 0}};
        c.n_paths = 40;
        c.scheme.horizon = 2.0;
        c.scheme.dt = 5e-3;
        c.t_grid = {0, 0.5, 1, 1.5, 2};
        c.workers = 1;
        auto a = cli::run_experiment(c);
        c.workers = 3;
        auto b = cli::run_experiment(c);
        a.summary.erase("timestamp");
        b.summary.erase("timestamp");
        CHECK(a.summary.dump() == b.summary.dump());
        CHECK(a.csv == b.csv);
        CHECK(!a.summary.contains("workers"));
    }

    TEST_CASE("every experiment has a fixed csv header") {
        for (const auto& e : cli::experiment_names()) CHECK(std::string(cli::csv_header(e)).find(',') != std::string::npos);
        CHECK(cli::experiment_names().size() == 8);
    }
}
