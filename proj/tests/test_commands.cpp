#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nl2l/commands.hpp"
#include "nl2l/errors.hpp"

using namespace nl2l;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json tiny_config() {
    return json{{"family", {{"family", "mab"}, {"structured", true}}},
                {"rule", {{"rule", "td1"}}},
                {"horizon", 20},
                {"optimizer", {{"name", "ce"}, {"pop", 8}}},
                {"generations", 2},
                {"n_tasks", 4},
                {"n_select", 6},
                {"n_eval", 10},
                {"master_seed", 5}};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("nl2l_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const json& j) {
    try {
        ExperimentConfig::from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("config: required fields are named") {
    for (const char* key : {"family", "rule", "horizon"}) {
        auto j = tiny_config();
        j.erase(key);
        const auto msg = config_error(j);
        CHECK(msg.find(key) != std::string::npos);
    }
    auto j = tiny_config();
    j["generatoins"] = 3;
    CHECK(config_error(j).find("generatoins") != std::string::npos);
    j = tiny_config();
    j["horizon"] = 0;
    CHECK(config_error(j).find("horizon") != std::string::npos);
}

TEST_CASE("config: round trip and stable hash") {
    const auto c = ExperimentConfig::from_json(tiny_config());
    const auto again = ExperimentConfig::from_json(c.to_json());
    CHECK(c.hash() == again.hash());
    CHECK(c.hash().size() == 16);
    auto other = tiny_config();
    other["master_seed"] = 6;
    CHECK(ExperimentConfig::from_json(other).hash() != c.hash());
    CHECK(c.l2l(2).workers == 2);
    CHECK(c.l2l(1).n_tasks == 4);
}

TEST_CASE("config: compare budgets must divide evenly") {
    auto j = tiny_config();
    j["compare"] = {{"budget", 32}, {"optimizers", {{{"name", "ce"}, {"pop", 8}}, {{"name", "gd"}}}}};
    const auto c = ExperimentConfig::from_json(j);
    REQUIRE(c.compare);
    CHECK(c.compare->optimizers.size() == 2);
    j["compare"]["budget"] = 12;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    j["compare"]["budget"] = 32;
    j["compare"]["optimizers"][0]["generations"] = 3;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    CHECK(generations_for_budget(OptimizerConfig{}, 4, 64) == 2);
    CHECK_THROWS_AS(generations_for_budget(OptimizerConfig{}, 4, 40), ConfigError);
}

TEST_CASE("seed precedence: flag, environment, config") {
    ::unsetenv("NEURO_L2L_SEED");
    CHECK(resolve_seed(std::nullopt, 7) == 7);
    ::setenv("NEURO_L2L_SEED", "19", 1);
    CHECK(resolve_seed(std::nullopt, 7) == 19);
    CHECK(resolve_seed(3, 7) == 3);
    ::unsetenv("NEURO_L2L_SEED");
}

TEST_CASE("run-l2l writes artifacts and reproduces them byte for byte") {
    const auto c = ExperimentConfig::from_json(tiny_config());
    const auto a = scratch("run_a"), b = scratch("run_b");
    cmd_run_l2l(c, a.string(), RunOptions{1, false, {}});
    cmd_run_l2l(c, b.string(), RunOptions{3, false, {}});
    for (const char* f : {"history.csv", "eval_report.csv", "best_theta.json", "config.json"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto history = slurp(a / "history.csv");
    CHECK(history.rfind("config_hash,generation,candidate,mean_fitness,alpha0,alpha_decay,xi,zeta\r\n", 0) == 0);
    CHECK(history.find(c.hash()) != std::string::npos);

    const auto art = ThetaArtifact::load((a / "best_theta.json").string());
    CHECK(art.encoded.size() == 4);
    const auto reloaded = ExperimentConfig::from_json(art.config);
    CHECK(reloaded.hash() == c.hash());
}

TEST_CASE("run-l2l with zero generations still evaluates") {
    auto j = tiny_config();
    j["generations"] = 0;
    const auto dir = scratch("run_zero");
    cmd_run_l2l(ExperimentConfig::from_json(j), dir.string(), RunOptions{});
    CHECK(fs::exists(dir / "eval_report.csv"));
    CHECK(fs::exists(dir / "best_theta.json"));
}

TEST_CASE("compare-optimizers: duplicates match and budget 0 reports the start") {
    auto j = tiny_config();
    j["compare"] = {{"budget", 16},
                    {"seeds", {1}},
                    {"optimizers", {{{"name", "ce"}, {"pop", 8}}, {{"name", "ce"}, {"pop", 8}}}}};
    const auto dir = scratch("compare");
    cmd_compare_optimizers(ExperimentConfig::from_json(j), (dir / "c.csv").string(), "", RunOptions{});
    std::istringstream rows(slurp(dir / "c.csv"));
    std::string header, r1, r2;
    std::getline(rows, header);
    std::getline(rows, r1);
    std::getline(rows, r2);
    // Slot index differs, everything after the optimizer name matches.
    CHECK(r1.substr(r1.find(",ce,")) == r2.substr(r2.find(",ce,")));

    j["compare"] = {{"budget", 0},
                    {"seeds", {1}},
                    {"optimizers", {{{"name", "ce"}, {"pop", 8}}, {{"name", "es"}, {"pop", 8}}, {{"name", "gd"}}}}};
    cmd_compare_optimizers(ExperimentConfig::from_json(j), (dir / "z.csv").string(), (dir / "z.svg").string(),
                           RunOptions{});
    std::istringstream zero(slurp(dir / "z.csv"));
    std::getline(zero, header);
    std::vector<std::string> fitness;
    for (std::string line; std::getline(zero, line);) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        fitness.push_back(cells.at(6));
    }
    REQUIRE(fitness.size() == 3);
    CHECK(fitness[0] == fitness[1]);
    CHECK(fitness[1] == fitness[2]);
    CHECK(slurp(dir / "z.svg").find("<svg") != std::string::npos);
}

TEST_CASE("learning curves: oracle pinned at one, single step horizon") {
    auto j = tiny_config();
    j["curves"] = {{"n_eval", 300}, {"policies", {"oracle", "random"}}};
    const auto dir = scratch("curves");
    cmd_learning_curves(ExperimentConfig::from_json(j), "", (dir / "lc.csv").string(), RunOptions{});
    std::istringstream in(slurp(dir / "lc.csv"));
    std::string line;
    std::getline(in, line);
    int oracle_rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (cells[1] != "oracle") continue;
        ++oracle_rows;
        const double score = std::stod(cells[3]), err = std::stod(cells[4]);
        CHECK(std::abs(score - 1.0) <= 3.0 * err + 1e-9);
    }
    CHECK(oracle_rows == 20);

    j["horizon"] = 1;
    cmd_learning_curves(ExperimentConfig::from_json(j), "", (dir / "one.csv").string(), RunOptions{});
    std::istringstream one(slurp(dir / "one.csv"));
    int rows = 0;
    for (std::string l; std::getline(one, l);) ++rows;
    CHECK(rows == 1 + 2);

    j["curves"]["policies"] = {"agent"};
    CHECK_THROWS_AS(cmd_learning_curves(ExperimentConfig::from_json(j), "", (dir / "x.csv").string(), RunOptions{}),
                    ConfigError);
}

TEST_CASE("baselines, eval-agent, transfer and analyze produce their files") {
    const auto dir = scratch("misc");
    const auto c = ExperimentConfig::from_json(tiny_config());
    cmd_run_l2l(c, (dir / "run").string(), RunOptions{});
    const auto theta = (dir / "run" / "best_theta.json").string();
    cmd_baselines(c, (dir / "b.csv").string(), 5, RunOptions{});
    CHECK(slurp(dir / "b.csv").find("gittins") != std::string::npos);
    cmd_eval_agent(c, theta, (dir / "e.csv").string(), (dir / "traj.csv").string(), 5, RunOptions{});
    CHECK(slurp(dir / "traj.csv").rfind("config_hash,t,state,action,case,reward,w_00,w_01\r\n", 0) == 0);
    cmd_transfer(c, theta, theta, (dir / "t.csv").string(), 20, RunOptions{});
    CHECK(fs::exists(dir / "t.csv"));

    auto ann = tiny_config();
    ann["rule"] = {{"rule", "ann"}, {"out_scale", 60}, {"output", "tanh"}};
    ann["generations"] = 1;
    ann["optimizer"]["ce_diagonal"] = true;
    const auto ac = ExperimentConfig::from_json(ann);
    cmd_run_l2l(ac, (dir / "ann").string(), RunOptions{});
    AnalysisSettings s;
    s.n_samples = 1000;
    s.n_inner = 8;
    s.n_marginal = 50;
    cmd_analyze((dir / "ann" / "best_theta.json").string(), (dir / "an").string(), s, 1, true, RunOptions{});
    for (const char* f : {"importance.csv", "curves_case_00.csv", "curves_case_01.csv", "curves_case_10.csv",
                          "curves_case_11.csv", "curves.svg", "importance.svg"}) {
        CHECK(fs::exists(dir / "an" / f));
    }
    CHECK_THROWS_AS(cmd_analyze(theta, (dir / "an2").string(), s, 1, false, RunOptions{}), ConfigError);
}
