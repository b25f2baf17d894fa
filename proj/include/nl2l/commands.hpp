#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nl2l/agent.hpp"
#include "nl2l/l2l.hpp"
#include "nl2l/optimizers.hpp"

namespace nl2l {

/// Line-oriented progress sink; empty means silent.
using LogSink = std::function<void(const std::string&)>;

struct CompareSettings {
    std::vector<OptimizerConfig> optimizers;
    /// Fitness evaluations granted to each optimizer.
    int budget = 0;
    std::vector<std::uint64_t> seeds;
};

struct CurveSettings {
    int n_eval = 0;
    std::vector<std::string> policies{"agent", "random_theta", "random", "oracle"};
};

struct AnalysisSettings {
    int n_samples = 4000;
    int n_inner = 64;
    int grid_size = 21;
    int n_marginal = 2000;
    /// "idealized" or "trajectory".
    std::string inputs = "idealized";
    int trajectory_tasks = 50;
};

/// Everything one config file describes. Required fields: family, rule,
/// horizon. Unknown fields are rejected.
struct ExperimentConfig {
    Experiment experiment;
    OptimizerConfig optimizer;
    int generations = 40;
    int n_tasks = 50;
    int n_select = 200;
    int n_eval = 1000;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    double gittins_discount = 0.9;
    int gittins_depth = 200;
    std::optional<CompareSettings> compare;
    CurveSettings curves;
    AnalysisSettings analysis;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    /// Effective configuration; parsing it again yields the same config.
    nlohmann::json to_json() const;
    /// FNV-1a over the canonical dump of to_json(), as 16 hex digits.
    std::string hash() const;
    L2LConfig l2l(int workers) const;
};

/// Seed precedence: explicit override, then NEURO_L2L_SEED, then the config.
std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, std::uint64_t config_seed);

struct RunOptions {
    int workers = 1;
    bool bench = false;
    LogSink log;
};

/// Optimized agent as persisted in best_theta.json.
struct ThetaArtifact {
    RuleDescriptor rule;
    EmulatorConfig emulator;
    nlohmann::json config;
    Eigen::VectorXd encoded;

    static ThetaArtifact load(const std::string& path);
    AgentSetup agent() const;
};

/// Writes config.json, history.csv, best_theta.json and eval_report.csv.
void cmd_run_l2l(const ExperimentConfig& config, const std::string& out_dir, const RunOptions& options);

/// Held-out evaluation of an artifact (or of the configured agent when
/// theta_path is empty); optional per-step trajectory dump of the first task.
void cmd_eval_agent(const ExperimentConfig& config, const std::string& theta_path, const std::string& out_csv,
                    const std::string& trajectory_csv, int n_tasks, const RunOptions& options);

/// Random, oracle and Gittins (bandits) policy returns per task.
void cmd_baselines(const ExperimentConfig& config, const std::string& out_csv, int n_tasks,
                   const RunOptions& options);

/// Every listed optimizer on every listed seed with the same evaluation budget.
void cmd_compare_optimizers(const ExperimentConfig& config, const std::string& out_csv, const std::string& svg_path,
                            const RunOptions& options);

/// Per-step running normalized score of each configured policy.
void cmd_learning_curves(const ExperimentConfig& config, const std::string& theta_path, const std::string& out_csv,
                         const RunOptions& options);

/// importance.csv and curves_case_{00,01,10,11}.csv for an ANN artifact.
void cmd_analyze(const std::string& theta_path, const std::string& out_dir, const AnalysisSettings& settings,
                 std::uint64_t seed, bool svg, const RunOptions& options);

/// Paired comparison of two artifacts on fresh tasks of the config's family.
void cmd_transfer(const ExperimentConfig& config, const std::string& theta_a, const std::string& theta_b,
                  const std::string& out_csv, int n_tasks, const RunOptions& options);

/// Generations that spend exactly `budget` evaluations; throws ConfigError
/// when the budget is not a whole number of generations.
int generations_for_budget(const OptimizerConfig& optimizer, int dim, int budget);

} // namespace nl2l
