#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "nl2l/agent.hpp"
#include "nl2l/optimizers.hpp"
#include "nl2l/rng.hpp"
#include "nl2l/stats.hpp"

namespace nl2l {

/// Outcome of one inner-loop learning trial.
struct TaskScore {
    std::uint64_t seed = 0;
    double raw = 0.0;
    double random_ref = 0.0;
    double optimal_ref = 0.0;
    double fitness = 0.0;

    double normalized() const;
};

struct BatchResult {
    std::vector<TaskScore> tasks;

    double mean_fitness() const;
    double mean_raw() const;
    /// (sum raw - sum random) / (sum optimal - sum random) over the batch.
    double normalized_score() const;
    /// Mean of the per-task normalized scores.
    double mean_task_normalized() const;
};

/// Normalized score of a subset of tasks, given by index.
double aggregate_normalized(const std::vector<TaskScore>& tasks, const std::vector<int>& idx);

/// Paired difference a - b of aggregate normalized scores with a percentile
/// bootstrap interval over tasks. Both batches must hold the same tasks.
struct PairedComparison {
    double score_a = 0.0;
    double score_b = 0.0;
    double difference = 0.0;
    Interval ci;
};

PairedComparison compare_paired(const BatchResult& a, const BatchResult& b, int resamples, std::uint64_t seed);

/// Runs one learning trial of `agent` on the task (family, task_seed).
/// The agent's random stream is derived from the task seed alone, so every
/// candidate sees the same environment outcomes on the same task.
TaskScore run_task(const Experiment& experiment, const AgentSetup& agent, std::uint64_t task_seed,
                   const StepObserver& observer = {});

/// Seeds of a task batch drawn from the given stream.
std::vector<std::uint64_t> batch_seeds(Stream stream, std::uint64_t master_seed, int n,
                                       std::uint64_t tag = 0);

BatchResult evaluate_batch(const Experiment& experiment, const AgentSetup& agent,
                           const std::vector<std::uint64_t>& seeds, int workers);

/// Evaluates one encoded candidate per agent on a batch each, flattening the
/// candidate x task grid over the worker pool.
std::vector<BatchResult> evaluate_candidates(const Experiment& experiment, const std::vector<AgentSetup>& agents,
                                             const std::vector<std::vector<std::uint64_t>>& seeds, int workers);

struct FitnessRecord {
    int generation = 0;
    int candidate_id = 0;
    Eigen::VectorXd theta;
    std::vector<double> per_task_scores;
    double mean_fitness = 0.0;
};

/// Fitness of an encoded candidate on N tasks whose seeds hash
/// (master_seed, generation, candidate_id, task index).
FitnessRecord evaluate_fitness(const Experiment& experiment, const Eigen::VectorXd& theta, int n_tasks,
                               std::uint64_t master_seed, int generation, int candidate_id, int workers = 1);

struct L2LConfig {
    Experiment experiment;
    OptimizerConfig optimizer;
    int generations = 40;
    /// Tasks per fitness evaluation.
    int n_tasks = 50;
    /// Tasks used to choose the best of the final candidates.
    int n_select = 200;
    /// Held-out tasks for the reported score.
    int n_eval = 1000;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

struct L2LResult {
    Eigen::VectorXd best_theta;
    std::vector<FitnessRecord> history;
    /// Final candidates and their selection-batch fitness.
    std::vector<Eigen::VectorXd> finalists;
    std::vector<double> finalist_fitness;
    BatchResult held_out;
};

/// Called once per generation with that generation's records.
using GenerationHook = std::function<void(const std::vector<FitnessRecord>&)>;

L2LResult run_l2l(const L2LConfig& config, const GenerationHook& on_generation = {});

/// Held-out evaluation batch shared by every agent evaluated under the same
/// master seed.
std::vector<std::uint64_t> held_out_seeds(std::uint64_t master_seed, int n);

/// Random-hyperparameter reference: task i of the batch is played with its
/// own random draw from the search space.
BatchResult random_theta_baseline(const Experiment& experiment, const std::vector<std::uint64_t>& seeds,
                                  std::uint64_t draw_seed, int workers);

} // namespace nl2l
