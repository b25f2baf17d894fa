#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nl2l/hyperparams.hpp"
#include "nl2l/rng.hpp"

namespace nl2l {

/// Fitness of a batch of encoded candidates, larger is better.
using BatchFitness = std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>;

enum class OptimizerKind { CrossEntropy, EvolutionStrategies, SimulatedAnnealing, GradientDescent };

const char* to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::CrossEntropy;
    /// CE / ES population.
    int pop = 32;

    double elite_frac = 0.25;
    double ce_eps = 1e-6;
    bool ce_diagonal = false;

    double es_sigma = 0.1;
    double es_learn_rate = 0.05;

    int sa_chains = 8;
    double sa_t0 = 1.0;
    double sa_t_end = 0.01;
    /// Proposal standard deviation at the initial temperature, in encoded units.
    double sa_step = 0.1;

    double gd_probe_eps = 0.01;
    double gd_step = 0.01;
    /// 0 selects central differences along each axis; otherwise the number
    /// of random-direction probe pairs.
    int gd_random_probes = 0;

    static OptimizerConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;

    /// Fitness evaluations consumed by one generation for a space of `dim`.
    int evaluations_per_generation(int dim) const;
};

// ---------------------------------------------------------------------------
// Cross-entropy method

struct CeState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

CeState ce_init(const ParamSpace& space);

/// `pop` candidates from N(mean, cov), clamped into the encoded box.
std::vector<Eigen::VectorXd> ce_sample(const CeState& state, int pop, Rng& rng);

/// Indices of the ceil(elite_frac * n) best candidates, best first. Ties keep
/// the lower index first.
std::vector<int> select_elites(const std::vector<double>& fitness, double elite_frac);

/// Maximum-likelihood Gaussian fit to the elites plus eps * I.
/// Throws ContractViolation with fewer than two elites or when
/// pop < 2 / elite_frac.
CeState ce_step(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& fitness,
                double elite_frac, double eps = 1e-6, bool diagonal = false);

// ---------------------------------------------------------------------------
// Evolution strategies

struct EsState {
    Eigen::VectorXd base;
    double sigma = 0.1;
    double learn_rate = 0.05;
};

/// n standard-normal directions in mirrored pairs (eps, -eps). n must be even.
std::vector<Eigen::VectorXd> es_perturbations(int n, int dim, Rng& rng);

/// Ranks mapped onto [-0.5, 0.5]; tied values share their average rank.
std::vector<double> centered_ranks(const std::vector<double>& fitness);

/// base' = base + learn_rate / (n sigma) * sum_i rank_i eps_i.
EsState es_step(const EsState& state, const std::vector<Eigen::VectorXd>& perturbations,
                const std::vector<double>& fitness);

// ---------------------------------------------------------------------------
// Simulated annealing

struct SaChain {
    Eigen::VectorXd theta;
    double fitness = 0.0;
};

struct SaState {
    std::vector<SaChain> chains;
    double temperature = 1.0;
    double t0 = 1.0;
    double t_end = 0.01;
    double step = 0.1;
    /// Number of annealing steps over which the temperature falls to t_end.
    int schedule_steps = 1;
    int steps_done = 0;
};

/// Probability of moving from fitness f_old to f_new under maximization.
double sa_acceptance(double f_new, double f_old, double temperature);

/// Linear decay from t0 at step 0 to t_end at step schedule_steps.
double sa_temperature(const SaState& state, int step);

/// One proposal per chain, evaluation, Metropolis acceptance, cooling.
SaState sa_step(const SaState& state, Rng& rng, const BatchFitness& eval,
                std::vector<Eigen::VectorXd>* proposals = nullptr, std::vector<double>* fitness = nullptr);

// ---------------------------------------------------------------------------
// Numerical gradient ascent

struct GdState {
    Eigen::VectorXd theta;
    double probe_eps = 0.01;
    double step = 0.01;
    int random_probes = 0;
};

std::vector<Eigen::VectorXd> gd_probe_points(const GdState& state, Rng& rng, std::vector<Eigen::VectorXd>* directions);

/// Gradient estimate from fitness values at the probe points.
Eigen::VectorXd gd_gradient(const GdState& state, const std::vector<Eigen::VectorXd>& directions,
                            const std::vector<double>& fitness);

/// theta' = clamp(theta + step * gradient) into the encoded box.
GdState gd_step(const GdState& state, const BatchFitness& eval, Rng& rng,
                std::vector<Eigen::VectorXd>* probes = nullptr, std::vector<double>* fitness = nullptr);

} // namespace nl2l
