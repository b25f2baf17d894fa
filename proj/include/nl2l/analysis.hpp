#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nl2l/l2l.hpp"
#include "nl2l/plasticity.hpp"
#include "nl2l/rng.hpp"

namespace nl2l {

/// Any scalar function of the five rule inputs.
using RuleFunction = std::function<double(const AnnInputs&)>;

RuleFunction as_function(const AnnRule& rule);

inline const std::array<const char*, AnnRule::n_inputs> kInputNames{"t", "flag", "reward", "w_self", "w_other"};

/// Independent marginal distribution per rule input.
struct InputMarginals {
    std::array<std::function<double(Rng&)>, AnnRule::n_inputs> draw;

    /// t ~ U[0,1], flag ~ B(0.5), r ~ B(0.5), w_self, w_other ~ U[0,1].
    static InputMarginals idealized();
    /// Each input resampled from its own column of recorded rows.
    static InputMarginals empirical(std::vector<AnnInputs> rows);

    AnnInputs sample(Rng& rng) const;
};

/// Inputs the ANN rule saw while learning on the given tasks (weights
/// normalized to [0, 1] as during learning).
std::vector<AnnInputs> record_ann_inputs(const Experiment& experiment, const AgentSetup& agent,
                                         const std::vector<std::uint64_t>& seeds);

struct ImportanceReport {
    std::array<double, AnnRule::n_inputs> fractions{};
    double residual_interactions = 0.0;
    double total_variance = 0.0;
    int n_samples = 0;
    /// The rule output has no variance; all fractions are reported as 0.
    bool degenerate = false;
};

/// First-order variance fractions by double-loop Monte Carlo: for each input,
/// `n_samples` outer draws pin that input, `n_inner` inner draws average the
/// rest. The inner-average noise is subtracted from the outer variance.
/// Throws ContractViolation for n_samples < 1000.
ImportanceReport input_importance(const RuleFunction& rule, const InputMarginals& marginals, int n_samples,
                                  Rng& rng, int n_inner = 64);

struct UpdateCurve {
    int flag = 0;
    int reward = 0;
    std::vector<double> grid;
    std::vector<double> mean_dw;
    std::vector<double> p10;
    std::vector<double> p90;

    /// Least-squares line through (grid, mean_dw).
    std::pair<double, double> slope_intercept() const;
};

/// Mean update and [p10, p90] band over t and w_other for each (flag, r)
/// case, as w_self sweeps [0, 1]. Curves are ordered (0,0), (0,1), (1,0), (1,1).
std::array<UpdateCurve, 4> update_curves(const RuleFunction& rule, int grid_size, int n_marginal, Rng& rng);

struct TransferReport {
    int n_tasks = 0;
    PairedComparison comparison;
};

/// Evaluates two encoded hyperparameter vectors on the same fresh tasks of
/// `eval_family` and bootstraps the difference of their normalized scores.
TransferReport transfer_report(const Experiment& experiment, const Eigen::VectorXd& theta_a,
                               const Eigen::VectorXd& theta_b, const TaskFamily& eval_family, int n_tasks,
                               std::uint64_t seed, int workers = 1, int resamples = 2000);

} // namespace nl2l
