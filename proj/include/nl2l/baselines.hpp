#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nl2l/environments.hpp"
#include "nl2l/rng.hpp"

namespace nl2l {

/// Tabular action values, rows are states and columns are actions.
struct QTable {
    Eigen::MatrixXd q;
    double gamma = 0.9;
    /// Sup-norm change of every sweep, recorded for contraction checks.
    std::vector<double> sweep_deltas;
};

/// Value iteration on the Bellman optimality operator. Sweeps stop once two
/// successive iterates differ by less than tol * (1 - gamma) / gamma.
QTable value_iteration(const Mdp& mdp, double tol = 1e-8);

/// Deterministic greedy policy; ties go to the lowest action index.
std::vector<int> greedy_policy(const Eigen::MatrixXd& q);
std::vector<int> greedy_policy(const QTable& table);

/// Exact expected discounted return of a stochastic policy over `horizon`
/// steps from state 0, by forward propagation of the state distribution.
/// `policy(s, a)` holds pi(a | s).
double policy_return(const Mdp& mdp, const Eigen::MatrixXd& policy, int horizon, double gamma);
/// Expected discounted return accumulated after each of the first `horizon` steps.
std::vector<double> policy_return_curve(const Mdp& mdp, const Eigen::MatrixXd& policy, int horizon, double gamma);

Eigen::MatrixXd uniform_policy(int n_states, int n_actions);
Eigen::MatrixXd deterministic_policy(const std::vector<int>& actions, int n_actions);

/// Gittins indices of a Bernoulli arm with a Beta posterior, for every
/// posterior (a, b) with a, b >= 1 and a + b <= horizon + 2.
class GittinsTable {
public:
    GittinsTable() = default;
    GittinsTable(int horizon, double discount, int depth, std::vector<double> values);

    int horizon() const { return horizon_; }
    double discount() const { return discount_; }
    int depth() const { return depth_; }
    bool covers(int a, int b) const;
    /// Throws ContractViolation when (a, b) lies outside the table.
    double index(int a, int b) const;

private:
    std::size_t slot(int a, int b) const;

    int horizon_ = 0;
    double discount_ = 0.9;
    int depth_ = 0;
    std::vector<double> values_;
};

/// Calibration of a single posterior state: the retirement payoff at which
/// playing on and retiring are equally good, by bisection on the payoff and
/// backward induction over `depth` further pulls.
double gittins_index(int a, int b, double discount, int depth, double tol = 1e-4);

GittinsTable gittins_table(int horizon, double discount = 0.9, int depth = 200);

/// Plays the Gittins policy from a Beta(1, 1) prior on each arm.
Trajectory gittins_policy_run(const Mab& mab, int horizon, const GittinsTable& table, Rng& rng);

/// Uniform random actions.
Trajectory random_policy_run(const Task& task, int horizon, Rng& rng);

/// Always plays the better arm (bandit) or the value-iteration policy (MDP).
Trajectory optimal_policy_run(const Task& task, int horizon, Rng& rng);

} // namespace nl2l
