#include "nl2l/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "nl2l/errors.hpp"

namespace nl2l {

QTable value_iteration(const Mdp& mdp, double tol) {
    if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) {
        throw ContractViolation("value_iteration: infinite-horizon mode needs gamma < 1");
    }
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    QTable table;
    table.gamma = mdp.gamma;
    table.q = Eigen::MatrixXd::Zero(S, A);

    Eigen::MatrixXd expected_r(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) expected_r(s, a) = mdp.expected_reward(s, a);

    // gamma == 0 converges in a single sweep; avoid dividing by it.
    const double stop = mdp.gamma > 0.0 ? tol * (1.0 - mdp.gamma) / mdp.gamma : tol;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    for (int sweep = 0; sweep < 100000; ++sweep) {
        Eigen::MatrixXd next(S, A);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double backup = 0.0;
                for (int s2 = 0; s2 < S; ++s2) backup += mdp.prob(s, a, s2) * v(s2);
                next(s, a) = expected_r(s, a) + mdp.gamma * backup;
            }
        }
        const double delta = (next - table.q).cwiseAbs().maxCoeff();
        table.q = std::move(next);
        table.sweep_deltas.push_back(delta);
        v = table.q.rowwise().maxCoeff();
        if (delta < stop) break;
    }
    return table;
}

std::vector<int> greedy_policy(const Eigen::MatrixXd& q) {
    std::vector<int> policy(q.rows(), 0);
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        int best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best)) best = static_cast<int>(a);
        }
        policy[s] = best;
    }
    return policy;
}

std::vector<int> greedy_policy(const QTable& table) {
    return greedy_policy(table.q);
}

Eigen::MatrixXd uniform_policy(int n_states, int n_actions) {
    return Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
}

Eigen::MatrixXd deterministic_policy(const std::vector<int>& actions, int n_actions) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) pi(s, actions[s]) = 1.0;
    return pi;
}

std::vector<double> policy_return_curve(const Mdp& mdp, const Eigen::MatrixXd& policy, int horizon, double gamma) {
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(S);
    dist(0) = 1.0;
    std::vector<double> curve;
    curve.reserve(std::max(horizon, 0));
    double total = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
        double step_reward = 0.0;
        for (int s = 0; s < S; ++s) {
            if (dist(s) == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const double mass = dist(s) * policy(s, a);
                if (mass == 0.0) continue;
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = mdp.prob(s, a, s2);
                    step_reward += mass * p * mdp.reward(s, a, s2);
                    next(s2) += mass * p;
                }
            }
        }
        total += discount * step_reward;
        discount *= gamma;
        dist = std::move(next);
        curve.push_back(total);
    }
    return curve;
}

double policy_return(const Mdp& mdp, const Eigen::MatrixXd& policy, int horizon, double gamma) {
    const auto curve = policy_return_curve(mdp, policy, horizon, gamma);
    return curve.empty() ? 0.0 : curve.back();
}

// ---------------------------------------------------------------------------
// Gittins indices

GittinsTable::GittinsTable(int horizon, double discount, int depth, std::vector<double> values)
    : horizon_(horizon), discount_(discount), depth_(depth), values_(std::move(values)) {}

bool GittinsTable::covers(int a, int b) const {
    return a >= 1 && b >= 1 && a + b <= horizon_ + 2;
}

std::size_t GittinsTable::slot(int a, int b) const {
    const int n = horizon_ + 2;
    return static_cast<std::size_t>(a - 1) * n + (b - 1);
}

double GittinsTable::index(int a, int b) const {
    if (!covers(a, b)) {
        throw ContractViolation("GittinsTable::index: posterior (" + std::to_string(a) + ", " + std::to_string(b) +
                                ") outside the table");
    }
    return values_[slot(a, b)];
}

namespace {

/// Value of the "play or retire on payoff lambda" stopping problem at the
/// root posterior (a, b), minus the value of retiring immediately.
double play_advantage(int a, int b, double lambda, double discount, int depth, std::vector<double>& buffer) {
    const double retire = lambda / (1.0 - discount);
    // buffer[i] holds the value at i successes among `n` further pulls.
    buffer.assign(depth + 1, 0.0);
    for (int i = 0; i <= depth; ++i) {
        const double mean = static_cast<double>(a + i) / (a + b + depth);
        buffer[i] = std::max(retire, mean / (1.0 - discount));
    }
    for (int n = depth - 1; n >= 0; --n) {
        for (int i = 0; i <= n; ++i) {
            const double mean = static_cast<double>(a + i) / (a + b + n);
            const double cont = mean + discount * (mean * buffer[i + 1] + (1.0 - mean) * buffer[i]);
            buffer[i] = n == 0 ? cont : std::max(retire, cont);
        }
    }
    return buffer[0] - retire;
}

} // namespace

double gittins_index(int a, int b, double discount, int depth, double tol) {
    if (a < 1 || b < 1) throw ContractViolation("gittins_index: posterior counts start at 1");
    if (!(discount > 0.0 && discount < 1.0)) throw ContractViolation("gittins_index: discount must lie in (0, 1)");
    if (depth < 1) throw ContractViolation("gittins_index: depth must be >= 1");
    std::vector<double> buffer;
    // The index is never below the posterior mean and never above 1.
    double lo = static_cast<double>(a) / (a + b);
    double hi = 1.0;
    while (hi - lo > tol * 0.1) {
        const double mid = 0.5 * (lo + hi);
        if (play_advantage(a, b, mid, discount, depth, buffer) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

GittinsTable gittins_table(int horizon, double discount, int depth) {
    if (horizon < 1) throw ContractViolation("gittins_table: horizon must be >= 1");
    if (!(discount > 0.0 && discount < 1.0)) throw ContractViolation("gittins_table: discount must lie in (0, 1)");
    const int n = horizon + 2;
    std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
    for (int a = 1; a < n; ++a) {
        for (int b = 1; a + b <= n; ++b) {
            values[static_cast<std::size_t>(a - 1) * n + (b - 1)] = gittins_index(a, b, discount, depth);
        }
    }
    return GittinsTable(horizon, discount, depth, std::move(values));
}

Trajectory gittins_policy_run(const Mab& mab, int horizon, const GittinsTable& table, Rng& rng) {
    std::array<int, 2> succ{1, 1};
    std::array<int, 2> fail{1, 1};
    Trajectory traj;
    traj.horizon = horizon;
    traj.steps.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
        const double i0 = table.index(succ[0], fail[0]);
        const double i1 = table.index(succ[1], fail[1]);
        const int arm = i1 > i0 ? 1 : 0;
        const double r = mab_pull(mab, arm, rng);
        (r > 0.0 ? succ : fail)[arm] += 1;
        traj.steps.push_back({t, 0, arm, r, 0, SelectionCase::SingleSpike});
        traj.raw_return += r;
    }
    return traj;
}

namespace {

template <typename ChooseAction>
Trajectory rollout(const Task& task, int horizon, Rng& rng, ChooseAction choose) {
    Trajectory traj;
    traj.horizon = horizon;
    traj.steps.reserve(horizon);
    const double gamma = task_gamma(task);
    double discount = 1.0;
    int s = 0;
    for (int t = 0; t < horizon; ++t) {
        const int a = choose(s);
        const auto [s2, r] = task_step(task, s, a, rng);
        traj.steps.push_back({t, s, a, r, s2, SelectionCase::SingleSpike});
        traj.raw_return += discount * r;
        discount *= gamma;
        s = s2;
    }
    return traj;
}

} // namespace

Trajectory random_policy_run(const Task& task, int horizon, Rng& rng) {
    const int A = task_actions(task);
    return rollout(task, horizon, rng, [&](int) { return uniform_index(rng, A); });
}

Trajectory optimal_policy_run(const Task& task, int horizon, Rng& rng) {
    if (const auto* mab = std::get_if<Mab>(&task)) {
        const int best = mab->p_arm[1] > mab->p_arm[0] ? 1 : 0;
        return rollout(task, horizon, rng, [&](int) { return best; });
    }
    const auto policy = greedy_policy(value_iteration(std::get<Mdp>(task)));
    return rollout(task, horizon, rng, [&](int s) { return policy[s]; });
}

} // namespace nl2l
