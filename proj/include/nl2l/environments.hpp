#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nl2l/rng.hpp"

namespace nl2l {

/// Finite MDP with dense transition and reward tensors indexed [s][a][s'].
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> p;
    std::vector<double> r;
    double gamma = 0.9;

    std::size_t index(int s, int a, int s_next) const {
        return (static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next;
    }
    double prob(int s, int a, int s_next) const { return p[index(s, a, s_next)]; }
    double reward(int s, int a, int s_next) const { return r[index(s, a, s_next)]; }
    std::span<const double> prob_row(int s, int a) const {
        return {p.data() + index(s, a, 0), static_cast<std::size_t>(n_states)};
    }
    /// Expected immediate reward of taking `a` in `s`.
    double expected_reward(int s, int a) const;
};

enum class MabFamily { Unstructured, Structured };

/// Two-armed Bernoulli bandit.
struct Mab {
    std::array<double, 2> p_arm{0.5, 0.5};
    MabFamily family = MabFamily::Unstructured;

    static constexpr int n_arms = 2;
};

enum class SelectionCase { Timeout, MultiSpike, SingleSpike };

const char* to_string(SelectionCase c);

struct Step {
    int t = 0;
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    SelectionCase selection = SelectionCase::Timeout;
};

struct Trajectory {
    std::vector<Step> steps;
    double raw_return = 0.0;
    int horizon = 0;

    std::vector<double> rewards() const;
};

Mdp sample_mdp(int n_states, int n_actions, double gamma, Rng& rng);
std::pair<int, double> mdp_step(const Mdp& mdp, int s, int a, Rng& rng);

Mab sample_mab(MabFamily family, Rng& rng);
double mab_pull(const Mab& mab, int arm, Rng& rng);

/// Sum over t of gamma^t r(t).
double discounted_return(std::span<const double> rewards, double gamma);
double discounted_return(const Trajectory& trajectory, double gamma);

/// Affine map sending random_ref to 0 and optimal_ref to 1.
/// Throws NotNormalizable when the references coincide.
double normalized_score(double raw, double random_ref, double optimal_ref);

// ---------------------------------------------------------------------------
// Task families and seeded task instances.

/// Serializable description of a task family, e.g.
/// {"family":"mdp","n_states":2,"n_actions":4,"gamma":0.9} or
/// {"family":"mab","structured":true}.
struct TaskFamily {
    enum class Kind { Mdp, Mab };
    Kind kind = Kind::Mab;
    int n_states = 1;
    int n_actions = 2;
    double gamma = 1.0;
    MabFamily mab_family = MabFamily::Structured;

    static TaskFamily mdp(int n_states, int n_actions, double gamma = 0.9);
    static TaskFamily mab(bool structured);
    static TaskFamily from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool is_mab() const { return kind == Kind::Mab; }
    int states() const { return is_mab() ? 1 : n_states; }
    int actions() const { return is_mab() ? Mab::n_arms : n_actions; }
    /// Discount used when scoring returns; MAB returns are plain sums.
    double scoring_gamma() const { return is_mab() ? 1.0 : gamma; }
    std::string label() const;
};

using Task = std::variant<Mdp, Mab>;

int task_states(const Task& task);
int task_actions(const Task& task);
double task_gamma(const Task& task);

/// Environment transition for either task type. Bandits always stay in state 0.
std::pair<int, double> task_step(const Task& task, int s, int a, Rng& rng);

/// Expected scoring returns of the random policy and the optimal policy
/// (value iteration for MDPs, the oracle arm for bandits) over T steps.
struct References {
    double random = 0.0;
    double optimal = 0.0;

    bool degenerate() const;
    double normalize(double raw) const { return normalized_score(raw, random, optimal); }
};

struct TaskInstance {
    Task task;
    References refs;
    std::uint64_t seed = 0;
};

/// Regenerates the task identified by (family, seed). Tasks whose references
/// coincide are resampled from a derived seed until they can be normalized.
TaskInstance make_task(const TaskFamily& family, std::uint64_t task_seed, int horizon);

References compute_references(const Task& task, int horizon);

/// References of the first t + 1 steps, for t = 0 .. horizon - 1.
std::vector<References> reference_curve(const Task& task, int horizon);

} // namespace nl2l
