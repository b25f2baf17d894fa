#include "nl2l/environments.hpp"

#include <cmath>
#include <limits>

#include "nl2l/baselines.hpp"
#include "nl2l/errors.hpp"

namespace nl2l {

double Mdp::expected_reward(int s, int a) const {
    double sum = 0.0;
    for (int s2 = 0; s2 < n_states; ++s2) {
        sum += prob(s, a, s2) * reward(s, a, s2);
    }
    return sum;
}

const char* to_string(SelectionCase c) {
    switch (c) {
    case SelectionCase::Timeout: return "timeout";
    case SelectionCase::MultiSpike: return "multi_spike";
    case SelectionCase::SingleSpike: return "single_spike";
    }
    return "?";
}

std::vector<double> Trajectory::rewards() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& step : steps) out.push_back(step.reward);
    return out;
}

Mdp sample_mdp(int n_states, int n_actions, double gamma, Rng& rng) {
    if (n_states < 1 || n_actions < 1) {
        throw ContractViolation("sample_mdp: n_states and n_actions must be >= 1");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw ContractViolation("sample_mdp: gamma must lie in [0, 1)");
    }
    Mdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    const std::size_t n = static_cast<std::size_t>(n_states) * n_actions * n_states;
    mdp.p.resize(n);
    mdp.r.resize(n);
    for (auto& x : mdp.p) x = uniform01(rng);
    for (auto& x : mdp.r) x = uniform01(rng);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double total = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) total += mdp.prob(s, a, s2);
            for (int s2 = 0; s2 < n_states; ++s2) {
                auto& x = mdp.p[mdp.index(s, a, s2)];
                // An all-zero draw has probability zero but would divide by zero.
                x = total > 0.0 ? x / total : 1.0 / n_states;
            }
        }
    }
    return mdp;
}

std::pair<int, double> mdp_step(const Mdp& mdp, int s, int a, Rng& rng) {
    if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions) {
        throw ContractViolation("mdp_step: state or action index out of range");
    }
    const double u = uniform01(rng);
    double cum = 0.0;
    int next = mdp.n_states - 1;
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        cum += mdp.prob(s, a, s2);
        if (u < cum) {
            next = s2;
            break;
        }
    }
    // Rounding can leave cum slightly below 1; fall back to the last reachable state.
    if (u >= cum) {
        for (int s2 = mdp.n_states - 1; s2 >= 0; --s2) {
            if (mdp.prob(s, a, s2) > 0.0) {
                next = s2;
                break;
            }
        }
    }
    return {next, mdp.reward(s, a, next)};
}

Mab sample_mab(MabFamily family, Rng& rng) {
    Mab mab;
    mab.family = family;
    mab.p_arm[0] = uniform01(rng);
    mab.p_arm[1] = family == MabFamily::Structured ? 1.0 - mab.p_arm[0] : uniform01(rng);
    return mab;
}

double mab_pull(const Mab& mab, int arm, Rng& rng) {
    if (arm < 0 || arm >= Mab::n_arms) {
        throw ContractViolation("mab_pull: arm index out of range");
    }
    return uniform01(rng) < mab.p_arm[arm] ? 1.0 : 0.0;
}

double discounted_return(std::span<const double> rewards, double gamma) {
    double total = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        total += discount * r;
        discount *= gamma;
    }
    return total;
}

double discounted_return(const Trajectory& trajectory, double gamma) {
    const auto r = trajectory.rewards();
    return discounted_return(r, gamma);
}

double normalized_score(double raw, double random_ref, double optimal_ref) {
    const double span = optimal_ref - random_ref;
    if (std::abs(span) <= 1e-12) {
        throw NotNormalizable("normalized_score: optimal and random references coincide");
    }
    return (raw - random_ref) / span;
}

// ---------------------------------------------------------------------------

TaskFamily TaskFamily::mdp(int n_states, int n_actions, double gamma) {
    TaskFamily f;
    f.kind = Kind::Mdp;
    f.n_states = n_states;
    f.n_actions = n_actions;
    f.gamma = gamma;
    return f;
}

TaskFamily TaskFamily::mab(bool structured) {
    TaskFamily f;
    f.kind = Kind::Mab;
    f.n_states = 1;
    f.n_actions = Mab::n_arms;
    f.gamma = 1.0;
    f.mab_family = structured ? MabFamily::Structured : MabFamily::Unstructured;
    return f;
}

TaskFamily TaskFamily::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("family")) {
        throw ConfigError("family: missing required field 'family'");
    }
    const auto kind = j.at("family").get<std::string>();
    if (kind == "mab") {
        return mab(j.value("structured", false));
    }
    if (kind == "mdp") {
        for (const char* key : {"n_states", "n_actions"}) {
            if (!j.contains(key)) throw ConfigError(std::string("family: missing required field '") + key + "'");
        }
        auto f = mdp(j.at("n_states").get<int>(), j.at("n_actions").get<int>(), j.value("gamma", 0.9));
        if (f.n_states < 1 || f.n_actions < 1) throw ConfigError("family: n_states and n_actions must be >= 1");
        if (!(f.gamma >= 0.0 && f.gamma < 1.0)) throw ConfigError("family: gamma must lie in [0, 1)");
        return f;
    }
    throw ConfigError("family: unknown family '" + kind + "' (expected 'mdp' or 'mab')");
}

nlohmann::json TaskFamily::to_json() const {
    if (is_mab()) {
        return {{"family", "mab"}, {"structured", mab_family == MabFamily::Structured}};
    }
    return {{"family", "mdp"}, {"n_states", n_states}, {"n_actions", n_actions}, {"gamma", gamma}};
}

std::string TaskFamily::label() const {
    if (is_mab()) return mab_family == MabFamily::Structured ? "mab_structured" : "mab_unstructured";
    return "mdp_" + std::to_string(n_states) + "x" + std::to_string(n_actions);
}

int task_states(const Task& task) {
    return std::holds_alternative<Mdp>(task) ? std::get<Mdp>(task).n_states : 1;
}

int task_actions(const Task& task) {
    return std::holds_alternative<Mdp>(task) ? std::get<Mdp>(task).n_actions : Mab::n_arms;
}

double task_gamma(const Task& task) {
    return std::holds_alternative<Mdp>(task) ? std::get<Mdp>(task).gamma : 1.0;
}

std::pair<int, double> task_step(const Task& task, int s, int a, Rng& rng) {
    if (const auto* mdp = std::get_if<Mdp>(&task)) {
        return mdp_step(*mdp, s, a, rng);
    }
    if (s != 0) throw ContractViolation("task_step: bandits have a single state");
    return {0, mab_pull(std::get<Mab>(task), a, rng)};
}

bool References::degenerate() const {
    return std::abs(optimal - random) <= 1e-12;
}

References compute_references(const Task& task, int horizon) {
    References refs;
    if (const auto* mab = std::get_if<Mab>(&task)) {
        refs.random = horizon * 0.5 * (mab->p_arm[0] + mab->p_arm[1]);
        refs.optimal = horizon * std::max(mab->p_arm[0], mab->p_arm[1]);
        return refs;
    }
    const auto& mdp = std::get<Mdp>(task);
    const auto q = value_iteration(mdp);
    const auto pi_star = deterministic_policy(greedy_policy(q), mdp.n_actions);
    refs.random = policy_return(mdp, uniform_policy(mdp.n_states, mdp.n_actions), horizon, mdp.gamma);
    refs.optimal = policy_return(mdp, pi_star, horizon, mdp.gamma);
    return refs;
}

std::vector<References> reference_curve(const Task& task, int horizon) {
    std::vector<References> curve(std::max(horizon, 0));
    if (const auto* mab = std::get_if<Mab>(&task)) {
        for (int t = 0; t < horizon; ++t) {
            curve[t].random = (t + 1) * 0.5 * (mab->p_arm[0] + mab->p_arm[1]);
            curve[t].optimal = (t + 1) * std::max(mab->p_arm[0], mab->p_arm[1]);
        }
        return curve;
    }
    const auto& mdp = std::get<Mdp>(task);
    const auto pi_star = deterministic_policy(greedy_policy(value_iteration(mdp)), mdp.n_actions);
    const auto rnd = policy_return_curve(mdp, uniform_policy(mdp.n_states, mdp.n_actions), horizon, mdp.gamma);
    const auto opt = policy_return_curve(mdp, pi_star, horizon, mdp.gamma);
    for (int t = 0; t < horizon; ++t) curve[t] = {rnd[t], opt[t]};
    return curve;
}

TaskInstance make_task(const TaskFamily& family, std::uint64_t task_seed, int horizon) {
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const auto seed = attempt == 0 ? task_seed : derive_seed(Stream::Resample, {task_seed, std::uint64_t(attempt)});
        Rng rng(seed);
        TaskInstance inst;
        inst.seed = seed;
        if (family.is_mab()) {
            inst.task = sample_mab(family.mab_family, rng);
        } else {
            inst.task = sample_mdp(family.n_states, family.n_actions, family.gamma, rng);
        }
        inst.refs = compute_references(inst.task, std::max(horizon, 1));
        if (!inst.refs.degenerate()) return inst;
    }
    throw NotNormalizable("make_task: could not draw a normalizable task");
}

} // namespace nl2l
