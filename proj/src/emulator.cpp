#include "nl2l/emulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "nl2l/errors.hpp"

namespace nl2l {

void EmulatorConfig::validate() const {
    if (!(w_min < w_max)) throw ConfigError("emulator: w_min must be below w_max");
    if (rescale_period < 1) throw ConfigError("emulator: rescale_period must be >= 1");
    if (syn_delay < 1) throw ConfigError("emulator: syn_delay must be >= 1");
    if (select_timeout <= syn_delay) throw ConfigError("emulator: select_timeout must exceed syn_delay");
    if (!(tau_m > 0.0)) throw ConfigError("emulator: tau_m must be positive");
    if (!(v_thresh > v_reset)) throw ConfigError("emulator: v_thresh must exceed v_reset");
    if (bits < 1 || bits > 16) throw ConfigError("emulator: bits must lie in [1, 16]");
    if (xi < 0.0 || zeta < 0.0) throw ConfigError("emulator: inhibition strengths must be >= 0");
    if (!(autapse > 0.0)) throw ConfigError("emulator: autapse strength must be positive");
}

void check_capacity(int n_states, int n_actions, PrecisionMode mode) {
    if (mode == PrecisionMode::HardwareFidelity && n_states + n_actions > kCrossbarSize) {
        throw CapacityError("network with " + std::to_string(n_states) + " state and " + std::to_string(n_actions) +
                            " action neurons exceeds the " + std::to_string(kCrossbarSize) + "-neuron crossbar");
    }
}

// ---------------------------------------------------------------------------

WeightMatrix::WeightMatrix(int n_states, int n_actions, PrecisionMode mode, int bits)
    : shadow_(Eigen::MatrixXd::Zero(n_states, n_actions)),
      view_(Eigen::MatrixXd::Zero(n_states, n_actions)),
      mode_(mode),
      bits_(bits) {}

int WeightMatrix::quantize(double w, int bits) {
    const int levels = (1 << bits) - 1;
    const double rounded = std::round(w);
    if (!(rounded > 0.0)) return 0;
    if (rounded >= levels) return levels;
    return static_cast<int>(rounded);
}

void WeightMatrix::requantize() {
    if (mode_ == PrecisionMode::Ideal) {
        view_ = shadow_;
        return;
    }
    view_ = shadow_.unaryExpr([bits = bits_](double w) { return static_cast<double>(quantize(w, bits)); });
}

// ---------------------------------------------------------------------------

SelectionOutcome select_action(const WeightMatrix& weights, const EmulatorConfig& config, int state, Rng& rng) {
    if (state < 0 || state >= weights.n_states()) {
        throw ContractViolation("select_action: state index out of range");
    }
    const int n = weights.n_actions();
    if (n > kCrossbarSize) throw CapacityError("select_action: too many action neurons");

    std::array<double, kCrossbarSize> v{};
    std::array<double, kCrossbarSize> drive{};
    std::array<bool, kCrossbarSize> fired{};
    for (int a = 0; a < n; ++a) drive[a] = weights.effective(state, a);

    // Spike arrivals per tick, as a ring buffer over the synaptic delay.
    // arrivals[k % len] counts spikes per source neuron arriving at tick k.
    const int len = config.syn_delay + 1;
    std::vector<std::array<int, kCrossbarSize>> arrivals(len);
    for (auto& slot : arrivals) slot.fill(0);
    int pending = 0;

    const double leak = std::exp(-1.0 / config.tau_m);
    double state_inhibition = 0.0;
    bool state_firing = true;
    int first_tick = -1;

    SelectionOutcome out;
    for (int k = 0; k < config.select_timeout; ++k) {
        auto& now = arrivals[k % len];
        int arrived = 0;
        for (int src = 0; src < n; ++src) arrived += now[src];
        if (arrived > 0) {
            for (int j = 0; j < n; ++j) {
                const int from_others = arrived - now[j];
                v[j] -= config.xi * from_others;
            }
            state_inhibition += config.zeta * arrived;
            pending -= arrived;
            now.fill(0);
            if (state_inhibition >= config.autapse) state_firing = false;
        }

        for (int a = 0; a < n; ++a) {
            v[a] = v[a] * leak + (state_firing ? drive[a] : 0.0);
        }
        for (int a = 0; a < n; ++a) {
            if (v[a] >= config.v_thresh) {
                v[a] = config.v_reset;
                if (!fired[a]) {
                    fired[a] = true;
                    out.spikers.push_back(a);
                }
                arrivals[(k + config.syn_delay) % len][a] += 1;
                ++pending;
                if (first_tick < 0) first_tick = k;
            }
        }
        // Without state drive the membranes only decay, so no further spike can occur.
        if (first_tick >= 0 && !state_firing && pending == 0) break;
    }

    if (out.spikers.empty()) {
        out.kind = SelectionCase::Timeout;
        out.action = uniform_index(rng, n);
    } else if (out.spikers.size() == 1) {
        out.kind = SelectionCase::SingleSpike;
        out.action = out.spikers.front();
    } else {
        out.kind = SelectionCase::MultiSpike;
        out.action = out.spikers[uniform_index(rng, static_cast<int>(out.spikers.size()))];
    }
    return out;
}

RescaleResult rescale_weights(Eigen::MatrixXd& w, double w_min, double w_max) {
    RescaleResult result;
    if (w.size() == 0) return result;
    const double hi = w.maxCoeff();
    const double lo = w.minCoeff();
    if (!(hi > lo)) return result;
    result.k = (w_max - w_min) / (hi - lo);
    result.d = w_max - result.k * hi;
    // Same map as k * x + d, written relative to the minimum so the extremes
    // land exactly on the boundaries.
    const double k = result.k;
    w = w.unaryExpr([=](double x) {
        if (x == hi) return w_max;
        return std::min(w_max, w_min + k * (x - lo));
    });
    result.applied = true;
    return result;
}

namespace {

struct RuleApplier {
    Eigen::MatrixXd& w;
    Eigen::MatrixXd& traces;
    const EmulatorConfig& config;
    int horizon;
    int t;
    int s;
    int a;
    double r;
    int s_next;

    void operator()(const Td1Rule& rule) const { td1_update(w, s, a, r, s_next, rule.params, t); }
    void operator()(const TdLambdaRule& rule) const { td_lambda_update(w, traces, s, a, r, s_next, rule.params, t); }
    void operator()(const AnnRule& rule) const { ann_update_all(w, t, a, r, rule, horizon, config.w_min, config.w_max); }
};

} // namespace

TrialResult run_trial(const Task& task, const PlasticityRule& rule, const EmulatorConfig& config, int horizon,
                      Rng& rng, const StepObserver& observer) {
    config.validate();
    const int S = task_states(task);
    const int A = task_actions(task);
    check_capacity(S, A, config.mode);
    if (std::holds_alternative<AnnRule>(rule) && (S != 1 || A != 2)) {
        throw ContractViolation("run_trial: the ANN rule is defined for two-armed bandits only");
    }

    // Independent streams keep environment outcomes aligned across agents
    // that draw different numbers of selection random numbers.
    Rng env_rng(rng());
    Rng agent_rng(rng());

    WeightMatrix weights(S, A, config.mode, config.bits);
    const double span = config.w_max - config.w_min;
    for (Eigen::Index i = 0; i < weights.shadow().size(); ++i) {
        weights.shadow()(i) = config.w_min + span * (0.4 + 0.2 * uniform01(agent_rng));
    }
    weights.requantize();
    Eigen::MatrixXd traces = Eigen::MatrixXd::Zero(S, A);

    TrialResult result;
    auto& traj = result.trajectory;
    traj.horizon = horizon;
    traj.steps.reserve(std::max(horizon, 0));
    const double gamma = task_gamma(task);
    double discount = 1.0;
    int s = 0;
    for (int t = 0; t < horizon; ++t) {
        const auto sel = select_action(weights, config, s, agent_rng);
        const auto [s2, r] = task_step(task, s, sel.action, env_rng);
        std::visit(RuleApplier{weights.shadow(), traces, config, horizon, t, s, sel.action, r, s2}, rule);
        if (config.rescale_enabled && (t + 1) % config.rescale_period == 0) {
            rescale_weights(weights.shadow(), config.w_min, config.w_max);
        }
        weights.requantize();
        const Step step{t, s, sel.action, r, s2, sel.kind};
        traj.steps.push_back(step);
        traj.raw_return += discount * r;
        discount *= gamma;
        if (observer) observer(step, weights);
        s = s2;
    }
    result.final_shadow = weights.shadow();
    return result;
}

} // namespace nl2l
