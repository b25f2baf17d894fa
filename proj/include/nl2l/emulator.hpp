#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "nl2l/environments.hpp"
#include "nl2l/plasticity.hpp"
#include "nl2l/rng.hpp"

namespace nl2l {

/// Synapse crossbar size of the emulated chip.
inline constexpr int kCrossbarSize = 32;

enum class PrecisionMode { HardwareFidelity, Ideal };

/// Behavioral parameters of the emulated agent. Weights, inhibition strengths
/// and the threshold all share one unit: a single synaptic event of weight w
/// raises the membrane by w.
struct EmulatorConfig {
    PrecisionMode mode = PrecisionMode::HardwareFidelity;
    int bits = 6;

    /// Mutual inhibition between action neurons.
    double xi = 30.0;
    /// Inhibition from action neurons onto the state population.
    double zeta = 63.0;
    /// Strength of the state-neuron autapse; state firing ends once the
    /// accumulated action->state inhibition reaches it.
    double autapse = 63.0;

    double w_min = 20.0;
    double w_max = 50.0;
    bool rescale_enabled = true;
    int rescale_period = 10;

    double tau_m = 10.0;
    double v_thresh = 100.0;
    double v_reset = 0.0;
    int syn_delay = 2;
    int select_timeout = 100;

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;
    int levels() const { return (1 << bits) - 1; }
};

/// Learning-precision shadow weights plus the view the spiking dynamics read.
class WeightMatrix {
public:
    WeightMatrix(int n_states, int n_actions, PrecisionMode mode, int bits = 6);

    int n_states() const { return static_cast<int>(shadow_.rows()); }
    int n_actions() const { return static_cast<int>(shadow_.cols()); }
    PrecisionMode mode() const { return mode_; }
    int bits() const { return bits_; }

    Eigen::MatrixXd& shadow() { return shadow_; }
    const Eigen::MatrixXd& shadow() const { return shadow_; }
    /// Synaptic weight seen by the neurons: the quantized value in hardware
    /// mode, the shadow value in ideal mode.
    double effective(int s, int a) const { return view_(s, a); }
    const Eigen::MatrixXd& view() const { return view_; }

    /// Recomputes the neuron-facing view from the shadow weights.
    void requantize();

    /// Round-to-nearest onto the integer levels [0, 2^bits - 1].
    static int quantize(double w, int bits);

private:
    Eigen::MatrixXd shadow_;
    Eigen::MatrixXd view_;
    PrecisionMode mode_;
    int bits_;
};

struct SelectionOutcome {
    int action = 0;
    SelectionCase kind = SelectionCase::Timeout;
    std::vector<int> spikers;
};

/// Winner-take-first action selection for the active state.
SelectionOutcome select_action(const WeightMatrix& weights, const EmulatorConfig& config, int state, Rng& rng);

struct RescaleResult {
    bool applied = false;
    double k = 1.0;
    double d = 0.0;
};

/// Affine remap w' = k w + d with max(w') = w_max and min(w') = w_min.
/// An all-equal matrix is left untouched and reported as not applied.
RescaleResult rescale_weights(Eigen::MatrixXd& w, double w_min, double w_max);

/// Per-step hook, called after the step's plasticity update and rescale.
using StepObserver = std::function<void(const Step&, const WeightMatrix&)>;

struct TrialResult {
    Trajectory trajectory;
    Eigen::MatrixXd final_shadow;
};

/// Closed agent-environment loop for `horizon` steps.
/// Throws CapacityError when the network does not fit the crossbar in
/// hardware-fidelity mode.
TrialResult run_trial(const Task& task, const PlasticityRule& rule, const EmulatorConfig& config, int horizon,
                      Rng& rng, const StepObserver& observer = {});

/// Throws CapacityError if n_states + n_actions exceeds the crossbar.
void check_capacity(int n_states, int n_actions, PrecisionMode mode);

} // namespace nl2l
