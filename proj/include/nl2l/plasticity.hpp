#pragma once

#include <array>
#include <span>
#include <variant>

#include <Eigen/Dense>

namespace nl2l {

/// Parameters shared by the temporal-difference rules.
struct TdParams {
    double alpha0 = 0.1;
    /// Per-step multiplicative decay of the learning rate.
    double alpha_decay = 1.0;
    double gamma = 0.9;
    double lambda = 0.0;

    double alpha_at(int t) const;
    void validate() const;
};

/// Single-synapse TD update:
/// w(s, a) += alpha(t) * (r + gamma * max_k w(s_next, k) - w(s, a)).
void td1_update(Eigen::MatrixXd& w, int s, int a, double r, int s_next, const TdParams& params, int t);

/// Eligibility-trace update. Traces decay by gamma * lambda, the visited
/// synapse is bumped by one, then every synapse moves by alpha * delta * e.
/// Returns delta.
double td_lambda_update(Eigen::MatrixXd& w, Eigen::MatrixXd& traces, int s, int a, double r, int s_next,
                        const TdParams& params, int t);

enum class AnnOutput { Linear, Tanh };

/// Multilayer perceptron plasticity rule: 5 inputs, 7 sigmoid hidden units,
/// one output. Parameter layout in `theta`:
///   [0, 35)   input->hidden weights, row-major by hidden unit
///   [35, 42)  hidden biases
///   [42, 49)  hidden->output weights
///   49        output bias
struct AnnRule {
    static constexpr int n_inputs = 5;
    static constexpr int n_hidden = 7;
    static constexpr int n_params = n_inputs * n_hidden + n_hidden + n_hidden + 1;

    std::array<double, n_params> theta{};
    double out_scale = 1.0;
    AnnOutput output = AnnOutput::Linear;

    double& w1(int h, int i) { return theta[h * n_inputs + i]; }
    double w1(int h, int i) const { return theta[h * n_inputs + i]; }
    double& b1(int h) { return theta[35 + h]; }
    double b1(int h) const { return theta[35 + h]; }
    double& w2(int h) { return theta[42 + h]; }
    double w2(int h) const { return theta[42 + h]; }
    double& b2() { return theta[49]; }
    double b2() const { return theta[49]; }

    /// Largest |output| the rule can produce for any input.
    double output_bound() const;
};

/// Input order: (t / T, action flag, reward, own weight, other weight).
using AnnInputs = std::array<double, AnnRule::n_inputs>;

double ann_forward(const AnnInputs& inputs, const AnnRule& rule);

/// Analytic derivative of ann_forward with respect to each input.
AnnInputs ann_input_gradient(const AnnInputs& inputs, const AnnRule& rule);

/// Updates both bandit synapses of the single-state weight matrix from the
/// pre-update weights. Weight inputs are mapped to [0, 1] through
/// [w_lo, w_hi] before they reach the network.
void ann_update_all(Eigen::MatrixXd& w, int t, int action, double r, const AnnRule& rule, int horizon,
                    double w_lo, double w_hi);

struct Td1Rule {
    TdParams params;
};

struct TdLambdaRule {
    TdParams params;
};

using PlasticityRule = std::variant<Td1Rule, TdLambdaRule, AnnRule>;

} // namespace nl2l
