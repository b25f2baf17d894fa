#include "nl2l/plasticity.hpp"

#include <cmath>

#include "nl2l/errors.hpp"

namespace nl2l {

double TdParams::alpha_at(int t) const {
    return alpha0 * std::pow(alpha_decay, static_cast<double>(t));
}

void TdParams::validate() const {
    if (!(alpha0 >= 0.0)) throw ConfigError("td: alpha0 must be >= 0");
    if (!(alpha_decay > 0.0 && alpha_decay <= 1.0)) throw ConfigError("td: alpha_decay must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("td: gamma must lie in [0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("td: lambda must lie in [0, 1]");
}

namespace {

void check_indices(const Eigen::MatrixXd& w, int s, int a, int s_next) {
    if (s < 0 || s >= w.rows() || s_next < 0 || s_next >= w.rows() || a < 0 || a >= w.cols()) {
        throw ContractViolation("td update: index out of range");
    }
}

} // namespace

void td1_update(Eigen::MatrixXd& w, int s, int a, double r, int s_next, const TdParams& params, int t) {
    check_indices(w, s, a, s_next);
    const double target = r + params.gamma * w.row(s_next).maxCoeff();
    w(s, a) += params.alpha_at(t) * (target - w(s, a));
}

double td_lambda_update(Eigen::MatrixXd& w, Eigen::MatrixXd& traces, int s, int a, double r, int s_next,
                        const TdParams& params, int t) {
    check_indices(w, s, a, s_next);
    if (traces.rows() != w.rows() || traces.cols() != w.cols()) {
        throw ContractViolation("td_lambda_update: trace shape differs from weights");
    }
    traces *= params.gamma * params.lambda;
    traces(s, a) += 1.0;
    const double delta = r + params.gamma * w.row(s_next).maxCoeff() - w(s, a);
    const double step = params.alpha_at(t) * delta;
    // Zero traces are skipped so that lambda = 0 reproduces the single-synapse
    // rule bit for bit.
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            const double e = traces(i, j);
            if (e != 0.0) w(i, j) += step * e;
        }
    }
    return delta;
}

namespace {

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace

double AnnRule::output_bound() const {
    double sum = std::abs(b2());
    for (int h = 0; h < n_hidden; ++h) sum += std::abs(w2(h));
    if (output == AnnOutput::Tanh) sum = std::min(sum, 1.0);
    return out_scale * sum;
}

double ann_forward(const AnnInputs& inputs, const AnnRule& rule) {
    double out = rule.b2();
    for (int h = 0; h < AnnRule::n_hidden; ++h) {
        double z = rule.b1(h);
        for (int i = 0; i < AnnRule::n_inputs; ++i) z += rule.w1(h, i) * inputs[i];
        out += rule.w2(h) * sigmoid(z);
    }
    if (rule.output == AnnOutput::Tanh) out = std::tanh(out);
    return rule.out_scale * out;
}

AnnInputs ann_input_gradient(const AnnInputs& inputs, const AnnRule& rule) {
    AnnInputs grad{};
    double pre_out = rule.b2();
    for (int h = 0; h < AnnRule::n_hidden; ++h) {
        double z = rule.b1(h);
        for (int i = 0; i < AnnRule::n_inputs; ++i) z += rule.w1(h, i) * inputs[i];
        const double act = sigmoid(z);
        pre_out += rule.w2(h) * act;
        const double dact = act * (1.0 - act) * rule.w2(h);
        for (int i = 0; i < AnnRule::n_inputs; ++i) grad[i] += dact * rule.w1(h, i);
    }
    double outer = rule.out_scale;
    if (rule.output == AnnOutput::Tanh) {
        const double th = std::tanh(pre_out);
        outer *= 1.0 - th * th;
    }
    for (auto& g : grad) g *= outer;
    return grad;
}

void ann_update_all(Eigen::MatrixXd& w, int t, int action, double r, const AnnRule& rule, int horizon, double w_lo,
                    double w_hi) {
    if (w.rows() != 1 || w.cols() != 2) {
        throw ContractViolation("ann_update_all: the ANN rule needs a single-state two-armed weight matrix");
    }
    if (action < 0 || action > 1) throw ContractViolation("ann_update_all: action out of range");
    const double span = w_hi > w_lo ? w_hi - w_lo : 1.0;
    const double t_norm = horizon > 0 ? static_cast<double>(t) / horizon : 0.0;
    const double w0 = (w(0, 0) - w_lo) / span;
    const double w1 = (w(0, 1) - w_lo) / span;
    const double d0 = ann_forward({t_norm, action == 0 ? 1.0 : 0.0, r, w0, w1}, rule);
    const double d1 = ann_forward({t_norm, action == 1 ? 1.0 : 0.0, r, w1, w0}, rule);
    w(0, 0) += d0;
    w(0, 1) += d1;
}

} // namespace nl2l
