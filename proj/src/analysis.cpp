#include "nl2l/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "nl2l/errors.hpp"
#include "nl2l/stats.hpp"

namespace nl2l {

RuleFunction as_function(const AnnRule& rule) {
    return [rule](const AnnInputs& x) { return ann_forward(x, rule); };
}

InputMarginals InputMarginals::idealized() {
    InputMarginals m;
    auto uniform = [](Rng& rng) { return uniform01(rng); };
    auto coin = [](Rng& rng) { return uniform01(rng) < 0.5 ? 0.0 : 1.0; };
    m.draw = {uniform, coin, coin, uniform, uniform};
    return m;
}

InputMarginals InputMarginals::empirical(std::vector<AnnInputs> rows) {
    if (rows.empty()) throw ContractViolation("InputMarginals::empirical: no recorded inputs");
    auto shared = std::make_shared<const std::vector<AnnInputs>>(std::move(rows));
    InputMarginals m;
    for (int i = 0; i < AnnRule::n_inputs; ++i) {
        m.draw[i] = [shared, i](Rng& rng) {
            return (*shared)[uniform_index(rng, static_cast<int>(shared->size()))][i];
        };
    }
    return m;
}

AnnInputs InputMarginals::sample(Rng& rng) const {
    AnnInputs x{};
    for (int i = 0; i < AnnRule::n_inputs; ++i) x[i] = draw[i](rng);
    return x;
}

std::vector<AnnInputs> record_ann_inputs(const Experiment& experiment, const AgentSetup& agent,
                                         const std::vector<std::uint64_t>& seeds) {
    std::vector<AnnInputs> rows;
    const double lo = agent.emulator.w_min;
    const double span = agent.emulator.w_max > lo ? agent.emulator.w_max - lo : 1.0;
    const double T = experiment.horizon();
    for (auto seed : seeds) {
        Eigen::MatrixXd prev;
        run_task(experiment, agent, seed, [&](const Step& step, const WeightMatrix& w) {
            // Weights before this step's update equal those after the previous step.
            if (prev.size() == 2) {
                for (int arm = 0; arm < 2; ++arm) {
                    rows.push_back({step.t / T, step.action == arm ? 1.0 : 0.0, step.reward,
                                    (prev(0, arm) - lo) / span, (prev(0, 1 - arm) - lo) / span});
                }
            }
            prev = w.shadow();
        });
    }
    return rows;
}

ImportanceReport input_importance(const RuleFunction& rule, const InputMarginals& marginals, int n_samples,
                                  Rng& rng, int n_inner) {
    if (n_samples < 1000) throw ContractViolation("input_importance: n_samples must be at least 1000");
    if (n_inner < 2) throw ContractViolation("input_importance: n_inner must be at least 2");
    ImportanceReport report;
    report.n_samples = n_samples;

    std::array<double, AnnRule::n_inputs> first_order{};
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < AnnRule::n_inputs; ++i) {
        std::vector<double> cond_means(n_samples);
        double within = 0.0;
        for (int o = 0; o < n_samples; ++o) {
            const double pinned = marginals.draw[i](rng);
            double m = 0.0, m2 = 0.0;
            for (int k = 0; k < n_inner; ++k) {
                AnnInputs x = marginals.sample(rng);
                x[i] = pinned;
                const double y = rule(x);
                m += y;
                m2 += y * y;
                sum += y;
                sum_sq += y * y;
                ++count;
            }
            m /= n_inner;
            const double var_in = std::max(0.0, (m2 - n_inner * m * m) / (n_inner - 1));
            cond_means[o] = m;
            within += var_in;
        }
        within /= n_samples;
        const double mu = mean(cond_means);
        double v = 0.0;
        for (double c : cond_means) v += (c - mu) * (c - mu);
        v /= n_samples - 1;
        // Each conditional mean carries Var(f | x_i) / n_inner of sampling noise.
        first_order[i] = v - within / n_inner;
    }
    const double mu = sum / static_cast<double>(count);
    report.total_variance = std::max(0.0, sum_sq / static_cast<double>(count) - mu * mu);
    const double scale = std::max(std::abs(mu), 1.0);
    if (report.total_variance <= 1e-24 * scale * scale) {
        report.degenerate = true;
        report.total_variance = 0.0;
        return report;
    }
    double total = 0.0;
    for (int i = 0; i < AnnRule::n_inputs; ++i) {
        report.fractions[i] = std::clamp(first_order[i] / report.total_variance, 0.0, 1.0);
        total += report.fractions[i];
    }
    report.residual_interactions = 1.0 - total;
    return report;
}

std::pair<double, double> UpdateCurve::slope_intercept() const {
    const int n = static_cast<int>(grid.size());
    if (n < 2) throw ContractViolation("UpdateCurve::slope_intercept: need at least two grid points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += grid[i];
        sy += mean_dw[i];
        sxx += grid[i] * grid[i];
        sxy += grid[i] * mean_dw[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

std::array<UpdateCurve, 4> update_curves(const RuleFunction& rule, int grid_size, int n_marginal, Rng& rng) {
    if (grid_size < 2) throw ContractViolation("update_curves: grid_size must be at least 2");
    if (n_marginal < 1) throw ContractViolation("update_curves: n_marginal must be positive");
    // The same marginal draws are reused at every grid point and case.
    std::vector<std::pair<double, double>> draws(n_marginal);
    for (auto& d : draws) d = {uniform01(rng), uniform01(rng)};

    std::array<UpdateCurve, 4> curves;
    for (int c = 0; c < 4; ++c) {
        auto& curve = curves[c];
        curve.flag = c / 2;
        curve.reward = c % 2;
        std::vector<double> values(n_marginal);
        for (int g = 0; g < grid_size; ++g) {
            const double w = static_cast<double>(g) / (grid_size - 1);
            for (int k = 0; k < n_marginal; ++k) {
                values[k] = rule({draws[k].first, static_cast<double>(curve.flag), static_cast<double>(curve.reward),
                                  w, draws[k].second});
            }
            curve.grid.push_back(w);
            curve.mean_dw.push_back(mean(values));
            curve.p10.push_back(std::min(quantile(values, 0.1), curve.mean_dw.back()));
            curve.p90.push_back(std::max(quantile(values, 0.9), curve.mean_dw.back()));
        }
    }
    return curves;
}

TransferReport transfer_report(const Experiment& experiment, const Eigen::VectorXd& theta_a,
                               const Eigen::VectorXd& theta_b, const TaskFamily& eval_family, int n_tasks,
                               std::uint64_t seed, int workers, int resamples) {
    const int dim = experiment.space().dim();
    if (theta_a.size() != dim || theta_b.size() != dim) {
        throw ContractViolation("transfer_report: hyperparameter dimension mismatch");
    }
    if (n_tasks < 1) throw ContractViolation("transfer_report: n_tasks must be positive");
    const auto eval = experiment.with_family(eval_family);
    const auto seeds = batch_seeds(Stream::Evaluation, seed, n_tasks, 0x7472616eULL);
    const auto batches =
        evaluate_candidates(eval, {eval.decode(theta_a), eval.decode(theta_b)}, {seeds, seeds}, workers);
    TransferReport r;
    r.n_tasks = n_tasks;
    r.comparison = compare_paired(batches[0], batches[1], resamples, derive_seed(Stream::Analysis, {seed}));
    return r;
}

} // namespace nl2l
