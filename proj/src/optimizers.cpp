#include "nl2l/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nl2l/errors.hpp"

namespace nl2l {

using nlohmann::json;

const char* to_string(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::CrossEntropy: return "ce";
    case OptimizerKind::EvolutionStrategies: return "es";
    case OptimizerKind::SimulatedAnnealing: return "sa";
    case OptimizerKind::GradientDescent: return "gd";
    }
    return "?";
}

namespace {

Eigen::VectorXd box(const Eigen::VectorXd& x) {
    return x.cwiseMax(0.0).cwiseMin(1.0);
}

} // namespace

OptimizerConfig OptimizerConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("optimizer: expected an object");
    static const std::set<std::string> known{"name",     "pop",       "elite_frac", "ce_eps",   "ce_diagonal",
                                             "es_sigma", "es_learn_rate", "sa_chains", "sa_t0", "sa_t_end",
                                             "sa_step",  "gd_probe_eps", "gd_step",  "gd_random_probes"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("optimizer: unknown field '" + key + "'");
    }
    if (!j.contains("name")) throw ConfigError("optimizer: missing required field 'name'");
    OptimizerConfig c;
    const auto name = j["name"].get<std::string>();
    if (name == "ce") c.kind = OptimizerKind::CrossEntropy;
    else if (name == "es") c.kind = OptimizerKind::EvolutionStrategies;
    else if (name == "sa") c.kind = OptimizerKind::SimulatedAnnealing;
    else if (name == "gd") c.kind = OptimizerKind::GradientDescent;
    else throw ConfigError("optimizer: field 'name' must be one of ce, es, sa, gd");
    c.pop = j.value("pop", c.pop);
    c.elite_frac = j.value("elite_frac", c.elite_frac);
    c.ce_eps = j.value("ce_eps", c.ce_eps);
    c.ce_diagonal = j.value("ce_diagonal", c.ce_diagonal);
    c.es_sigma = j.value("es_sigma", c.es_sigma);
    c.es_learn_rate = j.value("es_learn_rate", c.es_learn_rate);
    c.sa_chains = j.value("sa_chains", c.sa_chains);
    c.sa_t0 = j.value("sa_t0", c.sa_t0);
    c.sa_t_end = j.value("sa_t_end", c.sa_t_end);
    c.sa_step = j.value("sa_step", c.sa_step);
    c.gd_probe_eps = j.value("gd_probe_eps", c.gd_probe_eps);
    c.gd_step = j.value("gd_step", c.gd_step);
    c.gd_random_probes = j.value("gd_random_probes", c.gd_random_probes);
    c.validate();
    return c;
}

json OptimizerConfig::to_json() const {
    json j{{"name", nl2l::to_string(kind)}};
    switch (kind) {
    case OptimizerKind::CrossEntropy:
        j["pop"] = pop;
        j["elite_frac"] = elite_frac;
        j["ce_eps"] = ce_eps;
        j["ce_diagonal"] = ce_diagonal;
        break;
    case OptimizerKind::EvolutionStrategies:
        j["pop"] = pop;
        j["es_sigma"] = es_sigma;
        j["es_learn_rate"] = es_learn_rate;
        break;
    case OptimizerKind::SimulatedAnnealing:
        j["sa_chains"] = sa_chains;
        j["sa_t0"] = sa_t0;
        j["sa_t_end"] = sa_t_end;
        j["sa_step"] = sa_step;
        break;
    case OptimizerKind::GradientDescent:
        j["gd_probe_eps"] = gd_probe_eps;
        j["gd_step"] = gd_step;
        j["gd_random_probes"] = gd_random_probes;
        break;
    }
    return j;
}

void OptimizerConfig::validate() const {
    switch (kind) {
    case OptimizerKind::CrossEntropy:
        if (!(elite_frac > 0.0 && elite_frac <= 1.0)) throw ConfigError("optimizer: elite_frac must lie in (0, 1]");
        if (pop < 2.0 / elite_frac - 1e-9) throw ConfigError("optimizer: pop must be at least 2 / elite_frac");
        if (!(ce_eps >= 0.0)) throw ConfigError("optimizer: ce_eps must be >= 0");
        break;
    case OptimizerKind::EvolutionStrategies:
        if (pop < 2 || pop % 2 != 0) throw ConfigError("optimizer: ES pop must be even and >= 2");
        if (!(es_sigma > 0.0)) throw ConfigError("optimizer: es_sigma must be positive");
        break;
    case OptimizerKind::SimulatedAnnealing:
        if (sa_chains < 1) throw ConfigError("optimizer: sa_chains must be >= 1");
        if (!(sa_t0 > 0.0 && sa_t_end > 0.0 && sa_t_end <= sa_t0)) {
            throw ConfigError("optimizer: need 0 < sa_t_end <= sa_t0");
        }
        if (!(sa_step > 0.0)) throw ConfigError("optimizer: sa_step must be positive");
        break;
    case OptimizerKind::GradientDescent:
        if (!(gd_probe_eps > 0.0)) throw ConfigError("optimizer: gd_probe_eps must be positive");
        if (!(gd_step >= 0.0)) throw ConfigError("optimizer: gd_step must be >= 0");
        if (gd_random_probes < 0) throw ConfigError("optimizer: gd_random_probes must be >= 0");
        break;
    }
}

int OptimizerConfig::evaluations_per_generation(int dim) const {
    switch (kind) {
    case OptimizerKind::CrossEntropy:
    case OptimizerKind::EvolutionStrategies: return pop;
    case OptimizerKind::SimulatedAnnealing: return sa_chains;
    case OptimizerKind::GradientDescent: return 2 * (gd_random_probes > 0 ? gd_random_probes : dim);
    }
    return 0;
}

// ---------------------------------------------------------------------------

CeState ce_init(const ParamSpace& space) {
    CeState s;
    s.mean = space.init_mean();
    s.cov = space.init_std().array().square().matrix().asDiagonal();
    return s;
}

std::vector<Eigen::VectorXd> ce_sample(const CeState& state, int pop, Rng& rng) {
    const auto dim = state.mean.size();
    Eigen::MatrixXd factor;
    Eigen::LLT<Eigen::MatrixXd> llt(state.cov);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        // Semi-definite covariance: fall back to the symmetric square root.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.cov);
        factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(pop);
    Eigen::VectorXd z(dim);
    for (int k = 0; k < pop; ++k) {
        for (Eigen::Index i = 0; i < dim; ++i) z(i) = standard_normal(rng);
        out.push_back(box(state.mean + factor * z));
    }
    return out;
}

std::vector<int> select_elites(const std::vector<double>& fitness, double elite_frac) {
    const int n = static_cast<int>(fitness.size());
    const int n_elite = std::min(n, static_cast<int>(std::ceil(elite_frac * n - 1e-9)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] > fitness[b]; });
    order.resize(std::max(n_elite, 0));
    return order;
}

CeState ce_step(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& fitness,
                double elite_frac, double eps, bool diagonal) {
    if (candidates.size() != fitness.size()) throw ContractViolation("ce_step: candidate/fitness size mismatch");
    const auto pop = static_cast<double>(candidates.size());
    if (pop < 2.0 / elite_frac - 1e-9) throw ContractViolation("ce_step: population smaller than 2 / elite_frac");
    const auto elites = select_elites(fitness, elite_frac);
    if (elites.size() < 2) throw ContractViolation("ce_step: fewer than two elites");
    const auto dim = candidates.front().size();
    CeState s;
    s.mean = Eigen::VectorXd::Zero(dim);
    for (int i : elites) s.mean += candidates[i];
    s.mean /= static_cast<double>(elites.size());
    s.cov = Eigen::MatrixXd::Zero(dim, dim);
    for (int i : elites) {
        const Eigen::VectorXd d = candidates[i] - s.mean;
        s.cov += d * d.transpose();
    }
    s.cov /= static_cast<double>(elites.size());
    if (diagonal) s.cov = Eigen::MatrixXd(s.cov.diagonal().asDiagonal());
    s.cov += eps * Eigen::MatrixXd::Identity(dim, dim);
    return s;
}

// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> es_perturbations(int n, int dim, Rng& rng) {
    if (n < 2 || n % 2 != 0) throw ContractViolation("es_perturbations: n must be even and >= 2");
    std::vector<Eigen::VectorXd> out;
    out.reserve(n);
    for (int k = 0; k < n / 2; ++k) {
        Eigen::VectorXd e(dim);
        for (int i = 0; i < dim; ++i) e(i) = standard_normal(rng);
        out.push_back(e);
        out.push_back(-e);
    }
    return out;
}

std::vector<double> centered_ranks(const std::vector<double>& fitness) {
    const int n = static_cast<int>(fitness.size());
    std::vector<double> ranks(n, 0.0);
    if (n < 2) return ranks;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] < fitness[b]; });
    for (int i = 0; i < n;) {
        int j = i;
        while (j + 1 < n && fitness[order[j + 1]] == fitness[order[i]]) ++j;
        const double avg = 0.5 * (i + j);
        for (int k = i; k <= j; ++k) ranks[order[k]] = avg / (n - 1) - 0.5;
        i = j + 1;
    }
    return ranks;
}

EsState es_step(const EsState& state, const std::vector<Eigen::VectorXd>& perturbations,
                const std::vector<double>& fitness) {
    const int n = static_cast<int>(perturbations.size());
    if (n < 2) throw ContractViolation("es_step: need at least two perturbations");
    if (static_cast<int>(fitness.size()) != n) throw ContractViolation("es_step: perturbation/fitness size mismatch");
    const auto ranks = centered_ranks(fitness);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(state.base.size());
    for (int i = 0; i < n; ++i) g += ranks[i] * perturbations[i];
    EsState next = state;
    next.base = state.base + state.learn_rate / (n * state.sigma) * g;
    return next;
}

// ---------------------------------------------------------------------------

double sa_acceptance(double f_new, double f_old, double temperature) {
    if (f_new >= f_old) return 1.0;
    if (!(temperature > 0.0)) return 0.0;
    return std::min(1.0, std::exp((f_new - f_old) / temperature));
}

double sa_temperature(const SaState& state, int step) {
    if (state.schedule_steps <= 0) return state.t_end;
    const double frac = std::clamp(static_cast<double>(step) / state.schedule_steps, 0.0, 1.0);
    return state.t0 + (state.t_end - state.t0) * frac;
}

SaState sa_step(const SaState& state, Rng& rng, const BatchFitness& eval, std::vector<Eigen::VectorXd>* proposals,
                std::vector<double>* fitness) {
    if (!(state.temperature > 0.0)) throw ContractViolation("sa_step: temperature must be positive");
    const double scale = state.step * state.temperature / state.t0;
    std::vector<Eigen::VectorXd> props;
    props.reserve(state.chains.size());
    for (const auto& chain : state.chains) {
        Eigen::VectorXd x = chain.theta;
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += scale * standard_normal(rng);
        props.push_back(box(x));
    }
    const auto f = eval(props);
    if (f.size() != props.size()) throw ContractViolation("sa_step: evaluation returned the wrong count");
    SaState next = state;
    for (std::size_t c = 0; c < props.size(); ++c) {
        const double p = sa_acceptance(f[c], state.chains[c].fitness, state.temperature);
        const double u = uniform01(rng);
        if (u < p) next.chains[c] = {props[c], f[c]};
    }
    next.steps_done = state.steps_done + 1;
    next.temperature = sa_temperature(next, next.steps_done);
    if (proposals) *proposals = std::move(props);
    if (fitness) *fitness = f;
    return next;
}

// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> gd_probe_points(const GdState& state, Rng& rng,
                                             std::vector<Eigen::VectorXd>* directions) {
    const auto dim = state.theta.size();
    std::vector<Eigen::VectorXd> dirs;
    if (state.random_probes > 0) {
        for (int k = 0; k < state.random_probes; ++k) {
            Eigen::VectorXd u(dim);
            for (Eigen::Index i = 0; i < dim; ++i) u(i) = standard_normal(rng);
            dirs.push_back(u);
        }
    } else {
        for (Eigen::Index i = 0; i < dim; ++i) dirs.push_back(Eigen::VectorXd::Unit(dim, i));
    }
    std::vector<Eigen::VectorXd> points;
    points.reserve(2 * dirs.size());
    for (const auto& u : dirs) {
        points.push_back(state.theta + state.probe_eps * u);
        points.push_back(state.theta - state.probe_eps * u);
    }
    if (directions) *directions = std::move(dirs);
    return points;
}

Eigen::VectorXd gd_gradient(const GdState& state, const std::vector<Eigen::VectorXd>& directions,
                            const std::vector<double>& fitness) {
    if (fitness.size() != 2 * directions.size()) throw ContractViolation("gd_gradient: expected two probes per direction");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(state.theta.size());
    for (std::size_t k = 0; k < directions.size(); ++k) {
        g += (fitness[2 * k] - fitness[2 * k + 1]) / (2.0 * state.probe_eps) * directions[k];
    }
    if (state.random_probes > 0) g /= static_cast<double>(directions.size());
    return g;
}

GdState gd_step(const GdState& state, const BatchFitness& eval, Rng& rng, std::vector<Eigen::VectorXd>* probes,
                std::vector<double>* fitness) {
    if (!(state.probe_eps > 0.0)) throw ContractViolation("gd_step: probe_eps must be positive");
    std::vector<Eigen::VectorXd> dirs;
    auto points = gd_probe_points(state, rng, &dirs);
    const auto f = eval(points);
    GdState next = state;
    next.theta = box(state.theta + state.step * gd_gradient(state, dirs, f));
    if (probes) *probes = std::move(points);
    if (fitness) *fitness = f;
    return next;
}

} // namespace nl2l
