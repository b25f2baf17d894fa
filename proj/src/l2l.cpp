#include "nl2l/l2l.hpp"

#include <algorithm>
#include <cmath>

#include "nl2l/errors.hpp"
#include "nl2l/parallel.hpp"

namespace nl2l {

double TaskScore::normalized() const {
    return normalized_score(raw, random_ref, optimal_ref);
}

double BatchResult::mean_fitness() const {
    double s = 0.0;
    for (const auto& t : tasks) s += t.fitness;
    return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

double BatchResult::mean_raw() const {
    double s = 0.0;
    for (const auto& t : tasks) s += t.raw;
    return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

double aggregate_normalized(const std::vector<TaskScore>& tasks, const std::vector<int>& idx) {
    double raw = 0.0, rnd = 0.0, opt = 0.0;
    for (int i : idx) {
        raw += tasks[i].raw;
        rnd += tasks[i].random_ref;
        opt += tasks[i].optimal_ref;
    }
    return normalized_score(raw, rnd, opt);
}

double BatchResult::normalized_score() const {
    std::vector<int> idx(tasks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return aggregate_normalized(tasks, idx);
}

double BatchResult::mean_task_normalized() const {
    double s = 0.0;
    for (const auto& t : tasks) s += t.normalized();
    return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

PairedComparison compare_paired(const BatchResult& a, const BatchResult& b, int resamples, std::uint64_t seed) {
    if (a.tasks.size() != b.tasks.size()) throw ContractViolation("compare_paired: batches differ in size");
    for (std::size_t i = 0; i < a.tasks.size(); ++i) {
        if (a.tasks[i].seed != b.tasks[i].seed) throw ContractViolation("compare_paired: batches hold different tasks");
    }
    PairedComparison out;
    out.score_a = a.normalized_score();
    out.score_b = b.normalized_score();
    out.difference = out.score_a - out.score_b;
    out.ci = bootstrap_ci(
        static_cast<int>(a.tasks.size()),
        [&](const std::vector<int>& idx) {
            return aggregate_normalized(a.tasks, idx) - aggregate_normalized(b.tasks, idx);
        },
        resamples, 0.95, seed);
    return out;
}

TaskScore run_task(const Experiment& experiment, const AgentSetup& agent, std::uint64_t task_seed,
                   const StepObserver& observer) {
    const auto inst = make_task(experiment.family(), task_seed, experiment.horizon());
    Rng rng(derive_seed(Stream::Agent, {task_seed}));
    const auto trial = run_trial(inst.task, agent.rule, agent.emulator, experiment.horizon(), rng, observer);
    TaskScore s;
    s.seed = task_seed;
    s.raw = trial.trajectory.raw_return;
    s.random_ref = inst.refs.random;
    s.optimal_ref = inst.refs.optimal;
    s.fitness = experiment.fitness(inst, trial.trajectory);
    return s;
}

std::vector<std::uint64_t> batch_seeds(Stream stream, std::uint64_t master_seed, int n, std::uint64_t tag) {
    std::vector<std::uint64_t> seeds(std::max(n, 0));
    for (int i = 0; i < n; ++i) seeds[i] = derive_seed(stream, {master_seed, tag, static_cast<std::uint64_t>(i)});
    return seeds;
}

std::vector<std::uint64_t> held_out_seeds(std::uint64_t master_seed, int n) {
    return batch_seeds(Stream::Evaluation, master_seed, n);
}

std::vector<BatchResult> evaluate_candidates(const Experiment& experiment, const std::vector<AgentSetup>& agents,
                                             const std::vector<std::vector<std::uint64_t>>& seeds, int workers) {
    if (agents.size() != seeds.size()) throw ContractViolation("evaluate_candidates: one seed batch per agent");
    std::vector<BatchResult> out(agents.size());
    std::vector<std::pair<int, int>> jobs;
    for (std::size_t c = 0; c < agents.size(); ++c) {
        out[c].tasks.resize(seeds[c].size());
        for (std::size_t i = 0; i < seeds[c].size(); ++i) jobs.emplace_back(static_cast<int>(c), static_cast<int>(i));
    }
    parallel_for(static_cast<int>(jobs.size()), workers, [&](int j) {
        const auto [c, i] = jobs[j];
        out[c].tasks[i] = run_task(experiment, agents[c], seeds[c][i]);
    });
    return out;
}

BatchResult evaluate_batch(const Experiment& experiment, const AgentSetup& agent,
                           const std::vector<std::uint64_t>& seeds, int workers) {
    return evaluate_candidates(experiment, {agent}, {seeds}, workers).front();
}

namespace {

std::vector<std::uint64_t> fitness_seeds(std::uint64_t master_seed, int generation, int candidate, int n) {
    std::vector<std::uint64_t> seeds(std::max(n, 0));
    for (int i = 0; i < n; ++i) {
        seeds[i] = derive_seed(Stream::Task, {master_seed, static_cast<std::uint64_t>(generation),
                                              static_cast<std::uint64_t>(candidate), static_cast<std::uint64_t>(i)});
    }
    return seeds;
}

FitnessRecord make_record(int generation, int candidate, const Eigen::VectorXd& theta, const BatchResult& batch) {
    FitnessRecord r;
    r.generation = generation;
    r.candidate_id = candidate;
    r.theta = theta;
    r.per_task_scores.reserve(batch.tasks.size());
    for (const auto& t : batch.tasks) r.per_task_scores.push_back(t.fitness);
    r.mean_fitness = batch.mean_fitness();
    return r;
}

} // namespace

FitnessRecord evaluate_fitness(const Experiment& experiment, const Eigen::VectorXd& theta, int n_tasks,
                               std::uint64_t master_seed, int generation, int candidate_id, int workers) {
    if (theta.size() != experiment.space().dim()) throw ContractViolation("evaluate_fitness: dimension mismatch");
    const auto batch = evaluate_batch(experiment, experiment.decode(theta),
                                      fitness_seeds(master_seed, generation, candidate_id, n_tasks), workers);
    return make_record(generation, candidate_id, theta, batch);
}

L2LResult run_l2l(const L2LConfig& config, const GenerationHook& on_generation) {
    const auto& exp = config.experiment;
    exp.validate();
    config.optimizer.validate();
    if (config.generations < 0) throw ConfigError("generations must be >= 0");
    if (config.n_tasks < 1) throw ConfigError("n_tasks must be >= 1");
    if (config.n_select < 1) throw ConfigError("n_select must be >= 1");
    if (config.n_eval < 1) throw ConfigError("n_eval must be >= 1");

    const auto& space = exp.space();
    const int dim = space.dim();
    const auto& opt = config.optimizer;
    Rng rng(derive_seed(Stream::Optimizer, {config.master_seed}));
    L2LResult result;

    auto evaluate_generation = [&](int generation, const std::vector<Eigen::VectorXd>& candidates) {
        std::vector<AgentSetup> agents;
        std::vector<std::vector<std::uint64_t>> seeds;
        agents.reserve(candidates.size());
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            agents.push_back(exp.decode(candidates[c]));
            seeds.push_back(fitness_seeds(config.master_seed, generation, static_cast<int>(c), config.n_tasks));
        }
        const auto batches = evaluate_candidates(exp, agents, seeds, config.workers);
        std::vector<FitnessRecord> records;
        std::vector<double> fitness;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            records.push_back(make_record(generation, static_cast<int>(c), candidates[c], batches[c]));
            fitness.push_back(records.back().mean_fitness);
        }
        if (on_generation) on_generation(records);
        result.history.insert(result.history.end(), records.begin(), records.end());
        return fitness;
    };

    std::vector<Eigen::VectorXd> finalists;
    const Eigen::VectorXd start = space.init_mean();
    const int G = config.generations;
    switch (opt.kind) {
    case OptimizerKind::CrossEntropy: {
        CeState state = ce_init(space);
        std::vector<Eigen::VectorXd> last;
        std::vector<double> last_fitness;
        for (int g = 0; g < G; ++g) {
            last = ce_sample(state, opt.pop, rng);
            last_fitness = evaluate_generation(g, last);
            state = ce_step(last, last_fitness, opt.elite_frac, opt.ce_eps, opt.ce_diagonal);
        }
        finalists.push_back(state.mean);
        if (G > 0) {
            for (int i : select_elites(last_fitness, opt.elite_frac)) finalists.push_back(last[i]);
        }
        break;
    }
    case OptimizerKind::EvolutionStrategies: {
        EsState state{start, opt.es_sigma, opt.es_learn_rate};
        for (int g = 0; g < G; ++g) {
            const auto eps = es_perturbations(opt.pop, dim, rng);
            std::vector<Eigen::VectorXd> candidates;
            candidates.reserve(eps.size());
            for (const auto& e : eps) candidates.push_back(space.clamp(state.base + state.sigma * e));
            const auto fitness = evaluate_generation(g, candidates);
            state = es_step(state, eps, fitness);
            state.base = space.clamp(state.base);
        }
        finalists.push_back(state.base);
        break;
    }
    case OptimizerKind::SimulatedAnnealing: {
        if (G == 0) {
            finalists.push_back(start);
            break;
        }
        std::vector<Eigen::VectorXd> init;
        for (int c = 0; c < opt.sa_chains; ++c) init.push_back(space.sample_init(rng));
        const auto f0 = evaluate_generation(0, init);
        SaState state;
        for (int c = 0; c < opt.sa_chains; ++c) state.chains.push_back({init[c], f0[c]});
        state.t0 = opt.sa_t0;
        state.t_end = opt.sa_t_end;
        state.step = opt.sa_step;
        state.schedule_steps = std::max(G - 2, 1);
        state.temperature = opt.sa_t0;
        for (int g = 1; g < G; ++g) {
            state = sa_step(state, rng, [&](const std::vector<Eigen::VectorXd>& c) { return evaluate_generation(g, c); });
        }
        for (const auto& chain : state.chains) finalists.push_back(chain.theta);
        break;
    }
    case OptimizerKind::GradientDescent: {
        GdState state{start, opt.gd_probe_eps, opt.gd_step, opt.gd_random_probes};
        for (int g = 0; g < G; ++g) {
            state = gd_step(state, [&](const std::vector<Eigen::VectorXd>& c) { return evaluate_generation(g, c); }, rng);
        }
        finalists.push_back(state.theta);
        break;
    }
    }

    // Final candidates are compared on a shared batch that no candidate was
    // trained on.
    const auto select = batch_seeds(Stream::Selection, config.master_seed, config.n_select);
    std::vector<AgentSetup> agents;
    for (const auto& f : finalists) agents.push_back(exp.decode(f));
    const auto batches = evaluate_candidates(exp, agents, std::vector(finalists.size(), select), config.workers);
    int best = 0;
    for (std::size_t i = 0; i < finalists.size(); ++i) {
        result.finalist_fitness.push_back(batches[i].mean_fitness());
        if (result.finalist_fitness[i] > result.finalist_fitness[best]) best = static_cast<int>(i);
    }
    result.finalists = finalists;
    result.best_theta = finalists[best];
    result.held_out = evaluate_batch(exp, exp.decode(result.best_theta), held_out_seeds(config.master_seed, config.n_eval),
                                     config.workers);
    return result;
}

BatchResult random_theta_baseline(const Experiment& experiment, const std::vector<std::uint64_t>& seeds,
                                  std::uint64_t draw_seed, int workers) {
    Rng rng(draw_seed);
    std::vector<AgentSetup> agents;
    std::vector<std::vector<std::uint64_t>> batches;
    for (auto s : seeds) {
        agents.push_back(experiment.decode(experiment.space().sample_random(rng)));
        batches.push_back({s});
    }
    const auto out = evaluate_candidates(experiment, agents, batches, workers);
    BatchResult merged;
    for (const auto& b : out) merged.tasks.push_back(b.tasks.front());
    return merged;
}

} // namespace nl2l
