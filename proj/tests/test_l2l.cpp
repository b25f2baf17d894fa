#include <doctest.h>

#include <cmath>

#include "nl2l/errors.hpp"
#include "nl2l/l2l.hpp"
#include "nl2l/stats.hpp"

using namespace nl2l;

namespace {

Experiment td1_bandits(bool structured, int horizon = 50) {
    const auto fam = TaskFamily::mab(structured);
    return Experiment(fam, RuleDescriptor::from_json({{"rule", "td1"}}, fam), EmulatorConfig{}, horizon);
}

L2LConfig small_run(OptimizerKind kind) {
    L2LConfig c;
    c.experiment = td1_bandits(true, 30);
    c.optimizer.kind = kind;
    c.optimizer.pop = 8;
    c.optimizer.sa_chains = 4;
    c.generations = 3;
    c.n_tasks = 5;
    c.n_select = 10;
    c.n_eval = 20;
    c.master_seed = 11;
    return c;
}

void check_same(const L2LResult& a, const L2LResult& b) {
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].theta == b.history[i].theta);
        CHECK(a.history[i].per_task_scores == b.history[i].per_task_scores);
    }
    CHECK(a.best_theta == b.best_theta);
    CHECK(a.held_out.mean_fitness() == b.held_out.mean_fitness());
}

} // namespace

TEST_CASE("stats: mean, sem, quantile, bootstrap") {
    const std::vector<double> x{1, 2, 3, 4};
    CHECK(mean(x) == 2.5);
    CHECK(sem(x) == doctest::Approx(std::sqrt(1.6666666666666667 / 4)));
    CHECK(sem({5.0}) == 0.0);
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 4.0);
    CHECK(quantile(x, 0.5) == 2.5);
    const auto ci = bootstrap_mean_ci(x, 2000, 0.95, 3);
    CHECK(ci.lo <= 2.5);
    CHECK(ci.hi >= 2.5);
    const auto same = bootstrap_mean_ci(x, 2000, 0.95, 3);
    CHECK(same.lo == ci.lo);
    CHECK(same.hi == ci.hi);
}

TEST_CASE("run_task: certain bandit scores inside the normalization sandwich") {
    Mab m;
    m.p_arm = {1.0, 0.0};
    Td1Rule rule;
    rule.params = {1.0, 0.9, 1.0, 0.0};
    EmulatorConfig c;
    c.xi = 40;
    c.zeta = 30;
    const auto refs = compute_references(m, 100);
    Rng rng(4);
    const double raw = run_trial(m, rule, c, 100, rng).trajectory.raw_return;
    const double score = refs.normalize(raw);
    CHECK(score >= 0.0);
    CHECK(score <= 1.05);
}

TEST_CASE("evaluate_fitness is a pure function of its arguments") {
    const auto e = td1_bandits(true);
    Rng rng(1);
    const auto x = e.space().sample_random(rng);
    const auto a = evaluate_fitness(e, x, 6, 5, 2, 3, 1);
    const auto b = evaluate_fitness(e, x, 6, 5, 2, 3, 3);
    CHECK(a.per_task_scores == b.per_task_scores);
    CHECK(a.mean_fitness == b.mean_fitness);
    const auto c = evaluate_fitness(e, x, 6, 5, 2, 4, 1);
    CHECK(c.per_task_scores != a.per_task_scores);
    const auto one = evaluate_fitness(e, x, 1, 5, 0, 0);
    REQUIRE(one.per_task_scores.size() == 1);
}

TEST_CASE("batch seeds are deterministic and stream-separated") {
    CHECK(batch_seeds(Stream::Evaluation, 3, 5) == batch_seeds(Stream::Evaluation, 3, 5));
    CHECK(batch_seeds(Stream::Evaluation, 3, 5) != batch_seeds(Stream::Selection, 3, 5));
    CHECK(held_out_seeds(3, 5) == held_out_seeds(3, 5));
    CHECK(held_out_seeds(3, 5) != held_out_seeds(4, 5));
}

TEST_CASE("aggregate normalized score") {
    BatchResult b;
    b.tasks = {{1, 60, 50, 70, 60}, {2, 30, 20, 60, 30}};
    CHECK(b.normalized_score() == doctest::Approx(20.0 / 60.0));
    CHECK(b.mean_task_normalized() == doctest::Approx((0.5 + 0.25) / 2));
    CHECK(aggregate_normalized(b.tasks, {0, 0}) == doctest::Approx(0.5));
}

TEST_CASE("paired comparison of identical batches is zero") {
    const auto e = td1_bandits(true);
    const auto seeds = held_out_seeds(2, 40);
    const auto agent = e.decode(e.space().init_mean());
    const auto a = evaluate_batch(e, agent, seeds, 1);
    const auto cmp = compare_paired(a, a, 500, 1);
    CHECK(cmp.difference == 0.0);
    CHECK(cmp.ci.contains(0.0));
    auto other = a;
    other.tasks.pop_back();
    CHECK_THROWS(compare_paired(a, other, 10, 1));
}

TEST_CASE("run_l2l: zero generations evaluates the initial point") {
    for (auto kind : {OptimizerKind::CrossEntropy, OptimizerKind::EvolutionStrategies,
                      OptimizerKind::SimulatedAnnealing, OptimizerKind::GradientDescent}) {
        auto c = small_run(kind);
        c.generations = 0;
        const auto r = run_l2l(c);
        CHECK(r.history.empty());
        CHECK(r.best_theta == c.experiment.space().init_mean());
        CHECK(r.held_out.tasks.size() == 20);
    }
}

TEST_CASE("run_l2l: reproducible and independent of worker count") {
    for (auto kind : {OptimizerKind::CrossEntropy, OptimizerKind::EvolutionStrategies,
                      OptimizerKind::SimulatedAnnealing, OptimizerKind::GradientDescent}) {
        auto c = small_run(kind);
        const auto a = run_l2l(c);
        c.workers = 3;
        const auto b = run_l2l(c);
        check_same(a, b);
        const int per = c.optimizer.evaluations_per_generation(c.experiment.space().dim());
        CHECK(int(a.history.size()) == per * c.generations);
    }
}

TEST_CASE("run_l2l: generation hook sees each generation once") {
    auto c = small_run(OptimizerKind::CrossEntropy);
    int calls = 0;
    run_l2l(c, [&](const std::vector<FitnessRecord>& recs) {
        CHECK(recs.size() == 8);
        CHECK(recs.front().generation == calls);
        ++calls;
    });
    CHECK(calls == 3);
}

TEST_CASE("run_l2l: rejects invalid settings") {
    auto c = small_run(OptimizerKind::CrossEntropy);
    c.n_tasks = 0;
    CHECK_THROWS_AS(run_l2l(c), ConfigError);
}

TEST_CASE("random theta baseline is reproducible") {
    const auto e = td1_bandits(false);
    const auto seeds = held_out_seeds(1, 30);
    const auto a = random_theta_baseline(e, seeds, 9, 1);
    const auto b = random_theta_baseline(e, seeds, 9, 4);
    CHECK(a.normalized_score() == b.normalized_score());
    REQUIRE(a.tasks.size() == 30);
    for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(a.tasks[i].seed == seeds[i]);
}
