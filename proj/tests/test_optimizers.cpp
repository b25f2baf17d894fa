#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nl2l/errors.hpp"
#include "nl2l/optimizers.hpp"

using namespace nl2l;

namespace {

ParamSpace unit_box(int dim) {
    std::vector<ParamSpec> specs;
    for (int i = 0; i < dim; ++i) specs.push_back({"x" + std::to_string(i), 0.0, 1.0, Encoding::Linear, 0.5, 0.25});
    return ParamSpace(specs);
}

} // namespace

TEST_CASE("CE: elite mean is the sample mean") {
    std::vector<Eigen::VectorXd> c{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2), Eigen::Vector2d(9, 9),
                                   Eigen::Vector2d(9, 8), Eigen::Vector2d(7, 7), Eigen::Vector2d(8, 8),
                                   Eigen::Vector2d(5, 5), Eigen::Vector2d(6, 6)};
    std::vector<double> f{10, 9, 0, 0, 0, 0, 0, 0};
    const auto s = ce_step(c, f, 0.25);
    CHECK(s.mean(0) == doctest::Approx(1.0));
    CHECK(s.mean(1) == doctest::Approx(1.0));
    CHECK(s.cov(0, 0) == doctest::Approx(1.0 + 1e-6));
    const auto again = ce_step(c, f, 0.25);
    CHECK(again.mean == s.mean);
    CHECK(again.cov == s.cov);
    CHECK_THROWS_AS(ce_step(c, f, 0.1), ContractViolation);
}

TEST_CASE("CE: elites are the best, ties keep order") {
    const auto e = select_elites({1.0, 5.0, 5.0, 0.0, 3.0}, 0.5);
    REQUIRE(e.size() == 3);
    CHECK(e[0] == 1);
    CHECK(e[1] == 2);
    CHECK(e[2] == 4);
}

TEST_CASE("CE: converges on a noiseless quadratic") {
    const int dim = 2;
    Eigen::VectorXd target(dim);
    target << 0.2, 0.7;
    Rng rng(123);
    auto state = ce_init(unit_box(dim));
    double best_so_far = -1e300;
    int reached = -1;
    for (int g = 0; g < 30; ++g) {
        const auto cands = ce_sample(state, 32, rng);
        std::vector<double> f;
        for (const auto& c : cands) f.push_back(-(c - target).squaredNorm());
        const double gen_best = *std::max_element(f.begin(), f.end());
        CHECK(std::max(best_so_far, gen_best) >= best_so_far);
        best_so_far = std::max(best_so_far, gen_best);
        state = ce_step(cands, f, 0.25);
        if (reached < 0 && (state.mean - target).norm() <= 0.05) reached = g + 1;
    }
    CHECK(reached > 0);
    CHECK(reached <= 30);
    CHECK((state.mean - target).norm() <= 0.05);
}

TEST_CASE("CE: samples stay in the box") {
    Rng rng(7);
    CeState s{Eigen::Vector3d(0.95, 0.05, 0.5), Eigen::Matrix3d::Identity()};
    for (const auto& c : ce_sample(s, 200, rng)) {
        CHECK(c.minCoeff() >= 0.0);
        CHECK(c.maxCoeff() <= 1.0);
    }
}

TEST_CASE("ES: flat fitness leaves the base unchanged") {
    Rng rng(1);
    const auto eps = es_perturbations(8, 3, rng);
    EsState s{Eigen::Vector3d(0.3, 0.4, 0.5), 0.1, 0.05};
    const auto next = es_step(s, eps, std::vector<double>(8, 2.0));
    CHECK(next.base == s.base);
}

TEST_CASE("ES: perturbations are mirrored") {
    Rng rng(2);
    const auto eps = es_perturbations(6, 4, rng);
    REQUIRE(eps.size() == 6);
    for (int i = 0; i < 6; i += 2) CHECK(eps[i] == -eps[i + 1]);
    CHECK_THROWS_AS(es_perturbations(5, 4, rng), ContractViolation);
}

TEST_CASE("ES: better mirror wins") {
    Rng rng(3);
    const auto eps = es_perturbations(2, 3, rng);
    EsState s{Eigen::Vector3d::Zero(), 0.1, 0.05};
    const auto next = es_step(s, eps, {1.0, 0.0});
    CHECK((next.base - s.base).dot(eps[0]) > 0.0);
}

TEST_CASE("ES: update follows a linear landscape") {
    const int dim = 10;
    Rng rng(2024);
    Eigen::VectorXd c(dim);
    for (int i = 0; i < dim; ++i) c(i) = standard_normal(rng);
    const auto eps = es_perturbations(512, dim, rng);
    EsState s{Eigen::VectorXd::Constant(dim, 0.5), 0.1, 0.05};
    std::vector<double> f;
    for (const auto& e : eps) f.push_back(c.dot(s.base + s.sigma * e));
    const auto next = es_step(s, eps, f);
    const Eigen::VectorXd d = next.base - s.base;
    CHECK(d.dot(c) / (d.norm() * c.norm()) > 0.9);
}

TEST_CASE("centered ranks: range, ties and invariance") {
    const auto r = centered_ranks({3.0, 1.0, 2.0});
    CHECK(r[0] == 0.5);
    CHECK(r[1] == -0.5);
    CHECK(r[2] == 0.0);
    const auto t = centered_ranks({1.0, 1.0, 4.0, 0.0});
    CHECK(t[0] == t[1]);
    const auto flat = centered_ranks({2.0, 2.0, 2.0});
    for (double v : flat) CHECK(v == 0.0);
    Rng rng(4);
    std::vector<double> x(50);
    for (auto& v : x) v = standard_normal(rng);
    std::vector<double> y;
    for (double v : x) y.push_back(std::exp(3.0 * v) + 7.0);
    CHECK(centered_ranks(x) == centered_ranks(y));
}

TEST_CASE("SA: acceptance rule") {
    CHECK(sa_acceptance(2.0, 1.0, 0.5) == 1.0);
    CHECK(sa_acceptance(1.0, 1.0, 0.5) == 1.0);
    const double T = 0.37;
    CHECK(sa_acceptance(1.0 - T * std::log(2.0), 1.0, T) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sa_acceptance(0.0, 1.0, 1e-9) < 1e-100);
    CHECK(sa_acceptance(0.0, 1.0, 0.0) == 0.0);
}

TEST_CASE("SA: linear temperature schedule") {
    SaState s;
    s.t0 = 2.0;
    s.t_end = 0.2;
    s.schedule_steps = 9;
    CHECK(sa_temperature(s, 0) == 2.0);
    CHECK(sa_temperature(s, 9) == doctest::Approx(0.2));
    CHECK(sa_temperature(s, 3) == doctest::Approx(1.4));
    CHECK(sa_temperature(s, 20) == doctest::Approx(0.2));
}

TEST_CASE("SA: improving proposals are always taken") {
    SaState s;
    s.chains = {{Eigen::Vector2d(0.5, 0.5), -100.0}, {Eigen::Vector2d(0.2, 0.8), -100.0}};
    s.schedule_steps = 10;
    Rng rng(5);
    std::vector<Eigen::VectorXd> proposals;
    const auto next = sa_step(
        s, rng,
        [](const std::vector<Eigen::VectorXd>& xs) {
            return std::vector<double>(xs.size(), 0.0);
        },
        &proposals);
    REQUIRE(proposals.size() == 2);
    CHECK(next.chains[0].theta == proposals[0]);
    CHECK(next.chains[1].theta == proposals[1]);
    CHECK(next.chains[0].fitness == 0.0);
    CHECK(next.temperature < s.temperature);
}

TEST_CASE("GD: exact gradient of a linear function") {
    Eigen::VectorXd c(5);
    c << 0.3, -1.2, 2.0, 0.0, 0.7;
    GdState s{Eigen::VectorXd::Constant(5, 0.5), 0.01, 0.0};
    Rng rng(1);
    std::vector<Eigen::VectorXd> dirs;
    const auto probes = gd_probe_points(s, rng, &dirs);
    std::vector<double> f;
    for (const auto& p : probes) f.push_back(c.dot(p));
    const auto g = gd_gradient(s, dirs, f);
    CHECK((g - c).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("GD: zero step keeps theta and a bowl improves monotonically") {
    const Eigen::Vector3d target(0.3, 0.6, 0.8);
    auto bowl = [&](const std::vector<Eigen::VectorXd>& xs) {
        std::vector<double> f;
        for (const auto& x : xs) f.push_back(-(x - target).squaredNorm());
        return f;
    };
    Rng rng(2);
    GdState frozen{Eigen::Vector3d(0.9, 0.1, 0.1), 0.01, 0.0};
    CHECK(gd_step(frozen, bowl, rng).theta == frozen.theta);

    GdState s{Eigen::Vector3d(0.9, 0.1, 0.1), 0.01, 0.2};
    double prev = -(s.theta - target).squaredNorm();
    for (int i = 0; i < 40; ++i) {
        s = gd_step(s, bowl, rng);
        const double now = -(s.theta - target).squaredNorm();
        CHECK(now >= prev);
        prev = now;
    }
    CHECK((s.theta - target).norm() < 0.01);
}

TEST_CASE("OptimizerConfig: parsing and budgets") {
    const auto ce = OptimizerConfig::from_json({{"name", "ce"}, {"pop", 16}});
    CHECK(ce.kind == OptimizerKind::CrossEntropy);
    CHECK(ce.evaluations_per_generation(4) == 16);
    const auto gd = OptimizerConfig::from_json({{"name", "gd"}});
    CHECK(gd.evaluations_per_generation(4) == 8);
    const auto sa = OptimizerConfig::from_json({{"name", "sa"}, {"sa_chains", 5}});
    CHECK(sa.evaluations_per_generation(4) == 5);
    CHECK_THROWS_AS(OptimizerConfig::from_json({{"name", "pso"}}), ConfigError);
    CHECK_THROWS_AS(OptimizerConfig::from_json({{"name", "ce"}, {"population", 3}}), ConfigError);
    const auto back = OptimizerConfig::from_json(ce.to_json());
    CHECK(back.pop == 16);
}
