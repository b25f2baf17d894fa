#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nl2l/emulator.hpp"
#include "nl2l/errors.hpp"

using namespace nl2l;

namespace {

WeightMatrix bandit_weights(std::initializer_list<double> values, PrecisionMode mode = PrecisionMode::HardwareFidelity) {
    WeightMatrix w(1, static_cast<int>(values.size()), mode);
    int i = 0;
    for (double v : values) w.shadow()(0, i++) = v;
    w.requantize();
    return w;
}

} // namespace

TEST_CASE("quantize rounds to the nearest level and saturates") {
    CHECK(WeightMatrix::quantize(-3.0, 6) == 0);
    CHECK(WeightMatrix::quantize(0.49, 6) == 0);
    CHECK(WeightMatrix::quantize(0.51, 6) == 1);
    CHECK(WeightMatrix::quantize(62.6, 6) == 63);
    CHECK(WeightMatrix::quantize(400.0, 6) == 63);
    CHECK(WeightMatrix::quantize(300.0, 8) == 255);
    auto w = bandit_weights({10.4, 70.0});
    CHECK(w.effective(0, 0) == 10.0);
    CHECK(w.effective(0, 1) == 63.0);
    CHECK(w.shadow()(0, 1) == 70.0);
    auto ideal = bandit_weights({10.4, 70.0}, PrecisionMode::Ideal);
    CHECK(ideal.effective(0, 0) == 10.4);
}

TEST_CASE("select_action: a lone strong synapse always wins") {
    EmulatorConfig c;
    c.xi = 200.0;
    auto w = bandit_weights({0.0, 63.0, 0.0, 0.0});
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto out = select_action(w, c, 0, rng);
        CHECK(out.kind == SelectionCase::SingleSpike);
        CHECK(out.action == 1);
        CHECK(out.spikers == std::vector<int>{1});
    }
}

TEST_CASE("select_action: silent network times out uniformly") {
    EmulatorConfig c;
    auto w = bandit_weights({0.0, 0.0, 0.0, 0.0});
    Rng rng(2);
    std::array<int, 4> counts{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto out = select_action(w, c, 0, rng);
        REQUIRE(out.kind == SelectionCase::Timeout);
        counts[out.action]++;
    }
    for (int k : counts) CHECK(std::abs(k / double(n) - 0.25) < 0.02);
}

TEST_CASE("select_action: equal maxima without inhibition spike together") {
    EmulatorConfig c;
    c.xi = 0.0;
    auto w = bandit_weights({40.0, 40.0, 5.0});
    Rng rng(3);
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto out = select_action(w, c, 0, rng);
        REQUIRE(out.kind == SelectionCase::MultiSpike);
        REQUIRE(std::find(out.spikers.begin(), out.spikers.end(), 0) != out.spikers.end());
        REQUIRE(std::find(out.spikers.begin(), out.spikers.end(), 1) != out.spikers.end());
        REQUIRE(out.action != 2);
        first += out.action == 0;
    }
    CHECK(std::abs(first / double(n) - 0.5) < 0.01);
}

TEST_CASE("select_action: ideal mode spiker is the weight argmax") {
    EmulatorConfig c;
    c.mode = PrecisionMode::Ideal;
    c.xi = 63.0;
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        WeightMatrix w(1, 4, PrecisionMode::Ideal);
        for (int a = 0; a < 4; ++a) w.shadow()(0, a) = 60.0 * uniform01(rng);
        w.requantize();
        Eigen::Index best;
        w.view().row(0).maxCoeff(&best);
        const auto out = select_action(w, c, 0, rng);
        if (out.kind == SelectionCase::Timeout) continue;
        CHECK(std::find(out.spikers.begin(), out.spikers.end(), int(best)) != out.spikers.end());
        if (out.kind == SelectionCase::SingleSpike) CHECK(out.action == best);
    }
}

TEST_CASE("rescale_weights: worked example") {
    Eigen::MatrixXd w(1, 3);
    w << 10, 20, 30;
    const auto r = rescale_weights(w, 0.0, 63.0);
    CHECK(r.applied);
    CHECK(r.k == doctest::Approx(3.15));
    CHECK(r.d == doctest::Approx(-31.5));
    CHECK(w(0, 0) == 0.0);
    CHECK(w(0, 1) == doctest::Approx(31.5));
    CHECK(w(0, 2) == 63.0);
}

TEST_CASE("rescale_weights: identity and constant cases") {
    Eigen::MatrixXd w(2, 2);
    w << 0, 63, 10, 20;
    const Eigen::MatrixXd before = w;
    const auto r = rescale_weights(w, 0.0, 63.0);
    CHECK(r.k == 1.0);
    CHECK(r.d == 0.0);
    CHECK(w == before);
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(2, 2, 7.0);
    CHECK_FALSE(rescale_weights(flat, 0.0, 63.0).applied);
    CHECK(flat(0, 0) == 7.0);
}

TEST_CASE("rescale_weights: ordering, bounds and column argmax preserved") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const int rows = 1 + uniform_index(rng, 4), cols = 1 + uniform_index(rng, 5);
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 200.0 * uniform01(rng) - 50.0;
        if (w.size() < 2) continue;
        const Eigen::MatrixXd before = w;
        rescale_weights(w, 20.0, 50.0);
        CHECK(w.maxCoeff() == 50.0);
        CHECK(w.minCoeff() == 20.0);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                if (before(i) < before(j)) REQUIRE(w(i) <= w(j));
            }
        }
        for (int c = 0; c < cols; ++c) {
            Eigen::Index a, b;
            before.col(c).maxCoeff(&a);
            w.col(c).maxCoeff(&b);
            REQUIRE(a == b);
        }
    }
}

TEST_CASE("run_trial: empty horizon") {
    Mab m;
    m.p_arm = {0.2, 0.8};
    Rng rng(1);
    const auto res = run_trial(m, Td1Rule{}, EmulatorConfig{}, 0, rng);
    CHECK(res.trajectory.steps.empty());
    CHECK(res.trajectory.raw_return == 0.0);
}

TEST_CASE("run_trial: TD(1) locks onto a certain arm") {
    Mab m;
    m.p_arm = {1.0, 0.0};
    Td1Rule rule;
    rule.params = {1.0, 0.9, 1.0, 0.0};
    EmulatorConfig c;
    c.xi = 40.0;
    c.zeta = 30.0;
    double total = 0.0;
    const int n = 1000, T = 100;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed({std::uint64_t(i)}));
        total += run_trial(m, rule, c, T, rng).trajectory.raw_return;
    }
    CHECK(total / n >= 0.9 * T);
}

TEST_CASE("run_trial: same seed gives the same trajectory") {
    Rng s(3);
    const auto mdp = sample_mdp(2, 4, 0.9, s);
    TdLambdaRule rule;
    rule.params = {0.3, 0.99, 0.9, 0.5};
    Rng a(17), b(17);
    const auto r1 = run_trial(mdp, rule, EmulatorConfig{}, 300, a);
    const auto r2 = run_trial(mdp, rule, EmulatorConfig{}, 300, b);
    REQUIRE(r1.trajectory.steps.size() == r2.trajectory.steps.size());
    for (std::size_t i = 0; i < r1.trajectory.steps.size(); ++i) {
        CHECK(r1.trajectory.steps[i].action == r2.trajectory.steps[i].action);
        CHECK(r1.trajectory.steps[i].reward == r2.trajectory.steps[i].reward);
    }
    CHECK(r1.final_shadow == r2.final_shadow);
}

TEST_CASE("run_trial: observer sees every step and quantized view") {
    Mab m;
    m.p_arm = {0.3, 0.6};
    Rng rng(4);
    int calls = 0;
    bool integral = true;
    run_trial(m, Td1Rule{}, EmulatorConfig{}, 50, rng, [&](const Step& st, const WeightMatrix& w) {
        CHECK(st.t == calls);
        ++calls;
        for (Eigen::Index i = 0; i < w.view().size(); ++i) integral &= w.view()(i) == std::round(w.view()(i));
    });
    CHECK(calls == 50);
    CHECK(integral);
}

TEST_CASE("capacity and config validation") {
    CHECK_THROWS_AS(check_capacity(2, 31, PrecisionMode::HardwareFidelity), CapacityError);
    CHECK_NOTHROW(check_capacity(2, 30, PrecisionMode::HardwareFidelity));
    CHECK_NOTHROW(check_capacity(2, 31, PrecisionMode::Ideal));
    EmulatorConfig c;
    c.w_min = 50;
    c.w_max = 20;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    Rng s(1);
    const auto big = sample_mdp(20, 20, 0.9, s);
    Rng rng(1);
    CHECK_THROWS_AS(run_trial(big, Td1Rule{}, EmulatorConfig{}, 5, rng), CapacityError);
}
