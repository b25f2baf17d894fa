#include <doctest.h>

#include <cmath>

#include "nl2l/agent.hpp"
#include "nl2l/errors.hpp"
#include "nl2l/hyperparams.hpp"

using namespace nl2l;

TEST_CASE("ParamSpace: encodings round trip") {
    ParamSpace space({{"lin", -2.0, 6.0, Encoding::Linear},
                      {"log", 1e-3, 10.0, Encoding::Log},
                      {"sig", 0.0, 1.0, Encoding::Sigmoid}});
    CHECK(space.decode(0, 0.25) == doctest::Approx(0.0));
    CHECK(space.decode(1, 0.0) == doctest::Approx(1e-3));
    CHECK(space.decode(1, 1.0) == doctest::Approx(10.0));
    CHECK(space.decode(1, 0.75) == doctest::Approx(1.0));
    CHECK(space.decode(2, 0.5) == doctest::Approx(0.5));
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        Eigen::VectorXd x(3);
        for (int k = 0; k < 3; ++k) x(k) = uniform01(rng);
        const Eigen::VectorXd back = space.encode(space.decode(x));
        CHECK((back - x).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(space.find("log") == 1);
    CHECK(space.find("none") == -1);
}

TEST_CASE("ParamSpace: clamp and sampling stay in the box") {
    const auto space = make_param_space(RuleKind::TdLambda, 200);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto x = space.sample_random(rng);
        CHECK(x.minCoeff() >= 0.0);
        CHECK(x.maxCoeff() <= 1.0);
    }
    Eigen::VectorXd wild = Eigen::VectorXd::LinSpaced(space.dim(), -3.0, 3.0);
    const auto c = space.clamp(wild);
    CHECK(c.minCoeff() == 0.0);
    CHECK(c.maxCoeff() == 1.0);
}

TEST_CASE("Parameter spaces have the documented layout") {
    CHECK(make_param_space(RuleKind::Td1, 100).dim() == 4);
    CHECK(make_param_space(RuleKind::TdLambda, 100).dim() == 8);
    const auto ann = make_param_space(RuleKind::Ann, 100);
    CHECK(ann.dim() == 52);
    CHECK(ann.names().back() == "zeta");
    CHECK(ann.decode(0, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("RuleDescriptor: parsing, defaults and strictness") {
    const auto mab = TaskFamily::mab(true);
    const auto td = RuleDescriptor::from_json({{"rule", "td1"}, {"alpha0", 0.3}}, mab);
    CHECK(td.kind == RuleKind::Td1);
    CHECK(td.td.alpha0 == 0.3);
    CHECK(td.td.gamma == 1.0);
    const auto tl = RuleDescriptor::from_json({{"rule", "tdlambda"}}, TaskFamily::mdp(2, 4));
    CHECK(tl.td.gamma == 0.9);
    CHECK_THROWS_AS(RuleDescriptor::from_json({{"rule", "td1"}, {"alpha", 0.3}}, mab), ConfigError);
    CHECK_THROWS_AS(RuleDescriptor::from_json({{"rule", "hebb"}}, mab), ConfigError);
    const auto ann = RuleDescriptor::from_json({{"rule", "ann"}, {"out_scale", 60}, {"output", "tanh"}}, mab);
    CHECK(ann.ann.out_scale == 60.0);
    CHECK(ann.ann.output == AnnOutput::Tanh);
    const auto again = RuleDescriptor::from_json(ann.to_json(), mab);
    CHECK(again.ann.theta == ann.ann.theta);
    CHECK(again.ann.out_scale == 60.0);
}

TEST_CASE("Emulator json round trip") {
    EmulatorConfig c;
    c.mode = PrecisionMode::Ideal;
    c.xi = 12.5;
    c.rescale_enabled = false;
    c.w_min = 3;
    const auto back = emulator_from_json(emulator_to_json(c));
    CHECK(back.mode == PrecisionMode::Ideal);
    CHECK(back.xi == 12.5);
    CHECK_FALSE(back.rescale_enabled);
    CHECK(back.w_min == 3.0);
    CHECK_THROWS_AS(emulator_from_json({{"threshold", 3}}), ConfigError);
    CHECK_THROWS_AS(emulator_from_json({{"w_min", 60}, {"w_max", 10}}), ConfigError);
}

TEST_CASE("Experiment: decode maps onto rule and emulator") {
    const auto fam = TaskFamily::mab(true);
    Experiment e(fam, RuleDescriptor::from_json({{"rule", "td1"}}, fam), EmulatorConfig{}, 100);
    Eigen::VectorXd v(4);
    v << 0.5, 0.9, 40.0, 20.0;
    const auto setup = e.decode(e.space().encode(v));
    const auto& rule = std::get<Td1Rule>(setup.rule);
    CHECK(rule.params.alpha0 == doctest::Approx(0.5));
    CHECK(rule.params.alpha_decay == doctest::Approx(0.9));
    CHECK(setup.emulator.xi == doctest::Approx(40.0));
    CHECK(setup.emulator.zeta == doctest::Approx(20.0));
}

TEST_CASE("Experiment: TD(lambda) weight range is ordered with a gap") {
    const auto fam = TaskFamily::mdp(2, 4);
    Experiment e(fam, RuleDescriptor::from_json({{"rule", "tdlambda"}}, fam), EmulatorConfig{}, 200);
    Eigen::VectorXd v(8);
    v << 0.1, 0.9, 0.5, 10, 10, 20, 10.0, 40.0;
    auto em = e.decode(e.space().encode(v)).emulator;
    CHECK(em.w_min == doctest::Approx(10.0));
    CHECK(em.w_max == doctest::Approx(40.0));
    CHECK(em.rescale_period == 20);
    v(6) = 30.2;
    v(7) = 30.0;
    em = e.decode(e.space().encode(v)).emulator;
    CHECK(em.w_max - em.w_min == doctest::Approx(1.0));
    CHECK_NOTHROW(em.validate());
    Rng rng(3);
    for (int i = 0; i < 500; ++i) CHECK_NOTHROW(e.decode(e.space().sample_random(rng)).emulator.validate());
}

TEST_CASE("Experiment: validation of cross-field constraints") {
    const auto mdp = TaskFamily::mdp(2, 4);
    Experiment ann(mdp, RuleDescriptor::from_json({{"rule", "ann"}}, TaskFamily::mab(true)), EmulatorConfig{}, 50);
    CHECK_THROWS_AS(ann.validate(), ConfigError);
    const auto huge = TaskFamily::mdp(16, 17);
    Experiment big(huge, RuleDescriptor::from_json({{"rule", "tdlambda"}}, huge), EmulatorConfig{}, 50);
    CHECK_THROWS_AS(big.validate(), CapacityError);
}

TEST_CASE("Experiment: encode_fixed reproduces the configured agent") {
    const auto fam = TaskFamily::mab(false);
    auto rule = RuleDescriptor::from_json({{"rule", "td1"}, {"alpha0", 0.7}, {"alpha_decay", 0.95}}, fam);
    EmulatorConfig em;
    em.xi = 33;
    em.zeta = 11;
    Experiment e(fam, rule, em, 100);
    const auto setup = e.decode(e.encode_fixed());
    CHECK(std::get<Td1Rule>(setup.rule).params.alpha0 == doctest::Approx(0.7));
    CHECK(std::get<Td1Rule>(setup.rule).params.alpha_decay == doctest::Approx(0.95));
    CHECK(setup.emulator.xi == doctest::Approx(33.0));
    CHECK(setup.emulator.zeta == doctest::Approx(11.0));
}
