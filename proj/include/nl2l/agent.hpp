#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <json.hpp>

#include "nl2l/emulator.hpp"
#include "nl2l/environments.hpp"
#include "nl2l/hyperparams.hpp"
#include "nl2l/plasticity.hpp"

namespace nl2l {

enum class RuleKind { Td1, TdLambda, Ann };

const char* to_string(RuleKind kind);

/// Plasticity rule as written in a config:
/// {"rule":"td1","alpha0":..,"alpha_decay":..} | {"rule":"tdlambda",..} |
/// {"rule":"ann","theta":[50 floats],"out_scale":..}.
/// Values not covered by the optimized vector are taken from here.
struct RuleDescriptor {
    RuleKind kind = RuleKind::Td1;
    TdParams td;
    AnnRule ann;

    static RuleDescriptor from_json(const nlohmann::json& j, const TaskFamily& family);
    nlohmann::json to_json() const;
    PlasticityRule rule() const;
};

EmulatorConfig emulator_from_json(const nlohmann::json& j);
nlohmann::json emulator_to_json(const EmulatorConfig& config);

enum class FitnessMode { Raw, Normalized };

struct AgentSetup {
    EmulatorConfig emulator;
    PlasticityRule rule;
};

/// One learning-to-learn problem: which tasks, which rule, which emulator,
/// and which hyperparameters the outer loop controls.
///   td1       (alpha0, alpha_decay, xi, zeta)
///   tdlambda  (alpha, gamma, lambda, xi, zeta, rescale_period, w_max, w_min)
///   ann       (theta_00 .. theta_49, xi, zeta)
class Experiment {
public:
    Experiment() = default;
    Experiment(TaskFamily family, RuleDescriptor rule, EmulatorConfig emulator, int horizon,
               FitnessMode fitness = FitnessMode::Raw);

    const TaskFamily& family() const { return family_; }
    const RuleDescriptor& rule() const { return rule_; }
    const EmulatorConfig& emulator() const { return emulator_; }
    int horizon() const { return horizon_; }
    FitnessMode fitness_mode() const { return fitness_; }
    const ParamSpace& space() const { return space_; }

    /// Same experiment, evaluated on another task family.
    Experiment with_family(const TaskFamily& family) const;

    /// Maps an encoded hyperparameter vector onto emulator and rule settings.
    AgentSetup decode(const Eigen::VectorXd& x) const;
    /// The agent exactly as configured, without any optimized vector.
    AgentSetup fixed_agent() const;
    /// Encoded vector that reproduces the configured agent as closely as the bounds allow.
    Eigen::VectorXd encode_fixed() const;

    /// Fitness of one finished trial under the configured fitness mode.
    double fitness(const TaskInstance& task, const Trajectory& trajectory) const;

    /// Throws ConfigError or CapacityError on cross-field violations.
    void validate() const;

private:
    TaskFamily family_;
    RuleDescriptor rule_;
    EmulatorConfig emulator_;
    int horizon_ = 100;
    FitnessMode fitness_ = FitnessMode::Raw;
    ParamSpace space_;
};

ParamSpace make_param_space(RuleKind kind, int horizon);

} // namespace nl2l
