#include "nl2l/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "nl2l/errors.hpp"

namespace nl2l {

using nlohmann::json;

const char* to_string(RuleKind kind) {
    switch (kind) {
    case RuleKind::Td1: return "td1";
    case RuleKind::TdLambda: return "tdlambda";
    case RuleKind::Ann: return "ann";
    }
    return "?";
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

double number(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
    return j[key].get<double>();
}

int integer(const json& j, const char* key, int fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(where + ": field '" + key + "' must be an integer");
    return j[key].get<int>();
}

std::string theta_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "theta_%02d", i);
    return buf;
}

} // namespace

RuleDescriptor RuleDescriptor::from_json(const json& j, const TaskFamily& family) {
    const std::string where = "rule";
    if (!j.is_object()) throw ConfigError("rule: expected an object");
    if (!j.contains("rule")) throw ConfigError("rule: missing required field 'rule'");
    const auto name = j["rule"].get<std::string>();
    RuleDescriptor d;
    d.td.gamma = family.is_mab() ? 1.0 : 0.9;
    if (name == "td1" || name == "tdlambda") {
        d.kind = name == "td1" ? RuleKind::Td1 : RuleKind::TdLambda;
        std::set<std::string> known{"rule", "alpha0", "alpha_decay", "gamma"};
        if (d.kind == RuleKind::TdLambda) known.insert("lambda");
        reject_unknown(j, known, where);
        d.td.alpha0 = number(j, "alpha0", d.td.alpha0, where);
        d.td.alpha_decay = number(j, "alpha_decay", d.td.alpha_decay, where);
        d.td.gamma = number(j, "gamma", d.td.gamma, where);
        d.td.lambda = number(j, "lambda", 0.0, where);
        d.td.validate();
    } else if (name == "ann") {
        d.kind = RuleKind::Ann;
        reject_unknown(j, {"rule", "theta", "out_scale", "output"}, where);
        if (j.contains("theta")) {
            const auto& th = j["theta"];
            if (!th.is_array() || th.size() != AnnRule::n_params) {
                throw ConfigError("rule: field 'theta' must hold exactly 50 numbers");
            }
            for (int i = 0; i < AnnRule::n_params; ++i) d.ann.theta[i] = th[i].get<double>();
        }
        d.ann.out_scale = number(j, "out_scale", 1.0, where);
        if (!(d.ann.out_scale > 0.0)) throw ConfigError("rule: field 'out_scale' must be positive");
        const auto out = j.value("output", std::string("linear"));
        if (out == "linear") d.ann.output = AnnOutput::Linear;
        else if (out == "tanh") d.ann.output = AnnOutput::Tanh;
        else throw ConfigError("rule: field 'output' must be 'linear' or 'tanh'");
    } else {
        throw ConfigError("rule: field 'rule' must be one of td1, tdlambda, ann");
    }
    return d;
}

json RuleDescriptor::to_json() const {
    json j;
    j["rule"] = nl2l::to_string(kind);
    if (kind == RuleKind::Ann) {
        j["theta"] = std::vector<double>(ann.theta.begin(), ann.theta.end());
        j["out_scale"] = ann.out_scale;
        j["output"] = ann.output == AnnOutput::Tanh ? "tanh" : "linear";
    } else {
        j["alpha0"] = td.alpha0;
        j["alpha_decay"] = td.alpha_decay;
        j["gamma"] = td.gamma;
        if (kind == RuleKind::TdLambda) j["lambda"] = td.lambda;
    }
    return j;
}

PlasticityRule RuleDescriptor::rule() const {
    switch (kind) {
    case RuleKind::Td1: return Td1Rule{td};
    case RuleKind::TdLambda: return TdLambdaRule{td};
    case RuleKind::Ann: return ann;
    }
    return Td1Rule{td};
}

EmulatorConfig emulator_from_json(const json& j) {
    const std::string where = "emulator";
    EmulatorConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ConfigError("emulator: expected an object");
    reject_unknown(j,
                   {"mode", "bits", "xi", "zeta", "autapse", "w_min", "w_max", "rescale", "rescale_period", "tau_m",
                    "v_thresh", "v_reset", "syn_delay", "select_timeout"},
                   where);
    const auto mode = j.value("mode", std::string("hardware"));
    if (mode == "hardware") c.mode = PrecisionMode::HardwareFidelity;
    else if (mode == "ideal") c.mode = PrecisionMode::Ideal;
    else throw ConfigError("emulator: field 'mode' must be 'hardware' or 'ideal'");
    c.bits = integer(j, "bits", c.bits, where);
    c.xi = number(j, "xi", c.xi, where);
    c.zeta = number(j, "zeta", c.zeta, where);
    c.autapse = number(j, "autapse", c.autapse, where);
    c.w_min = number(j, "w_min", c.w_min, where);
    c.w_max = number(j, "w_max", c.w_max, where);
    if (j.contains("rescale")) {
        if (!j["rescale"].is_boolean()) throw ConfigError("emulator: field 'rescale' must be a boolean");
        c.rescale_enabled = j["rescale"].get<bool>();
    }
    c.rescale_period = integer(j, "rescale_period", c.rescale_period, where);
    c.tau_m = number(j, "tau_m", c.tau_m, where);
    c.v_thresh = number(j, "v_thresh", c.v_thresh, where);
    c.v_reset = number(j, "v_reset", c.v_reset, where);
    c.syn_delay = integer(j, "syn_delay", c.syn_delay, where);
    c.select_timeout = integer(j, "select_timeout", c.select_timeout, where);
    c.validate();
    return c;
}

json emulator_to_json(const EmulatorConfig& c) {
    return json{{"mode", c.mode == PrecisionMode::Ideal ? "ideal" : "hardware"},
                {"bits", c.bits},
                {"xi", c.xi},
                {"zeta", c.zeta},
                {"autapse", c.autapse},
                {"w_min", c.w_min},
                {"w_max", c.w_max},
                {"rescale", c.rescale_enabled},
                {"rescale_period", c.rescale_period},
                {"tau_m", c.tau_m},
                {"v_thresh", c.v_thresh},
                {"v_reset", c.v_reset},
                {"syn_delay", c.syn_delay},
                {"select_timeout", c.select_timeout}};
}

ParamSpace make_param_space(RuleKind kind, int horizon) {
    std::vector<ParamSpec> specs;
    const ParamSpec xi{"xi", 0.0, 63.0, Encoding::Linear};
    const ParamSpec zeta{"zeta", 0.0, 63.0, Encoding::Linear};
    switch (kind) {
    case RuleKind::Td1:
        specs = {{"alpha0", 1e-3, 10.0, Encoding::Log}, {"alpha_decay", 0.0, 1.0, Encoding::Sigmoid}, xi, zeta};
        break;
    case RuleKind::TdLambda:
        specs = {{"alpha", 1e-3, 1.0, Encoding::Log},
                 {"gamma", 0.0, 1.0, Encoding::Sigmoid},
                 {"lambda", 0.0, 1.0, Encoding::Sigmoid},
                 xi,
                 zeta,
                 {"rescale_period", 1.0, static_cast<double>(std::max(horizon, 2)), Encoding::Log},
                 {"w_max", 0.0, 63.0, Encoding::Linear},
                 {"w_min", 0.0, 63.0, Encoding::Linear}};
        break;
    case RuleKind::Ann:
        for (int i = 0; i < AnnRule::n_params; ++i) {
            // Encoded N(0.5, 0.05^2) is N(0, 0.5^2) in weight space.
            specs.push_back({theta_name(i), -5.0, 5.0, Encoding::Linear, 0.5, 0.05, true});
        }
        specs.push_back(xi);
        specs.push_back(zeta);
        break;
    }
    return ParamSpace(std::move(specs));
}

Experiment::Experiment(TaskFamily family, RuleDescriptor rule, EmulatorConfig emulator, int horizon,
                       FitnessMode fitness)
    : family_(family),
      rule_(rule),
      emulator_(emulator),
      horizon_(horizon),
      fitness_(fitness),
      space_(make_param_space(rule.kind, horizon)) {}

Experiment Experiment::with_family(const TaskFamily& family) const {
    Experiment e = *this;
    e.family_ = family;
    return e;
}

void Experiment::validate() const {
    if (horizon_ < 0) throw ConfigError("horizon must be >= 0");
    emulator_.validate();
    check_capacity(family_.states(), family_.actions(), emulator_.mode);
    if (rule_.kind == RuleKind::Ann && !family_.is_mab()) {
        throw ConfigError("the ann rule requires a bandit task family");
    }
    if (rule_.kind != RuleKind::Ann) rule_.td.validate();
}

AgentSetup Experiment::fixed_agent() const {
    return {emulator_, rule_.rule()};
}

AgentSetup Experiment::decode(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd v = space_.decode(x);
    AgentSetup setup{emulator_, {}};
    auto& em = setup.emulator;
    RuleDescriptor d = rule_;
    switch (d.kind) {
    case RuleKind::Td1:
        d.td.alpha0 = v(0);
        d.td.alpha_decay = std::clamp(v(1), 1e-12, 1.0);
        em.xi = v(2);
        em.zeta = v(3);
        break;
    case RuleKind::TdLambda: {
        d.td.alpha0 = v(0);
        d.td.alpha_decay = 1.0;
        d.td.gamma = v(1);
        d.td.lambda = v(2);
        em.xi = v(3);
        em.zeta = v(4);
        em.rescale_period = std::clamp(static_cast<int>(std::lround(v(5))), 1, std::max(horizon_, 1));
        double hi = std::max(v(6), v(7));
        double lo = std::min(v(6), v(7));
        if (hi - lo < 1.0) {
            lo = std::clamp(0.5 * (hi + lo) - 0.5, 0.0, 62.0);
            hi = lo + 1.0;
        }
        em.w_max = hi;
        em.w_min = lo;
        break;
    }
    case RuleKind::Ann:
        for (int i = 0; i < AnnRule::n_params; ++i) d.ann.theta[i] = v(i);
        em.xi = v(AnnRule::n_params);
        em.zeta = v(AnnRule::n_params + 1);
        break;
    }
    setup.rule = d.rule();
    return setup;
}

Eigen::VectorXd Experiment::encode_fixed() const {
    Eigen::VectorXd v(space_.dim());
    switch (rule_.kind) {
    case RuleKind::Td1:
        v << rule_.td.alpha0, rule_.td.alpha_decay, emulator_.xi, emulator_.zeta;
        break;
    case RuleKind::TdLambda:
        v << rule_.td.alpha0, rule_.td.gamma, rule_.td.lambda, emulator_.xi, emulator_.zeta,
            static_cast<double>(emulator_.rescale_period), emulator_.w_max, emulator_.w_min;
        break;
    case RuleKind::Ann:
        for (int i = 0; i < AnnRule::n_params; ++i) v(i) = rule_.ann.theta[i];
        v(AnnRule::n_params) = emulator_.xi;
        v(AnnRule::n_params + 1) = emulator_.zeta;
        break;
    }
    for (int i = 0; i < space_.dim(); ++i) {
        const auto& s = space_.spec(i);
        if (s.encoding == Encoding::Log) v(i) = std::clamp(v(i), s.lo, s.hi);
    }
    return space_.encode(v);
}

double Experiment::fitness(const TaskInstance& task, const Trajectory& trajectory) const {
    if (fitness_ == FitnessMode::Normalized) return task.refs.normalize(trajectory.raw_return);
    return trajectory.raw_return;
}

} // namespace nl2l
