#include "nl2l/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nl2l/analysis.hpp"
#include "nl2l/baselines.hpp"
#include "nl2l/errors.hpp"
#include "nl2l/parallel.hpp"
#include "nl2l/stats.hpp"

namespace nl2l {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_u64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%" PRIu64, v);
    return buf;
}

/// RFC 4180 writer: CRLF line ends, fields quoted when they need it.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) {
        const fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        out_.open(path, std::ios::binary);
        if (!out_) throw Error("cannot open '" + path + "' for writing");
        row(header);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(fields[i]);
        }
        out_ << "\r\n";
    }

    void flush() { out_.flush(); }

private:
    static std::string quote(const std::string& f) {
        if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
        std::string q = "\"";
        for (char c : f) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    }

    std::ofstream out_;
};

void write_json(const std::string& path, const json& j) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void say(const RunOptions& options, const std::string& line) {
    if (options.log) options.log(line);
}

std::string join(const fs::path& dir, const char* name) {
    return (dir / name).string();
}

// ---------------------------------------------------------------------------
// Minimal self-contained SVG charts

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

void write_line_svg(const std::string& path, const std::string& title, const std::vector<Series>& series,
                    const std::string& x_label, const std::string& y_label) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << x_label << "</text>\n";
    o << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2 << ")\">"
      << y_label << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << py(y0) << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y0)
      << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << py(y1) + 8 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y1)
      << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 7];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
        o << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << color
          << "\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << o.str();
}

void write_bar_svg(const std::string& path, const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<double>& values, const std::vector<Interval>& spans) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        lo = std::min({lo, values[i], spans[i].lo});
        hi = std::max({hi, values[i], spans[i].hi});
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const double W = 120.0 + 90.0 * values.size(), H = 360, L = 60, T = 40, B = 50;
    auto py = [&](double v) { return H - B - (v - lo) / (hi - lo) * (H - T - B); };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - 20 << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = L + 20 + 90.0 * i;
        const double top = py(std::max(values[i], 0.0));
        const double bottom = py(std::min(values[i], 0.0));
        o << "<rect x=\"" << x << "\" y=\"" << top << "\" width=\"50\" height=\"" << bottom - top << "\" fill=\""
          << kPalette[i % 7] << "\"/>\n";
        o << "<line x1=\"" << x + 25 << "\" y1=\"" << py(spans[i].lo) << "\" x2=\"" << x + 25 << "\" y2=\""
          << py(spans[i].hi) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << x + 25 << "\" y=\"" << H - 30 << "\" text-anchor=\"middle\" font-size=\"12\">"
          << labels[i] << "</text>\n";
        o << "<text x=\"" << x + 25 << "\" y=\"" << top - 4 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << fmt(values[i]) << "</text>\n";
    }
    o << "</svg>\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << o.str();
}

// ---------------------------------------------------------------------------

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError(where + "unknown field '" + key + "'");
    }
}

int positive_int(const json& j, const char* key, int fallback, int min_value) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("field '") + key + "' must be an integer");
    const int v = j[key].get<int>();
    if (v < min_value) {
        throw ConfigError(std::string("field '") + key + "' must be >= " + std::to_string(min_value));
    }
    return v;
}

RuleDescriptor descriptor_of(const RuleDescriptor& base, const PlasticityRule& rule) {
    RuleDescriptor d = base;
    if (const auto* r = std::get_if<Td1Rule>(&rule)) d.td = r->params;
    if (const auto* r = std::get_if<TdLambdaRule>(&rule)) d.td = r->params;
    if (const auto* r = std::get_if<AnnRule>(&rule)) d.ann = *r;
    return d;
}

json theta_json(const Experiment& exp, const Eigen::VectorXd& encoded) {
    const auto values = exp.space().decode(encoded);
    json named = json::object();
    for (int i = 0; i < exp.space().dim(); ++i) named[exp.space().spec(i).name] = values(i);
    return named;
}

void write_eval_rows(CsvWriter& csv, const std::string& hash, const std::string& agent, const BatchResult& batch) {
    for (const auto& t : batch.tasks) {
        csv.row({hash, agent, fmt_u64(t.seed), fmt(t.raw), fmt(t.random_ref), fmt(t.optimal_ref),
                 fmt(t.normalized())});
    }
}

const std::vector<std::string> kEvalHeader{"config_hash",  "agent",       "task_seed",       "raw_return",
                                           "random_ref",   "optimal_ref", "normalized_score"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(j,
                   {"name", "description", "family", "rule", "horizon", "emulator", "mode", "optimizer",
                    "generations", "n_tasks", "n_select", "n_eval", "master_seed", "output_dir", "fitness", "gittins",
                    "compare", "curves", "analysis"},
                   "config: ");
    for (const char* key : {"family", "rule", "horizon"}) {
        if (!j.contains(key)) throw ConfigError(std::string("config: missing required field '") + key + "'");
    }
    ExperimentConfig c;
    const auto family = TaskFamily::from_json(j["family"]);
    const auto rule = RuleDescriptor::from_json(j["rule"], family);
    auto emulator = emulator_from_json(j.value("emulator", json()));
    if (j.contains("mode")) {
        const auto mode = j["mode"].get<std::string>();
        if (mode == "hardware") emulator.mode = PrecisionMode::HardwareFidelity;
        else if (mode == "ideal") emulator.mode = PrecisionMode::Ideal;
        else throw ConfigError("config: field 'mode' must be 'hardware' or 'ideal'");
    }
    const int horizon = positive_int(j, "horizon", 100, 1);
    FitnessMode fitness = FitnessMode::Raw;
    const auto fitness_name = j.value("fitness", std::string("raw"));
    if (fitness_name == "normalized") fitness = FitnessMode::Normalized;
    else if (fitness_name != "raw") throw ConfigError("config: field 'fitness' must be 'raw' or 'normalized'");
    c.experiment = Experiment(family, rule, emulator, horizon, fitness);
    c.experiment.validate();

    c.optimizer = j.contains("optimizer") ? OptimizerConfig::from_json(j["optimizer"]) : OptimizerConfig{};
    c.generations = positive_int(j, "generations", c.generations, 0);
    c.n_tasks = positive_int(j, "n_tasks", c.n_tasks, 1);
    c.n_select = positive_int(j, "n_select", c.n_select, 1);
    c.n_eval = positive_int(j, "n_eval", c.n_eval, 1);
    if (j.contains("master_seed")) {
        const auto& ms = j["master_seed"];
        if (!ms.is_number_integer() || (!ms.is_number_unsigned() && ms.get<std::int64_t>() < 0)) {
            throw ConfigError("config: field 'master_seed' must be a non-negative integer");
        }
        c.master_seed = j["master_seed"].get<std::uint64_t>();
    }
    c.output_dir = j.value("output_dir", c.output_dir);

    if (j.contains("gittins")) {
        const auto& g = j["gittins"];
        reject_unknown(g, {"discount", "depth"}, "gittins: ");
        c.gittins_discount = g.value("discount", c.gittins_discount);
        c.gittins_depth = positive_int(g, "depth", c.gittins_depth, 1);
        if (!(c.gittins_discount > 0.0 && c.gittins_discount < 1.0)) {
            throw ConfigError("gittins: field 'discount' must lie in (0, 1)");
        }
    }
    if (j.contains("compare")) {
        const auto& cj = j["compare"];
        reject_unknown(cj, {"optimizers", "budget", "seeds"}, "compare: ");
        if (!cj.contains("optimizers")) throw ConfigError("compare: missing required field 'optimizers'");
        if (!cj.contains("budget")) throw ConfigError("compare: missing required field 'budget'");
        CompareSettings s;
        for (const auto& o : cj["optimizers"]) {
            json entry = o;
            std::optional<int> generations;
            if (entry.contains("generations")) {
                generations = entry["generations"].get<int>();
                entry.erase("generations");
            }
            s.optimizers.push_back(OptimizerConfig::from_json(entry));
            if (generations) {
                const int used = *generations * s.optimizers.back().evaluations_per_generation(c.experiment.space().dim());
                if (used != cj["budget"].get<int>()) {
                    throw ConfigError("compare: optimizer '" + std::string(to_string(s.optimizers.back().kind)) +
                                      "' spends " + std::to_string(used) + " evaluations, budget is " +
                                      std::to_string(cj["budget"].get<int>()));
                }
            }
        }
        if (s.optimizers.size() < 2) throw ConfigError("compare: name at least two optimizers");
        s.budget = positive_int(cj, "budget", 0, 0);
        for (const auto& o : s.optimizers) generations_for_budget(o, c.experiment.space().dim(), s.budget);
        if (cj.contains("seeds")) s.seeds = cj["seeds"].get<std::vector<std::uint64_t>>();
        else s.seeds = {c.master_seed};
        c.compare = s;
    }
    if (j.contains("curves")) {
        const auto& cj = j["curves"];
        reject_unknown(cj, {"n_eval", "policies"}, "curves: ");
        c.curves.n_eval = positive_int(cj, "n_eval", 0, 0);
        if (cj.contains("policies")) c.curves.policies = cj["policies"].get<std::vector<std::string>>();
        for (const auto& p : c.curves.policies) {
            if (p != "agent" && p != "random_theta" && p != "random" && p != "oracle" && p != "gittins") {
                throw ConfigError("curves: unknown policy '" + p + "'");
            }
            if (p == "gittins" && !family.is_mab()) throw ConfigError("curves: gittins needs a bandit family");
        }
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        reject_unknown(a, {"n_samples", "n_inner", "grid_size", "n_marginal", "inputs", "trajectory_tasks"},
                       "analysis: ");
        c.analysis.n_samples = positive_int(a, "n_samples", c.analysis.n_samples, 1000);
        c.analysis.n_inner = positive_int(a, "n_inner", c.analysis.n_inner, 2);
        c.analysis.grid_size = positive_int(a, "grid_size", c.analysis.grid_size, 2);
        c.analysis.n_marginal = positive_int(a, "n_marginal", c.analysis.n_marginal, 1);
        c.analysis.inputs = a.value("inputs", c.analysis.inputs);
        if (c.analysis.inputs != "idealized" && c.analysis.inputs != "trajectory") {
            throw ConfigError("analysis: field 'inputs' must be 'idealized' or 'trajectory'");
        }
        c.analysis.trajectory_tasks = positive_int(a, "trajectory_tasks", c.analysis.trajectory_tasks, 1);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_json(read_json(path));
}

json ExperimentConfig::to_json() const {
    const auto& e = experiment;
    json j{{"family", e.family().to_json()},
           {"rule", e.rule().to_json()},
           {"horizon", e.horizon()},
           {"emulator", emulator_to_json(e.emulator())},
           {"fitness", e.fitness_mode() == FitnessMode::Normalized ? "normalized" : "raw"},
           {"optimizer", optimizer.to_json()},
           {"generations", generations},
           {"n_tasks", n_tasks},
           {"n_select", n_select},
           {"n_eval", n_eval},
           {"master_seed", master_seed},
           {"gittins", {{"discount", gittins_discount}, {"depth", gittins_depth}}},
           {"curves", {{"n_eval", curves.n_eval}, {"policies", curves.policies}}},
           {"analysis",
            {{"n_samples", analysis.n_samples},
             {"n_inner", analysis.n_inner},
             {"grid_size", analysis.grid_size},
             {"n_marginal", analysis.n_marginal},
             {"inputs", analysis.inputs},
             {"trajectory_tasks", analysis.trajectory_tasks}}}};
    if (compare) {
        json opts = json::array();
        for (const auto& o : compare->optimizers) opts.push_back(o.to_json());
        j["compare"] = {{"optimizers", opts}, {"budget", compare->budget}, {"seeds", compare->seeds}};
    }
    return j;
}

std::string ExperimentConfig::hash() const {
    const auto text = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

L2LConfig ExperimentConfig::l2l(int workers) const {
    L2LConfig c;
    c.experiment = experiment;
    c.optimizer = optimizer;
    c.generations = generations;
    c.n_tasks = n_tasks;
    c.n_select = n_select;
    c.n_eval = n_eval;
    c.master_seed = master_seed;
    c.workers = workers;
    return c;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, std::uint64_t config_seed) {
    if (cli_seed) return *cli_seed;
    if (const char* env = std::getenv("NEURO_L2L_SEED"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw ConfigError("NEURO_L2L_SEED must be an unsigned integer");
        return v;
    }
    return config_seed;
}

int generations_for_budget(const OptimizerConfig& optimizer, int dim, int budget) {
    const int per = optimizer.evaluations_per_generation(dim);
    if (budget < 0) throw ConfigError("compare: budget must be >= 0");
    if (per <= 0 || budget % per != 0) {
        throw ConfigError("compare: budget " + std::to_string(budget) + " is not a whole number of '" +
                          to_string(optimizer.kind) + "' generations (" + std::to_string(per) +
                          " evaluations each)");
    }
    return budget / per;
}

ThetaArtifact ThetaArtifact::load(const std::string& path) {
    const auto j = read_json(path);
    for (const char* key : {"rule", "emulator", "config"}) {
        if (!j.contains(key)) throw ConfigError("'" + path + "': missing required field '" + key + "'");
    }
    ThetaArtifact a;
    a.config = j["config"];
    const auto family = TaskFamily::from_json(a.config.at("family"));
    a.rule = RuleDescriptor::from_json(j["rule"], family);
    a.emulator = emulator_from_json(j["emulator"]);
    if (j.contains("theta_encoded")) {
        const auto v = j["theta_encoded"].get<std::vector<double>>();
        a.encoded = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return a;
}

AgentSetup ThetaArtifact::agent() const {
    return {emulator, rule.rule()};
}

// ---------------------------------------------------------------------------
// Commands

void cmd_run_l2l(const ExperimentConfig& config, const std::string& out_dir, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto hash = config.hash();
    const auto& exp = config.experiment;
    say(options, "config hash " + hash);
    write_json(join(dir, "config.json"), config.to_json());

    std::vector<std::string> header{"config_hash", "generation", "candidate", "mean_fitness"};
    for (const auto& name : exp.space().names()) header.push_back(name);
    CsvWriter history(join(dir, "history.csv"), header);
    auto hook = [&](const std::vector<FitnessRecord>& records) {
        double best = -1e300, sum = 0.0;
        for (const auto& r : records) {
            std::vector<std::string> row{hash, std::to_string(r.generation), std::to_string(r.candidate_id),
                                         fmt(r.mean_fitness)};
            const auto values = exp.space().decode(r.theta);
            for (Eigen::Index i = 0; i < values.size(); ++i) row.push_back(fmt(values(i)));
            history.row(row);
            best = std::max(best, r.mean_fitness);
            sum += r.mean_fitness;
        }
        history.flush();
        if (!records.empty()) {
            say(options, "generation " + std::to_string(records.front().generation) + " best " + fmt(best) +
                             " mean " + fmt(sum / records.size()));
        }
    };
    const auto result = run_l2l(config.l2l(options.workers), hook);
    const auto seeds = held_out_seeds(config.master_seed, config.n_eval);
    const auto random = random_theta_baseline(exp, seeds, derive_seed(Stream::Analysis, {config.master_seed}),
                                              options.workers);

    CsvWriter report(join(dir, "eval_report.csv"), kEvalHeader);
    write_eval_rows(report, hash, "best", result.held_out);
    write_eval_rows(report, hash, "random_theta", random);

    const auto agent = exp.decode(result.best_theta);
    json artifact{{"config_hash", hash},
                  {"master_seed", config.master_seed},
                  {"rule", descriptor_of(exp.rule(), agent.rule).to_json()},
                  {"emulator", emulator_to_json(agent.emulator)},
                  {"theta", theta_json(exp, result.best_theta)},
                  {"theta_encoded", std::vector<double>(result.best_theta.data(),
                                                        result.best_theta.data() + result.best_theta.size())},
                  {"held_out",
                   {{"n_tasks", config.n_eval},
                    {"normalized_score", result.held_out.normalized_score()},
                    {"mean_task_normalized", result.held_out.mean_task_normalized()},
                    {"mean_fitness", result.held_out.mean_fitness()}}},
                  {"random_theta",
                   {{"normalized_score", random.normalized_score()}, {"mean_fitness", random.mean_fitness()}}},
                  {"config", config.to_json()}};
    write_json(join(dir, "best_theta.json"), artifact);
    say(options, "held-out normalized score " + fmt(result.held_out.normalized_score()) + " (random theta " +
                     fmt(random.normalized_score()) + ")");
    if (options.bench) {
        const double trials = static_cast<double>(result.history.size()) * config.n_tasks +
                              static_cast<double>(result.finalists.size()) * config.n_select + 2.0 * config.n_eval;
        say(options, "bench: " + fmt(seconds_since(t0)) + " s total, " + fmt(1e6 * seconds_since(t0) / trials) +
                         " us per trial");
    }
}

void cmd_eval_agent(const ExperimentConfig& config, const std::string& theta_path, const std::string& out_csv,
                    const std::string& trajectory_csv, int n_tasks, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto hash = config.hash();
    const auto& exp = config.experiment;
    const AgentSetup agent = theta_path.empty() ? exp.fixed_agent() : ThetaArtifact::load(theta_path).agent();
    const int n = n_tasks > 0 ? n_tasks : config.n_eval;
    const auto seeds = held_out_seeds(config.master_seed, n);
    const auto batch = evaluate_batch(exp, agent, seeds, options.workers);
    CsvWriter report(out_csv, kEvalHeader);
    write_eval_rows(report, hash, theta_path.empty() ? "configured" : "artifact", batch);
    say(options, "config hash " + hash);
    say(options, "normalized score " + fmt(batch.normalized_score()) + " over " + std::to_string(n) + " tasks");

    if (!trajectory_csv.empty()) {
        const int S = exp.family().states();
        const int A = exp.family().actions();
        std::vector<std::string> header{"config_hash", "t", "state", "action", "case", "reward"};
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                header.push_back(S > 10 || A > 10 ? "w_" + std::to_string(s) + "_" + std::to_string(a)
                                                  : "w_" + std::to_string(s) + std::to_string(a));
            }
        }
        CsvWriter dump(trajectory_csv, header);
        run_task(exp, agent, seeds.front(), [&](const Step& step, const WeightMatrix& w) {
            std::vector<std::string> row{hash,
                                         std::to_string(step.t),
                                         std::to_string(step.state),
                                         std::to_string(step.action),
                                         to_string(step.selection),
                                         fmt(step.reward)};
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) row.push_back(fmt(w.effective(s, a)));
            }
            dump.row(row);
        });
    }
    if (options.bench) {
        say(options, "bench: " + fmt(1e6 * seconds_since(t0) / n) + " us per trial");
    }
}

void cmd_baselines(const ExperimentConfig& config, const std::string& out_csv, int n_tasks,
                   const RunOptions& options) {
    const auto& exp = config.experiment;
    const auto& family = exp.family();
    const int T = exp.horizon();
    const int n = n_tasks > 0 ? n_tasks : config.n_eval;
    const auto seeds = held_out_seeds(config.master_seed, n);
    GittinsTable table;
    std::vector<std::string> policies{"random", "optimal"};
    if (family.is_mab()) {
        table = gittins_table(T, config.gittins_discount, config.gittins_depth);
        policies.push_back("gittins");
    }
    std::vector<std::vector<TaskScore>> scores(policies.size(), std::vector<TaskScore>(n));
    parallel_for(n, options.workers, [&](int i) {
        const auto inst = make_task(family, seeds[i], T);
        for (std::size_t k = 0; k < policies.size(); ++k) {
            Rng rng(derive_seed(Stream::Agent, {seeds[i], k + 1}));
            Trajectory traj;
            if (policies[k] == "random") traj = random_policy_run(inst.task, T, rng);
            else if (policies[k] == "optimal") traj = optimal_policy_run(inst.task, T, rng);
            else traj = gittins_policy_run(std::get<Mab>(inst.task), T, table, rng);
            scores[k][i] = {seeds[i], traj.raw_return, inst.refs.random, inst.refs.optimal, traj.raw_return};
        }
    });
    CsvWriter csv(out_csv, {"config_hash", "family", "task_seed", "policy", "raw_return", "normalized_score"});
    const auto hash = config.hash();
    for (int i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < policies.size(); ++k) {
            const auto& s = scores[k][i];
            csv.row({hash, family.label(), fmt_u64(s.seed), policies[k], fmt(s.raw), fmt(s.normalized())});
        }
    }
    say(options, "config hash " + hash);
    for (std::size_t k = 0; k < policies.size(); ++k) {
        BatchResult b{scores[k]};
        say(options, policies[k] + ": normalized score " + fmt(b.normalized_score()) + ", mean return " +
                         fmt(b.mean_raw()));
    }
}

void cmd_compare_optimizers(const ExperimentConfig& config, const std::string& out_csv, const std::string& svg_path,
                            const RunOptions& options) {
    if (!config.compare) throw ConfigError("config: missing required field 'compare'");
    const auto& cmp = *config.compare;
    const auto hash = config.hash();
    const int dim = config.experiment.space().dim();
    CsvWriter csv(out_csv, {"config_hash", "seed", "slot", "optimizer", "generations", "evaluations", "final_fitness",
                            "ci_lo", "ci_hi", "normalized_score"});
    say(options, "config hash " + hash);
    std::vector<std::vector<double>> finals(cmp.optimizers.size());
    for (auto seed : cmp.seeds) {
        for (std::size_t k = 0; k < cmp.optimizers.size(); ++k) {
            const auto& opt = cmp.optimizers[k];
            ExperimentConfig run = config;
            run.optimizer = opt;
            run.master_seed = seed;
            run.generations = generations_for_budget(opt, dim, cmp.budget);
            const auto result = run_l2l(run.l2l(options.workers));
            std::vector<double> f;
            for (const auto& t : result.held_out.tasks) f.push_back(t.fitness);
            const auto ci = bootstrap_mean_ci(f, 2000, 0.95, derive_seed(Stream::Analysis, {seed}));
            const double final_fitness = result.held_out.mean_fitness();
            finals[k].push_back(final_fitness);
            csv.row({hash, fmt_u64(seed), std::to_string(k), to_string(opt.kind), std::to_string(run.generations),
                     std::to_string(cmp.budget), fmt(final_fitness), fmt(ci.lo), fmt(ci.hi),
                     fmt(result.held_out.normalized_score())});
            csv.flush();
            say(options, "seed " + fmt_u64(seed) + " " + to_string(opt.kind) + ": final fitness " +
                             fmt(final_fitness) + " [" + fmt(ci.lo) + ", " + fmt(ci.hi) + "]");
        }
    }
    if (!svg_path.empty()) {
        std::vector<std::string> labels;
        std::vector<double> means;
        std::vector<Interval> spans;
        for (std::size_t k = 0; k < cmp.optimizers.size(); ++k) {
            labels.push_back(to_string(cmp.optimizers[k].kind));
            means.push_back(mean(finals[k]));
            spans.push_back({*std::min_element(finals[k].begin(), finals[k].end()),
                             *std::max_element(finals[k].begin(), finals[k].end())});
        }
        write_bar_svg(svg_path, "final held-out fitness (min-max over seeds)", labels, means, spans);
    }
}

void cmd_learning_curves(const ExperimentConfig& config, const std::string& theta_path, const std::string& out_csv,
                         const RunOptions& options) {
    const auto& exp = config.experiment;
    const auto& family = exp.family();
    const int T = exp.horizon();
    const auto& policies = config.curves.policies;
    const bool wants_agent = std::find(policies.begin(), policies.end(), "agent") != policies.end();
    if (wants_agent && theta_path.empty()) throw ConfigError("learning-curves: missing theta artifact");
    AgentSetup agent;
    if (wants_agent) agent = ThetaArtifact::load(theta_path).agent();
    const int n = config.curves.n_eval > 0 ? config.curves.n_eval : (family.is_mab() ? 1000 : 50);
    const auto seeds = held_out_seeds(config.master_seed, n);
    GittinsTable table;
    if (std::find(policies.begin(), policies.end(), "gittins") != policies.end()) {
        table = gittins_table(T, config.gittins_discount, config.gittins_depth);
    }
    // Cumulative discounted reward after each step, per policy and task.
    std::vector<std::vector<std::vector<double>>> cum(policies.size(), std::vector<std::vector<double>>(n));
    std::vector<std::vector<References>> refs(n);
    parallel_for(n, options.workers, [&](int i) {
        const auto inst = make_task(family, seeds[i], T);
        refs[i] = reference_curve(inst.task, T);
        const double gamma = family.scoring_gamma();
        auto accumulate = [&](const std::vector<double>& rewards) {
            std::vector<double> c(rewards.size());
            double total = 0.0, discount = 1.0;
            for (std::size_t t = 0; t < rewards.size(); ++t) {
                total += discount * rewards[t];
                discount *= gamma;
                c[t] = total;
            }
            return c;
        };
        for (std::size_t k = 0; k < policies.size(); ++k) {
            const auto& p = policies[k];
            std::vector<double> rewards;
            if (p == "agent" || p == "random_theta") {
                AgentSetup a = agent;
                if (p == "random_theta") {
                    Rng draw(derive_seed(Stream::Analysis, {config.master_seed, seeds[i]}));
                    a = exp.decode(exp.space().sample_random(draw));
                }
                run_task(exp, a, seeds[i], [&](const Step& s, const WeightMatrix&) { rewards.push_back(s.reward); });
            } else {
                Rng rng(derive_seed(Stream::Agent, {seeds[i], k + 1}));
                Trajectory traj;
                if (p == "random") traj = random_policy_run(inst.task, T, rng);
                else if (p == "oracle") traj = optimal_policy_run(inst.task, T, rng);
                else traj = gittins_policy_run(std::get<Mab>(inst.task), T, table, rng);
                rewards = traj.rewards();
            }
            cum[k][i] = accumulate(rewards);
        }
    });
    const auto hash = config.hash();
    CsvWriter csv(out_csv, {"config_hash", "policy", "step", "normalized_score", "sem"});
    for (std::size_t k = 0; k < policies.size(); ++k) {
        for (int t = 0; t < T; ++t) {
            // Ratio estimator sum(raw - rnd) / sum(opt - rnd) and its delta-method error.
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                num += cum[k][i][t] - refs[i][t].random;
                den += refs[i][t].optimal - refs[i][t].random;
            }
            const double ratio = num / den;
            double ss = 0.0;
            for (int i = 0; i < n; ++i) {
                const double e = (cum[k][i][t] - refs[i][t].random) - ratio * (refs[i][t].optimal - refs[i][t].random);
                ss += e * e;
            }
            const double se = n > 1 ? std::sqrt(ss * n / (n - 1.0)) / std::abs(den) : 0.0;
            csv.row({hash, policies[k], std::to_string(t + 1), fmt(ratio), fmt(se)});
        }
    }
    say(options, "config hash " + hash);
    say(options, "wrote " + std::to_string(policies.size()) + " curves over " + std::to_string(n) + " tasks");
}

void cmd_analyze(const std::string& theta_path, const std::string& out_dir, const AnalysisSettings& settings,
                 std::uint64_t seed, bool svg, const RunOptions& options) {
    const auto artifact = ThetaArtifact::load(theta_path);
    if (artifact.rule.kind != RuleKind::Ann) throw ConfigError("analyze: artifact does not hold an ann rule");
    const auto rule = as_function(artifact.rule.ann);
    const auto hash = read_json(theta_path).value("config_hash", std::string());
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    InputMarginals marginals = InputMarginals::idealized();
    if (settings.inputs == "trajectory") {
        const auto config = ExperimentConfig::from_json(artifact.config);
        const auto seeds = batch_seeds(Stream::Analysis, seed, settings.trajectory_tasks);
        marginals = InputMarginals::empirical(record_ann_inputs(config.experiment, artifact.agent(), seeds));
    }
    Rng rng(derive_seed(Stream::Analysis, {seed}));
    const auto report = input_importance(rule, marginals, settings.n_samples, rng, settings.n_inner);
    CsvWriter imp(join(dir, "importance.csv"),
                  {"config_hash", "input", "fraction", "total_variance", "degenerate", "n_samples"});
    for (int i = 0; i < AnnRule::n_inputs; ++i) {
        imp.row({hash, kInputNames[i], fmt(report.fractions[i]), fmt(report.total_variance),
                 report.degenerate ? "1" : "0", std::to_string(report.n_samples)});
    }
    imp.row({hash, "residual_interactions", fmt(report.residual_interactions), fmt(report.total_variance),
             report.degenerate ? "1" : "0", std::to_string(report.n_samples)});

    Rng curve_rng(derive_seed(Stream::Analysis, {seed, 1}));
    const auto curves = update_curves(rule, settings.grid_size, settings.n_marginal, curve_rng);
    std::vector<Series> series;
    for (const auto& c : curves) {
        const std::string tag = std::to_string(c.flag) + std::to_string(c.reward);
        CsvWriter csv(join(dir, ("curves_case_" + tag + ".csv").c_str()),
                      {"config_hash", "flag", "reward", "w_self", "mean_dw", "p10", "p90"});
        for (std::size_t g = 0; g < c.grid.size(); ++g) {
            csv.row({hash, std::to_string(c.flag), std::to_string(c.reward), fmt(c.grid[g]), fmt(c.mean_dw[g]),
                     fmt(c.p10[g]), fmt(c.p90[g])});
        }
        series.push_back({"flag=" + std::to_string(c.flag) + " r=" + std::to_string(c.reward), c.grid, c.mean_dw});
    }
    if (svg) {
        write_line_svg(join(dir, "curves.svg"), "mean weight update", series, "w_self (normalized)", "dw");
        std::vector<std::string> labels(kInputNames.begin(), kInputNames.end());
        std::vector<double> values(report.fractions.begin(), report.fractions.end());
        std::vector<Interval> spans;
        for (double v : values) spans.push_back({v, v});
        write_bar_svg(join(dir, "importance.svg"), "first-order variance fraction", labels, values, spans);
    }
    std::string line = "importance:";
    for (int i = 0; i < AnnRule::n_inputs; ++i) line += std::string(" ") + kInputNames[i] + "=" + fmt(report.fractions[i]);
    say(options, line);
}

void cmd_transfer(const ExperimentConfig& config, const std::string& theta_a, const std::string& theta_b,
                  const std::string& out_csv, int n_tasks, const RunOptions& options) {
    const auto a = ThetaArtifact::load(theta_a);
    const auto b = ThetaArtifact::load(theta_b);
    const auto& exp = config.experiment;
    if (a.encoded.size() != exp.space().dim() || b.encoded.size() != exp.space().dim()) {
        throw ConfigError("transfer: artifacts do not match the configured rule's hyperparameter dimension");
    }
    const int n = n_tasks > 0 ? n_tasks : config.n_eval;
    const auto report = transfer_report(exp, a.encoded, b.encoded, exp.family(), n, config.master_seed,
                                        options.workers);
    const auto& c = report.comparison;
    CsvWriter csv(out_csv, {"config_hash", "eval_family", "n_tasks", "score_a", "score_b", "difference", "ci_lo",
                            "ci_hi"});
    const auto hash = config.hash();
    csv.row({hash, exp.family().label(), std::to_string(n), fmt(c.score_a), fmt(c.score_b), fmt(c.difference),
             fmt(c.ci.lo), fmt(c.ci.hi)});
    say(options, "config hash " + hash);
    say(options, "difference " + fmt(c.difference) + " [" + fmt(c.ci.lo) + ", " + fmt(c.ci.hi) + "]");
}

} // namespace nl2l
