#include "nl2l/nl2l.h"

#include <cstring>
#include <mutex>
#include <optional>
#include <string>

#include "nl2l/baselines.hpp"
#include "nl2l/commands.hpp"
#include "nl2l/errors.hpp"

struct nl2l_experiment {
    nl2l::ExperimentConfig config;
    std::optional<std::uint64_t> seed_override;
    int workers = 1;
    bool bench = false;

    nl2l::ExperimentConfig effective() const {
        auto c = config;
        c.master_seed = nl2l::resolve_seed(seed_override, config.master_seed);
        return c;
    }
};

struct nl2l_task {
    nl2l::TaskInstance instance;
    nl2l::Rng rng;
};

struct nl2l_gittins {
    nl2l::GittinsTable table;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
nl2l_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

nl2l::RunOptions options_for(const nl2l_experiment* exp) {
    nl2l::RunOptions o;
    if (exp) {
        o.workers = exp->workers;
        o.bench = exp->bench;
    }
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_fn) {
        auto fn = g_log_fn;
        auto user = g_log_user;
        o.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    }
    return o;
}

int fail(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return NL2L_OK;
    } catch (const nl2l::ConfigError& e) {
        return fail(NL2L_ERR_CONFIG, e.what());
    } catch (const nl2l::CapacityError& e) {
        return fail(NL2L_ERR_CONFIG, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(NL2L_ERR_CONFIG, std::string("config: ") + e.what());
    } catch (const std::exception& e) {
        return fail(NL2L_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(NL2L_ERR_RUNTIME, "unknown error");
    }
}

std::string str(const char* s) {
    return s ? std::string(s) : std::string();
}

int copy_out(const std::string& value, char* buf, size_t len) {
    if (!buf || len < value.size() + 1) return fail(NL2L_ERR_ARGUMENT, "buffer too small");
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return NL2L_OK;
}

} // namespace

extern "C" {

const char* nl2l_version(void) {
    return "1.0.0";
}

const char* nl2l_last_error(void) {
    return g_last_error.c_str();
}

void nl2l_set_log(nl2l_log_fn fn, void* user) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    g_log_fn = fn;
    g_log_user = user;
}

int nl2l_experiment_load(const char* path, nl2l_experiment** out) {
    if (!path || !out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new nl2l_experiment{nl2l::ExperimentConfig::load(path), {}, 1, false}; });
}

int nl2l_experiment_parse(const char* json_text, nl2l_experiment** out) {
    if (!json_text || !out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new nl2l_experiment{nl2l::ExperimentConfig::from_json(nlohmann::json::parse(json_text)), {}, 1, false};
    });
}

void nl2l_experiment_free(nl2l_experiment* exp) {
    delete exp;
}

int nl2l_experiment_set_seed(nl2l_experiment* exp, uint64_t seed) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    exp->seed_override = seed;
    return NL2L_OK;
}

int nl2l_experiment_set_generations(nl2l_experiment* exp, int generations) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    if (generations < 0) return fail(NL2L_ERR_CONFIG, "generations must be >= 0");
    exp->config.generations = generations;
    return NL2L_OK;
}

int nl2l_experiment_set_workers(nl2l_experiment* exp, int workers) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    if (workers < 1) return fail(NL2L_ERR_CONFIG, "workers must be >= 1");
    exp->workers = workers;
    return NL2L_OK;
}

int nl2l_experiment_set_bench(nl2l_experiment* exp, int enabled) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    exp->bench = enabled != 0;
    return NL2L_OK;
}

int nl2l_experiment_seed(const nl2l_experiment* exp, uint64_t* out) {
    if (!exp || !out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] { *out = exp->effective().master_seed; });
}

int nl2l_experiment_hash(const nl2l_experiment* exp, char* buf, size_t len) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    std::string h;
    const int rc = guarded([&] { h = exp->effective().hash(); });
    return rc != NL2L_OK ? rc : copy_out(h, buf, len);
}

int nl2l_experiment_output_dir(const nl2l_experiment* exp, char* buf, size_t len) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    return copy_out(exp->config.output_dir, buf, len);
}

int nl2l_run_l2l(const nl2l_experiment* exp, const char* out_dir) {
    if (!exp) return fail(NL2L_ERR_ARGUMENT, "null experiment");
    return guarded([&] {
        const auto c = exp->effective();
        nl2l::cmd_run_l2l(c, out_dir ? std::string(out_dir) : c.output_dir, options_for(exp));
    });
}

int nl2l_eval_agent(const nl2l_experiment* exp, const char* theta_path, const char* out_csv,
                    const char* trajectory_csv, int n_tasks) {
    if (!exp || !out_csv) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        nl2l::cmd_eval_agent(exp->effective(), str(theta_path), out_csv, str(trajectory_csv), n_tasks,
                             options_for(exp));
    });
}

int nl2l_baselines(const nl2l_experiment* exp, const char* out_csv, int n_tasks) {
    if (!exp || !out_csv) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] { nl2l::cmd_baselines(exp->effective(), out_csv, n_tasks, options_for(exp)); });
}

int nl2l_compare_optimizers(const nl2l_experiment* exp, const char* out_csv, const char* svg_path) {
    if (!exp || !out_csv) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded(
        [&] { nl2l::cmd_compare_optimizers(exp->effective(), out_csv, str(svg_path), options_for(exp)); });
}

int nl2l_learning_curves(const nl2l_experiment* exp, const char* theta_path, const char* out_csv) {
    if (!exp || !out_csv) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded(
        [&] { nl2l::cmd_learning_curves(exp->effective(), str(theta_path), out_csv, options_for(exp)); });
}

int nl2l_analyze(const nl2l_experiment* exp, const char* theta_path, const char* out_dir, uint64_t seed,
                 int trajectory_inputs, int svg) {
    if (!theta_path || !out_dir) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        nl2l::AnalysisSettings settings = exp ? exp->config.analysis : nl2l::AnalysisSettings{};
        if (trajectory_inputs) settings.inputs = "trajectory";
        nl2l::cmd_analyze(theta_path, out_dir, settings, seed, svg != 0, options_for(exp));
    });
}

int nl2l_transfer(const nl2l_experiment* exp, const char* theta_a, const char* theta_b, const char* out_csv,
                  int n_tasks) {
    if (!exp || !theta_a || !theta_b || !out_csv) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded(
        [&] { nl2l::cmd_transfer(exp->effective(), theta_a, theta_b, out_csv, n_tasks, options_for(exp)); });
}

int nl2l_task_create(const char* family_json, uint64_t task_seed, int horizon, nl2l_task** out) {
    if (!family_json || !out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        const auto family = nl2l::TaskFamily::from_json(nlohmann::json::parse(family_json));
        if (horizon < 1) throw nl2l::ConfigError("horizon must be >= 1");
        *out = new nl2l_task{nl2l::make_task(family, task_seed, horizon),
                             nl2l::Rng(nl2l::derive_seed(nl2l::Stream::Agent, {task_seed}))};
    });
}

void nl2l_task_free(nl2l_task* task) {
    delete task;
}

int nl2l_task_shape(const nl2l_task* task, int* n_states, int* n_actions) {
    if (!task || !n_states || !n_actions) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *n_states = nl2l::task_states(task->instance.task);
    *n_actions = nl2l::task_actions(task->instance.task);
    return NL2L_OK;
}

int nl2l_task_references(const nl2l_task* task, double* random_ref, double* optimal_ref) {
    if (!task || !random_ref || !optimal_ref) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *random_ref = task->instance.refs.random;
    *optimal_ref = task->instance.refs.optimal;
    return NL2L_OK;
}

int nl2l_task_step(nl2l_task* task, int state, int action, int* next_state, double* reward) {
    if (!task || !next_state || !reward) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto [s2, r] = nl2l::task_step(task->instance.task, state, action, task->rng);
        *next_state = s2;
        *reward = r;
    });
}

int nl2l_gittins_create(int horizon, double discount, int depth, nl2l_gittins** out) {
    if (!out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        if (horizon < 1 || depth < 1 || !(discount > 0.0 && discount < 1.0)) {
            throw nl2l::ConfigError("gittins: need horizon >= 1, depth >= 1 and discount in (0, 1)");
        }
        *out = new nl2l_gittins{nl2l::gittins_table(horizon, discount, depth)};
    });
}

void nl2l_gittins_free(nl2l_gittins* table) {
    delete table;
}

int nl2l_gittins_index(const nl2l_gittins* table, int a, int b, double* out) {
    if (!table || !out) return fail(NL2L_ERR_ARGUMENT, "null argument");
    return guarded([&] { *out = table->table.index(a, b); });
}

} // extern "C"
