/* Shared-library interface of the neuromorphic learning-to-learn engine. */
#ifndef NL2L_H
#define NL2L_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NL2L_API __declspec(dllexport)
#else
#define NL2L_API __attribute__((visibility("default")))
#endif

/* Status codes. They double as process exit codes of the command-line tool. */
#define NL2L_OK 0
#define NL2L_ERR_ARGUMENT 1
#define NL2L_ERR_CONFIG 2
#define NL2L_ERR_RUNTIME 3

typedef struct nl2l_experiment nl2l_experiment;
typedef struct nl2l_task nl2l_task;
typedef struct nl2l_gittins nl2l_gittins;

typedef void (*nl2l_log_fn)(const char* line, void* user);

NL2L_API const char* nl2l_version(void);

/* Message of the last failed call on this thread; empty when none. */
NL2L_API const char* nl2l_last_error(void);

/* Progress lines of long-running commands. NULL silences them. */
NL2L_API void nl2l_set_log(nl2l_log_fn fn, void* user);

/* ---- experiments ------------------------------------------------------ */

NL2L_API int nl2l_experiment_load(const char* path, nl2l_experiment** out);
NL2L_API int nl2l_experiment_parse(const char* json_text, nl2l_experiment** out);
NL2L_API void nl2l_experiment_free(nl2l_experiment* exp);

/* Seed override; wins over NEURO_L2L_SEED and the config file. */
NL2L_API int nl2l_experiment_set_seed(nl2l_experiment* exp, uint64_t seed);
NL2L_API int nl2l_experiment_set_generations(nl2l_experiment* exp, int generations);
NL2L_API int nl2l_experiment_set_workers(nl2l_experiment* exp, int workers);
NL2L_API int nl2l_experiment_set_bench(nl2l_experiment* exp, int enabled);

/* Effective master seed after all overrides. */
NL2L_API int nl2l_experiment_seed(const nl2l_experiment* exp, uint64_t* out);
/* 16 hex digits plus terminator; len must be at least 17. */
NL2L_API int nl2l_experiment_hash(const nl2l_experiment* exp, char* buf, size_t len);
/* Configured output directory; copies at most len bytes including the terminator. */
NL2L_API int nl2l_experiment_output_dir(const nl2l_experiment* exp, char* buf, size_t len);

/* ---- commands --------------------------------------------------------- */

NL2L_API int nl2l_run_l2l(const nl2l_experiment* exp, const char* out_dir);
/* theta_path and trajectory_csv may be NULL; n_tasks 0 uses the config. */
NL2L_API int nl2l_eval_agent(const nl2l_experiment* exp, const char* theta_path, const char* out_csv,
                             const char* trajectory_csv, int n_tasks);
NL2L_API int nl2l_baselines(const nl2l_experiment* exp, const char* out_csv, int n_tasks);
/* svg_path may be NULL. */
NL2L_API int nl2l_compare_optimizers(const nl2l_experiment* exp, const char* out_csv, const char* svg_path);
NL2L_API int nl2l_learning_curves(const nl2l_experiment* exp, const char* theta_path, const char* out_csv);
/* exp supplies analysis settings and may be NULL for defaults. */
NL2L_API int nl2l_analyze(const nl2l_experiment* exp, const char* theta_path, const char* out_dir, uint64_t seed,
                          int trajectory_inputs, int svg);
NL2L_API int nl2l_transfer(const nl2l_experiment* exp, const char* theta_a, const char* theta_b, const char* out_csv,
                           int n_tasks);

/* ---- tasks ------------------------------------------------------------ */

/* family_json as in configs, e.g. {"family":"mab","structured":true}. */
NL2L_API int nl2l_task_create(const char* family_json, uint64_t task_seed, int horizon, nl2l_task** out);
NL2L_API void nl2l_task_free(nl2l_task* task);
NL2L_API int nl2l_task_shape(const nl2l_task* task, int* n_states, int* n_actions);
NL2L_API int nl2l_task_references(const nl2l_task* task, double* random_ref, double* optimal_ref);
/* Samples one transition with the task's own random stream. */
NL2L_API int nl2l_task_step(nl2l_task* task, int state, int action, int* next_state, double* reward);

/* ---- Gittins indices -------------------------------------------------- */

NL2L_API int nl2l_gittins_create(int horizon, double discount, int depth, nl2l_gittins** out);
NL2L_API void nl2l_gittins_free(nl2l_gittins* table);
/* Index of the Beta(a, b) posterior, a, b >= 1 and a + b <= horizon + 2. */
NL2L_API int nl2l_gittins_index(const nl2l_gittins* table, int a, int b, double* out);

#ifdef __cplusplus
}
#endif

#endif
