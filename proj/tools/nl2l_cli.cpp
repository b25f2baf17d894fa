#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nl2l/nl2l.h"

namespace {

void print_line(const char* line, void*) {
    std::printf("%s\n", line);
    std::fflush(stdout);
}

int report(int rc) {
    if (rc != NL2L_OK) std::fprintf(stderr, "error: %s\n", nl2l_last_error());
    if (rc == NL2L_OK) return 0;
    return rc == NL2L_ERR_CONFIG ? 2 : 3;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool bench = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--seed", c.seed, "master seed; overrides NEURO_L2L_SEED and the config");
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--bench", c.bench, "report wall-clock timing per trial");
}

/// Loads the config and applies the shared overrides. Returns a status code.
int open_experiment(const Common& c, nl2l_experiment** exp) {
    int rc = nl2l_experiment_load(c.config.c_str(), exp);
    if (rc != NL2L_OK) return rc;
    if (c.seed && (rc = nl2l_experiment_set_seed(*exp, *c.seed)) != NL2L_OK) return rc;
    if ((rc = nl2l_experiment_set_workers(*exp, c.workers)) != NL2L_OK) return rc;
    return nl2l_experiment_set_bench(*exp, c.bench ? 1 : 0);
}

std::string output_dir(const nl2l_experiment* exp) {
    char buf[4096];
    if (nl2l_experiment_output_dir(exp, buf, sizeof buf) != NL2L_OK) return "out";
    return buf;
}

std::string in_output_dir(const nl2l_experiment* exp, const std::string& given, const char* name) {
    if (!given.empty()) return given;
    return (std::filesystem::path(output_dir(exp)) / name).string();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neuromorphic learning-to-learn experiment runner"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nl2l_version()));

    Common run_c;
    std::optional<int> run_generations;
    std::string run_out;
    auto* run = app.add_subcommand("run-l2l", "optimize hyperparameters with the outer loop");
    add_common(run, run_c);
    run->add_option("--generations", run_generations, "override the generation count")->check(CLI::NonNegativeNumber);
    run->add_option("--out", run_out, "output directory (default: config output_dir)");

    Common eval_c;
    std::string eval_theta, eval_out, eval_traj;
    int eval_n = 0;
    auto* eval = app.add_subcommand("eval-agent", "evaluate an agent on held-out tasks");
    add_common(eval, eval_c);
    eval->add_option("--theta", eval_theta, "best_theta.json artifact (default: the configured agent)");
    eval->add_option("--out", eval_out, "report CSV (default: <output_dir>/eval_report.csv)");
    eval->add_option("--trajectory", eval_traj, "write the first task's per-step trajectory to this CSV");
    eval->add_option("--n-tasks", eval_n, "number of tasks (default: config n_eval)");

    Common base_c;
    std::string base_out;
    int base_n = 0;
    auto* base = app.add_subcommand("baselines", "random, oracle and Gittins reference policies");
    add_common(base, base_c);
    base->add_option("--out", base_out, "CSV (default: <output_dir>/baselines.csv)");
    base->add_option("--n-tasks", base_n, "number of tasks (default: config n_eval)");

    Common cmp_c;
    std::string cmp_out, cmp_svg;
    auto* cmp = app.add_subcommand("compare-optimizers", "run several optimizers on one evaluation budget");
    add_common(cmp, cmp_c);
    cmp->add_option("--out", cmp_out, "CSV (default: <output_dir>/compare_optimizers.csv)");
    cmp->add_option("--svg", cmp_svg, "bar chart of the final fitness");

    Common lc_c;
    std::string lc_theta, lc_out;
    auto* lc = app.add_subcommand("learning-curves", "per-step running normalized score");
    add_common(lc, lc_c);
    lc->add_option("--theta", lc_theta, "best_theta.json artifact for the 'agent' policy");
    lc->add_option("--out", lc_out, "CSV (default: <output_dir>/learning_curves.csv)");

    Common an_c;
    std::string an_theta, an_out;
    std::uint64_t an_seed = 1;
    bool an_traj = false, an_svg = false;
    auto* an = app.add_subcommand("analyze", "input importance and update curves of an ANN rule");
    an->add_option("--theta", an_theta, "best_theta.json artifact")->required();
    an->add_option("--out", an_out, "report directory")->required();
    an->add_option("--config", an_c.config, "config with analysis settings");
    an->add_option("--seed", an_seed, "sampling seed");
    an->add_flag("--trajectory-inputs", an_traj, "sample inputs from recorded learning trajectories");
    an->add_flag("--svg", an_svg, "also write SVG plots");

    Common tr_c;
    std::string tr_a, tr_b, tr_out;
    int tr_n = 0;
    auto* tr = app.add_subcommand("transfer", "paired comparison of two artifacts on the config's family");
    add_common(tr, tr_c);
    tr->add_option("--theta-a", tr_a, "first artifact")->required();
    tr->add_option("--theta-b", tr_b, "second artifact")->required();
    tr->add_option("--out", tr_out, "CSV (default: <output_dir>/transfer.csv)");
    tr->add_option("--n-tasks", tr_n, "number of tasks (default: config n_eval)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    nl2l_set_log(print_line, nullptr);
    nl2l_experiment* exp = nullptr;
    int rc = NL2L_OK;

    if (*run) {
        rc = open_experiment(run_c, &exp);
        if (rc == NL2L_OK && run_generations) rc = nl2l_experiment_set_generations(exp, *run_generations);
        if (rc == NL2L_OK) rc = nl2l_run_l2l(exp, run_out.empty() ? nullptr : run_out.c_str());
    } else if (*eval) {
        rc = open_experiment(eval_c, &exp);
        if (rc == NL2L_OK) {
            const auto out = in_output_dir(exp, eval_out, "eval_report.csv");
            rc = nl2l_eval_agent(exp, eval_theta.empty() ? nullptr : eval_theta.c_str(), out.c_str(),
                                 eval_traj.empty() ? nullptr : eval_traj.c_str(), eval_n);
        }
    } else if (*base) {
        rc = open_experiment(base_c, &exp);
        if (rc == NL2L_OK) rc = nl2l_baselines(exp, in_output_dir(exp, base_out, "baselines.csv").c_str(), base_n);
    } else if (*cmp) {
        rc = open_experiment(cmp_c, &exp);
        if (rc == NL2L_OK) {
            rc = nl2l_compare_optimizers(exp, in_output_dir(exp, cmp_out, "compare_optimizers.csv").c_str(),
                                         cmp_svg.empty() ? nullptr : cmp_svg.c_str());
        }
    } else if (*lc) {
        rc = open_experiment(lc_c, &exp);
        if (rc == NL2L_OK) {
            rc = nl2l_learning_curves(exp, lc_theta.empty() ? nullptr : lc_theta.c_str(),
                                      in_output_dir(exp, lc_out, "learning_curves.csv").c_str());
        }
    } else if (*an) {
        if (!an_c.config.empty()) rc = nl2l_experiment_load(an_c.config.c_str(), &exp);
        if (rc == NL2L_OK) rc = nl2l_analyze(exp, an_theta.c_str(), an_out.c_str(), an_seed, an_traj, an_svg);
    } else if (*tr) {
        rc = open_experiment(tr_c, &exp);
        if (rc == NL2L_OK) {
            rc = nl2l_transfer(exp, tr_a.c_str(), tr_b.c_str(), in_output_dir(exp, tr_out, "transfer.csv").c_str(),
                               tr_n);
        }
    }
    nl2l_experiment_free(exp);
    return report(rc);
}
