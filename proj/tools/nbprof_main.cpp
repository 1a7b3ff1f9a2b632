// nbprof command-line front end: collect / analyze / plot / tune.
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "nbprof/config.hpp"
#include "nbprof/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    long long seed = -1;
    std::string out_dir;
    long long frames = -1;
    long long intervals = -1;
    double decay = -1.0;
};

nbprof::PipelineConfig resolve(const CliOverrides& cli) {
    nbprof::KeyValueConfig kv;
    if (!cli.config_path.empty())
        kv = nbprof::KeyValueConfig::parse_file(cli.config_path);
    if (cli.seed >= 0) kv.set("pipeline.seed", std::to_string(cli.seed));
    if (!cli.out_dir.empty()) kv.set("pipeline.out", cli.out_dir);
    if (cli.frames >= 0) kv.set("analyze.n_frames", std::to_string(cli.frames));
    if (cli.intervals >= 0)
        kv.set("collect.n_intervals", std::to_string(cli.intervals));
    if (cli.decay >= 0.0)
        kv.set("collect.decay", nbprof::format_cost(cli.decay));
    return nbprof::load_pipeline_config(kv);
}

void add_common(CLI::App* cmd, CliOverrides& cli) {
    cmd->add_option("--config", cli.config_path, "pipeline config file")
        ->required();
    cmd->add_option("--seed", cli.seed, "override the global seed");
    cmd->add_option("--out", cli.out_dir, "override the output directory");
    cmd->add_option("--frames", cli.frames, "override analyze.n_frames");
    cmd->add_option("--intervals", cli.intervals,
                    "override collect.n_intervals");
    cmd->add_option("--decay", cli.decay, "override collect.decay");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neighborhood behavior profiling pipeline"};
    app.require_subcommand(1);

    CliOverrides cli;
    auto* collect = app.add_subcommand(
        "collect", "run the instrumented search and write merged run logs");
    auto* analyze = app.add_subcommand(
        "analyze", "frames, features and clusters from collected logs");
    auto* plot = app.add_subcommand(
        "plot", "observable and activity charts from collected logs");
    auto* tune = app.add_subcommand(
        "tune", "compare the basic and clustered configuration spaces");
    for (auto* cmd : {collect, analyze, plot, tune}) add_common(cmd, cli);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const nbprof::PipelineConfig cfg = resolve(cli);
        if (collect->parsed()) {
            const auto files = nbprof::cmd_collect(cfg);
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
        } else if (analyze->parsed()) {
            const auto result = nbprof::cmd_analyze(cfg);
            std::printf("analyzed %zu instances; selected %zu clusters "
                        "(bic %.6g)\n",
                        result.instance_ids.size(), result.model.n_clusters(),
                        result.model.bic);
        } else if (plot->parsed()) {
            const auto files = nbprof::cmd_plot(cfg);
            std::printf("wrote %zu figures to %s\n", files.size(),
                        cfg.out_dir.c_str());
        } else if (tune->parsed()) {
            const auto report = nbprof::cmd_tune(cfg);
            std::printf("tune trials: %zu; basic-vs-clustered p = %.6g\n",
                        report.trials.size(),
                        report.basic_vs_clustered.p_value);
        }
        return 0;
    } catch (const nbprof::usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const nbprof::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
