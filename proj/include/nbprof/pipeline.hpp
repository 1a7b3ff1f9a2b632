#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nbprof/aggregate.hpp"
#include "nbprof/cluster.hpp"
#include "nbprof/config.hpp"
#include "nbprof/features.hpp"
#include "nbprof/frames.hpp"
#include "nbprof/parallel.hpp"
#include "nbprof/routing.hpp"
#include "nbprof/runlog.hpp"
#include "nbprof/search.hpp"
#include "nbprof/svg.hpp"
#include "nbprof/textio.hpp"
#include "nbprof/tune.hpp"

namespace nbprof {

/// Effective settings of one pipeline invocation, resolved from the
/// config file plus command-line overrides.
struct PipelineConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    // collect
    std::vector<std::string> instance_paths;
    std::vector<std::string> collect_configs{"uniform", "mixed"};
    std::map<std::string, std::vector<double>> named_weights;
    std::size_t runs_per_config = 5;
    std::uint64_t collect_iters = 150000;
    double collect_seconds = 0.0;
    std::size_t n_intervals = 1000;
    double decay = 0.99;
    std::uint64_t la_list = 50;
    // Short idle threshold: desk-scale instances converge fast, and the
    // profiles only cover the quality range when the ILS keeps cycling.
    std::uint64_t it_wi = 400;
    bool use_demo_roster = true;

    // analyze
    std::size_t n_frames = 5;
    bool standardize_features = true;
    std::size_t k_min = 2;
    std::size_t k_max = 12;
    std::size_t cluster_seeds = 5;
    FitOptions fit{};

    // plot
    std::size_t bucket = 10;

    // tune
    TuneOptions tune{};
    std::size_t tune_trials = 10;
    ParameterRange la_range{1, 5000};
    ParameterRange it_wi_range{100, 50000};
    std::uint64_t default_la_list = 50;
    std::uint64_t default_it_wi = 400;
    std::size_t tune_grid_intervals = 100;

    std::size_t threads = 1;
    std::string fingerprint; ///< hash of the resolved configuration

    std::vector<NeighborhoodDef> roster() const {
        return use_demo_roster ? demo_roster() : default_roster();
    }

    std::string stamp() const {
        return "config " + fingerprint + " seed " + std::to_string(seed);
    }
};

inline PipelineConfig load_pipeline_config(const KeyValueConfig& kv) {
    PipelineConfig c;
    c.out_dir = kv.get_string("pipeline.out", c.out_dir);
    c.seed = static_cast<std::uint64_t>(
        kv.get_int("pipeline.seed", static_cast<std::int64_t>(c.seed)));
    c.threads = static_cast<std::size_t>(
        kv.get_int("pipeline.threads", static_cast<std::int64_t>(c.threads)));

    c.instance_paths = kv.get_list("collect.instances");
    if (kv.has("collect.configs")) c.collect_configs = kv.get_list("collect.configs");
    c.runs_per_config = static_cast<std::size_t>(
        kv.get_int("collect.runs_per_config",
                   static_cast<std::int64_t>(c.runs_per_config)));
    c.collect_iters = static_cast<std::uint64_t>(kv.get_int(
        "collect.budget_iters", static_cast<std::int64_t>(c.collect_iters)));
    c.collect_seconds = kv.get_double("collect.budget_seconds", 0.0);
    c.n_intervals = static_cast<std::size_t>(kv.get_int(
        "collect.n_intervals", static_cast<std::int64_t>(c.n_intervals)));
    c.decay = kv.get_double("collect.decay", c.decay);
    c.la_list = static_cast<std::uint64_t>(
        kv.get_int("collect.laList", static_cast<std::int64_t>(c.la_list)));
    c.it_wi = static_cast<std::uint64_t>(
        kv.get_int("collect.itWI", static_cast<std::int64_t>(c.it_wi)));
    const std::string roster = kv.get_string("collect.roster", "demo");
    if (roster == "demo")
        c.use_demo_roster = true;
    else if (roster == "default")
        c.use_demo_roster = false;
    else
        throw data_error("config: collect.roster must be 'demo' or 'default'");
    for (const std::string& name : c.collect_configs) {
        const std::string key = "collect.weights_" + name;
        if (kv.has(key)) {
            std::vector<double> w;
            for (const std::string& tok : kv.get_list(key))
                w.push_back(parse_double(tok, key));
            c.named_weights[name] = std::move(w);
        }
    }

    c.n_frames = static_cast<std::size_t>(
        kv.get_int("analyze.n_frames", static_cast<std::int64_t>(c.n_frames)));
    c.standardize_features =
        kv.get_bool("analyze.standardize", c.standardize_features);
    c.k_min = static_cast<std::size_t>(
        kv.get_int("analyze.k_min", static_cast<std::int64_t>(c.k_min)));
    c.k_max = static_cast<std::size_t>(
        kv.get_int("analyze.k_max", static_cast<std::int64_t>(c.k_max)));
    c.cluster_seeds = static_cast<std::size_t>(kv.get_int(
        "analyze.cluster_seeds", static_cast<std::int64_t>(c.cluster_seeds)));
    c.fit.scree_threshold =
        kv.get_double("analyze.scree_threshold", c.fit.scree_threshold);
    c.fit.n_init = static_cast<std::size_t>(kv.get_int(
        "analyze.n_init", static_cast<std::int64_t>(c.fit.n_init)));

    c.bucket = static_cast<std::size_t>(
        kv.get_int("plot.bucket", static_cast<std::int64_t>(c.bucket)));

    c.tune.budget_runs = static_cast<std::uint64_t>(kv.get_int(
        "tune.budget_runs", static_cast<std::int64_t>(c.tune.budget_runs)));
    c.tune_trials = static_cast<std::size_t>(kv.get_int(
        "tune.trials", static_cast<std::int64_t>(c.tune_trials)));
    c.tune.train_runs_per_instance = static_cast<std::size_t>(
        kv.get_int("tune.train_runs_per_instance",
                   static_cast<std::int64_t>(c.tune.train_runs_per_instance)));
    c.tune.eval_runs_per_instance = static_cast<std::size_t>(
        kv.get_int("tune.eval_runs_per_instance",
                   static_cast<std::int64_t>(c.tune.eval_runs_per_instance)));
    const auto run_work = static_cast<std::uint64_t>(
        kv.get_int("tune.run_work_units", 500000));
    const auto run_iters =
        static_cast<std::uint64_t>(kv.get_int("tune.run_iters", 0));
    c.tune.run_budget = SearchBudget{run_iters, 0.0, run_iters > 0 ? 0 : run_work};
    c.tune.threads = c.threads;
    c.la_range.lo = kv.get_int("tune.laList_min", c.la_range.lo);
    c.la_range.hi = kv.get_int("tune.laList_max", c.la_range.hi);
    c.it_wi_range.lo = kv.get_int("tune.itWI_min", c.it_wi_range.lo);
    c.it_wi_range.hi = kv.get_int("tune.itWI_max", c.it_wi_range.hi);
    c.default_la_list = static_cast<std::uint64_t>(kv.get_int(
        "tune.laList_default", static_cast<std::int64_t>(c.default_la_list)));
    c.default_it_wi = static_cast<std::uint64_t>(kv.get_int(
        "tune.itWI_default", static_cast<std::int64_t>(c.default_it_wi)));
    c.tune_grid_intervals = static_cast<std::size_t>(
        kv.get_int("tune.grid_intervals",
                   static_cast<std::int64_t>(c.tune_grid_intervals)));

    c.fingerprint = kv.fingerprint();
    return c;
}

namespace detail_pipeline {

[[noreturn]] inline void rethrow_staged(const std::string& stage,
                                        const error& e) {
    const std::string msg = "[" + stage + "] " + e.what();
    if (dynamic_cast<const usage_error*>(&e)) throw usage_error(msg);
    if (dynamic_cast<const internal_error*>(&e)) throw internal_error(msg);
    throw data_error(msg);
}

template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const error& e) {
        rethrow_staged(stage, e);
    }
}

inline std::vector<double>
resolve_weights(const PipelineConfig& cfg, const std::string& name,
                const std::vector<NeighborhoodDef>& roster) {
    const auto it = cfg.named_weights.find(name);
    if (it != cfg.named_weights.end()) {
        if (it->second.size() != roster.size())
            throw data_error("collect: weight list for configuration '" +
                             name + "' has " +
                             std::to_string(it->second.size()) +
                             " entries, roster has " +
                             std::to_string(roster.size()));
        return it->second;
    }
    if (name == "uniform")
        return std::vector<double>(roster.size(),
                                   1.0 / static_cast<double>(roster.size()));
    if (name == "mixed") {
        // A fixed non-uniform profile so the two collection configurations
        // visit different parts of the quality space.
        std::vector<double> w(roster.size(), 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < roster.size(); ++k) {
            switch (roster[k].type) {
            case NeighborhoodType::cheapest_insertion: w[k] = 1.5; break;
            case NeighborhoodType::ruin_recreate: w[k] = 1.5; break;
            case NeighborhoodType::intra_route_two_opt: w[k] = 1.0; break;
            case NeighborhoodType::inter_route_two_opt: w[k] = 1.0; break;
            case NeighborhoodType::swap: w[k] = 0.75; break;
            case NeighborhoodType::relocate: w[k] = 0.5; break;
            case NeighborhoodType::remove_route: w[k] = 0.5; break;
            }
            total += w[k];
        }
        for (double& v : w) v /= total;
        return w;
    }
    throw data_error("collect: unknown configuration '" + name +
                     "' (expected 'uniform', 'mixed', or a "
                     "collect.weights_<name> key)");
}

inline std::string runlog_path(const PipelineConfig& cfg,
                               const std::string& instance_id) {
    return cfg.out_dir + "/" + instance_id + ".runlog";
}

inline std::string frames_path(const PipelineConfig& cfg,
                               const std::string& instance_id) {
    return cfg.out_dir + "/frames_" + instance_id + ".txt";
}

inline void ensure_out_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec)
        throw data_error("cannot create output directory '" + cfg.out_dir +
                         "': " + ec.message());
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open output file '" + path + "'");
    return os;
}

} // namespace detail_pipeline

/// collect: run every configured (configuration x run) job per instance,
/// merge the logs per instance, and write them to the output directory.
inline std::vector<std::string> cmd_collect(const PipelineConfig& cfg) {
    using namespace detail_pipeline;
    if (cfg.instance_paths.empty())
        throw usage_error("collect: no instances configured");
    if (cfg.collect_configs.empty() || cfg.runs_per_config == 0)
        throw usage_error("collect: zero runs configured");
    if (cfg.collect_iters == 0 && cfg.collect_seconds <= 0.0)
        throw usage_error("collect: zero budget configured");
    ensure_out_dir(cfg);

    const auto roster = cfg.roster();
    std::vector<std::string> written;
    for (const std::string& path : cfg.instance_paths) {
        const RoutingInstance inst = staged(
            "collect/load", [&] { return read_instance(path); });
        const double lb = staged("collect/load",
                                 [&] { return read_lower_bound(path); });
        const double ub = initial_solution(inst).cost;
        const IntervalGrid grid = staged("collect/grid", [&] {
            return build_grid(QualityBounds{ub, lb}, cfg.n_intervals,
                              cfg.decay);
        });

        struct Job {
            std::string config_name;
            std::size_t run_index;
        };
        std::vector<Job> jobs;
        for (const std::string& name : cfg.collect_configs)
            for (std::size_t r = 0; r < cfg.runs_per_config; ++r)
                jobs.push_back({name, r});

        std::vector<RunLog> logs(jobs.size());
        parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
            SearchConfig sc;
            sc.weights = resolve_weights(cfg, jobs[j].config_name, roster);
            sc.la_list = cfg.la_list;
            sc.it_wi = cfg.it_wi;
            sc.budget = SearchBudget{cfg.collect_iters, cfg.collect_seconds};
            sc.seed = derive_seed(cfg.seed,
                                  "collect:" + inst.instance_id() + ":" +
                                      jobs[j].config_name,
                                  jobs[j].run_index);
            logs[j] = staged("collect/run", [&] {
                return lahc_run(inst, roster, sc, grid).log;
            });
        });

        const RunLog merged =
            staged("collect/merge", [&] { return merge_logs(logs); });
        const std::string out_path = runlog_path(cfg, inst.instance_id());
        staged("collect/write", [&] {
            write_log(merged, out_path, {"nbprof run log", cfg.stamp()});
            return 0;
        });
        written.push_back(out_path);
    }
    return written;
}

/// Everything cmd_analyze produces, returned for in-process callers.
struct AnalyzeResult {
    std::vector<std::string> instance_ids;
    std::vector<FrameSpec> frame_specs;
    FeatureMatrix features;
    ClusterModel model;
    std::vector<SelectionEntry> bic_trace;
};

/// analyze: trim, detect frames, aggregate, assemble features, cluster;
/// writes the frames reports, the feature matrix (+ mask), the cluster
/// report and the BIC trace.
inline AnalyzeResult cmd_analyze(const PipelineConfig& cfg) {
    using namespace detail_pipeline;
    if (cfg.instance_paths.empty())
        throw usage_error("analyze: no instances configured");
    ensure_out_dir(cfg);

    AnalyzeResult result;
    std::vector<InstanceAggregates> aggregates;
    for (const std::string& path : cfg.instance_paths) {
        const std::string id = std::filesystem::path(path).stem().string();
        const RunLog log = staged("analyze/logs", [&] {
            RunLog l = read_log(runlog_path(cfg, id));
            l.validate();
            return l;
        });
        const ActivityProfile profile = staged("analyze/trim", [&] {
            return trim_empty_tail(log.activity_profile());
        });
        const FrameSpec spec = staged("analyze/frames", [&] {
            return group_frames(profile, cfg.n_frames);
        });

        {
            auto os = open_out(frames_path(cfg, id));
            os << "# nbprof frames report\n# " << cfg.stamp() << '\n';
            os << "instance " << id << '\n';
            os << "n_intervals_trimmed " << profile.n_intervals() << '\n';
            os << "frame_ends ";
            for (std::size_t f = 0; f < spec.ends.size(); ++f)
                os << (f ? "," : "") << spec.ends[f];
            os << '\n';
        }

        InstanceAggregates agg;
        agg.instance_id = id;
        agg.neighborhood_ids = log.neighborhood_ids();
        agg.ratios = staged("analyze/aggregate",
                            [&] { return frame_ratios(log, spec); });
        agg.rho_improve = staged("analyze/aggregate", [&] {
            return frame_magnitude_scores(log, spec, MagnitudeKind::improve);
        });
        agg.rho_worsen = staged("analyze/aggregate", [&] {
            return frame_magnitude_scores(log, spec, MagnitudeKind::worsen);
        });
        aggregates.push_back(std::move(agg));
        result.instance_ids.push_back(id);
        result.frame_specs.push_back(spec);
    }

    result.features =
        staged("analyze/features", [&] { return assemble(aggregates); });
    if (cfg.standardize_features)
        staged("analyze/features",
               [&] { return standardize(result.features); });

    {
        auto os = open_out(cfg.out_dir + "/features.tsv");
        os << "# nbprof feature matrix\n# " << cfg.stamp()
           << "\n# standardized "
           << (cfg.standardize_features ? "true" : "false") << '\n';
        os << "neighborhood";
        for (const auto& label : result.features.column_labels)
            os << '\t' << label;
        os << '\n';
        for (std::size_t r = 0; r < result.features.n_rows(); ++r) {
            os << result.features.row_ids[r];
            for (std::size_t c = 0; c < result.features.n_cols(); ++c)
                os << '\t' << format_value(result.features.values[r][c]);
            os << '\n';
        }
    }
    {
        auto os = open_out(cfg.out_dir + "/features_mask.tsv");
        os << "# nbprof imputed-cell mask (1 = imputed)\n# " << cfg.stamp()
           << '\n';
        os << "neighborhood";
        for (const auto& label : result.features.column_labels)
            os << '\t' << label;
        os << '\n';
        for (std::size_t r = 0; r < result.features.n_rows(); ++r) {
            os << result.features.row_ids[r];
            for (std::size_t c = 0; c < result.features.n_cols(); ++c)
                os << '\t' << (result.features.imputed[r][c] ? '1' : '0');
            os << '\n';
        }
    }

    const std::size_t n_rows = result.features.n_rows();
    if (n_rows < 3)
        throw data_error("analyze/cluster: need at least three neighborhoods");
    const std::size_t k_max = std::min(cfg.k_max, n_rows - 1);
    const std::size_t k_min = std::min(cfg.k_min, k_max);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n_rows),
                      static_cast<Eigen::Index>(result.features.n_cols()));
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < result.features.n_cols(); ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                result.features.values[r][c];
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < std::max<std::size_t>(cfg.cluster_seeds, 1);
         ++s)
        seeds.push_back(derive_seed(cfg.seed, "cluster", s));
    result.model = staged("analyze/cluster", [&] {
        return select(x, k_min, k_max, seeds, cfg.fit, &result.bic_trace);
    });

    {
        auto os = open_out(cfg.out_dir + "/clusters.tsv");
        os << "# nbprof cluster report\n# " << cfg.stamp() << '\n';
        os << "# selected_k " << result.model.n_clusters() << " bic "
           << format_value(result.model.bic) << " standardized "
           << (cfg.standardize_features ? "true" : "false") << '\n';
        os << "neighborhood\tcluster\tmax_posterior\n";
        for (std::size_t r = 0; r < n_rows; ++r)
            os << result.features.row_ids[r] << '\t'
               << result.model.assignments[r] + 1 << '\t'
               << format_value(result.model.max_posterior[r]) << '\n';
    }
    {
        auto os = open_out(cfg.out_dir + "/bic.tsv");
        os << "# nbprof BIC trace\n# " << cfg.stamp() << '\n';
        os << "K\tseed\tstatus\tbic\tloglik\tmessage\n";
        for (const auto& e : result.bic_trace)
            os << e.k << '\t' << e.seed << '\t' << (e.ok ? "ok" : "failed")
               << '\t' << (e.ok ? format_value(e.bic) : "-") << '\t'
               << (e.ok ? format_value(e.log_likelihood) : "-") << '\t'
               << (e.message.empty() ? "-" : e.message) << '\n';
    }
    return result;
}

/// plot: per-instance activity curve with frame boundaries, plus bucketed
/// observable curves per neighborhood. Every figure gets a plain-text
/// sidecar with the plotted values.
inline std::vector<std::string> cmd_plot(const PipelineConfig& cfg) {
    using namespace detail_pipeline;
    if (cfg.instance_paths.empty())
        throw usage_error("plot: no instances configured");
    if (cfg.bucket == 0) throw usage_error("plot: bucket size must be >= 1");
    ensure_out_dir(cfg);

    std::vector<std::string> written;
    for (const std::string& path : cfg.instance_paths) {
        const std::string id = std::filesystem::path(path).stem().string();
        const RunLog log = staged("plot/logs", [&] {
            RunLog l = read_log(runlog_path(cfg, id));
            l.validate();
            return l;
        });
        const ActivityProfile profile = staged("plot/trim", [&] {
            return trim_empty_tail(log.activity_profile());
        });

        // Frame boundaries are drawn when the analyze stage ran before us.
        std::vector<std::size_t> frame_ends;
        {
            std::ifstream is(frames_path(cfg, id), std::ios::binary);
            if (is) {
                std::string line;
                while (std::getline(is, line)) {
                    const std::string_view t = trim(line);
                    if (t.rfind("frame_ends ", 0) == 0)
                        for (const std::string& tok :
                             split(t.substr(11), ','))
                            frame_ends.push_back(
                                static_cast<std::size_t>(
                                    parse_uint(tok, "frame_ends")));
                }
            }
        }

        {
            SvgChart chart("Activity profile: " + id, "interval",
                           "sum_nIters");
            chart.set_stamp(cfg.stamp());
            SvgChart::Series s;
            s.label = "sum_nIters";
            s.color = "#1f77b4";
            for (std::size_t j = 0; j < profile.n_intervals(); ++j) {
                s.x.push_back(static_cast<double>(j + 1));
                s.y.push_back(profile.values[j]);
            }
            chart.add_series(std::move(s));
            for (std::size_t e : frame_ends)
                chart.add_vertical_line(static_cast<double>(e));
            const std::string svg_path =
                cfg.out_dir + "/activity_" + id + ".svg";
            chart.write(svg_path);
            written.push_back(svg_path);

            auto os = open_out(cfg.out_dir + "/activity_" + id + ".tsv");
            os << "# nbprof activity profile: " << id << "\n# " << cfg.stamp()
               << '\n';
            if (!frame_ends.empty()) {
                os << "# frame_ends ";
                for (std::size_t f = 0; f < frame_ends.size(); ++f)
                    os << (f ? "," : "") << frame_ends[f];
                os << '\n';
            }
            os << "interval\tsum_nIters\n";
            for (std::size_t j = 0; j < profile.n_intervals(); ++j)
                os << j + 1 << '\t' << format_value(profile.values[j]) << '\n';
        }

        // Observable curves, one figure per neighborhood, intervals
        // bucketed by cfg.bucket with count-weighted ratios.
        const std::size_t n = profile.n_intervals();
        for (std::size_t k = 0; k < log.n_neighborhoods(); ++k) {
            const std::string& nbh = log.neighborhood_ids()[k];
            SvgChart chart("Observables: " + nbh + " on " + id,
                           "interval bucket (x" + std::to_string(cfg.bucket) +
                               ")",
                           "ratio");
            chart.set_stamp(cfg.stamp());
            chart.set_y_range(0.0, 1.0);
            SvgChart::Series si{"r_improve", "#2ca02c", {}, {}};
            SvgChart::Series sw{"r_worsen", "#d62728", {}, {}};
            SvgChart::Series sn{"r_nothing", "#1f77b4", {}, {}};

            auto os = open_out(cfg.out_dir + "/observables_" + id + "_" + nbh +
                               ".tsv");
            os << "# nbprof observables: " << nbh << " on " << id << "\n# "
               << cfg.stamp() << '\n';
            os << "bucket\tinterval_lo\tinterval_hi\tn_iters\tr_improve\t"
                  "r_worsen\tr_nothing\n";

            std::uint64_t total_iters = 0;
            for (std::size_t lo = 1; lo <= n; lo += cfg.bucket) {
                const std::size_t hi = std::min(lo + cfg.bucket - 1, n);
                std::uint64_t iters = 0, ni = 0, nw = 0, nsn = 0;
                for (std::size_t j = lo; j <= hi; ++j) {
                    const CellStats& cell = log.cell(k, j);
                    iters += cell.n_iters;
                    ni += cell.n_improve;
                    nw += cell.n_worsen;
                    nsn += cell.n_nothing;
                }
                const std::size_t bucket_index = (lo - 1) / cfg.bucket + 1;
                total_iters += iters;
                if (iters == 0) {
                    os << bucket_index << '\t' << lo << '\t' << hi
                       << "\t0\t-\t-\t-\n";
                    continue;
                }
                const auto d = static_cast<double>(iters);
                const double ri = static_cast<double>(ni) / d;
                const double rw = static_cast<double>(nw) / d;
                const double rn = static_cast<double>(nsn) / d;
                const auto bx = static_cast<double>(bucket_index);
                si.x.push_back(bx);
                si.y.push_back(ri);
                sw.x.push_back(bx);
                sw.y.push_back(rw);
                sn.x.push_back(bx);
                sn.y.push_back(rn);
                os << bucket_index << '\t' << lo << '\t' << hi << '\t' << iters
                   << '\t' << format_value(ri) << '\t' << format_value(rw)
                   << '\t' << format_value(rn) << '\n';
            }
            if (total_iters == 0) {
                // Flat zero line plus an explicit missing-data note.
                for (std::size_t b = 1; b <= (n + cfg.bucket - 1) / cfg.bucket;
                     ++b) {
                    si.x.push_back(static_cast<double>(b));
                    si.y.push_back(0.0);
                }
                chart.add_note("no applications recorded");
                os << "# no applications recorded\n";
            }
            chart.add_series(std::move(si));
            chart.add_series(std::move(sw));
            chart.add_series(std::move(sn));
            const std::string svg_path =
                cfg.out_dir + "/observables_" + id + "_" + nbh + ".svg";
            chart.write(svg_path);
            written.push_back(svg_path);
        }
    }
    return written;
}

/// Per-trial outcome of the tuning comparison.
struct TuneTrial {
    std::uint64_t trial_seed = 0;
    TuneResult basic;
    TuneResult clustered;
    double basic_sr_mean = 0.0;
    double clustered_sr_mean = 0.0;
    double default_mean = 0.0;
    bool paired_seeds_ok = false;
};

struct TuneReport {
    std::vector<TuneTrial> trials;
    PairedTestResult basic_vs_clustered;
    PairedTestResult basic_vs_its_sr;
    PairedTestResult clustered_vs_its_sr;
};

/// tune: runs the basic and clustered scenarios with paired seeds, adds
/// the identical-weights baselines and the default configuration, and
/// writes the comparison report with the per-run audit table.
inline TuneReport cmd_tune(const PipelineConfig& cfg) {
    using namespace detail_pipeline;
    if (cfg.instance_paths.empty())
        throw usage_error("tune: no instances configured");
    if (cfg.tune_trials < 2)
        throw usage_error("tune: need at least two trials for the paired "
                          "comparison");
    ensure_out_dir(cfg);

    const auto roster = cfg.roster();

    // Cluster assignments from the analyze stage's report.
    std::vector<std::size_t> assignments(roster.size());
    {
        const std::string path = cfg.out_dir + "/clusters.tsv";
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw data_error("tune: cluster report '" + path +
                             "' not found; run analyze first");
        std::map<std::string, std::size_t> by_id;
        std::string line;
        bool header_seen = false;
        while (std::getline(is, line)) {
            const std::string_view t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            const auto fields = split(t, '\t');
            if (fields.size() < 2)
                throw data_error("tune: malformed cluster report row: '" +
                                 std::string(t) + "'");
            by_id[fields[0]] = static_cast<std::size_t>(
                parse_uint(fields[1], "cluster id"));
        }
        for (std::size_t k = 0; k < roster.size(); ++k) {
            const auto it = by_id.find(roster[k].id);
            if (it == by_id.end())
                throw data_error("tune: cluster report does not cover "
                                 "neighborhood '" +
                                 roster[k].id + "'");
            assignments[k] = it->second - 1;
        }
    }

    std::vector<TuneInstance> instances;
    for (const std::string& path : cfg.instance_paths) {
        const RoutingInstance inst =
            staged("tune/load", [&] { return read_instance(path); });
        const double lb =
            staged("tune/load", [&] { return read_lower_bound(path); });
        instances.push_back(staged("tune/load", [&] {
            return make_tune_instance(inst, lb, cfg.tune_grid_intervals,
                                      cfg.decay);
        }));
    }

    const ConfigSpace basic_space = build_space(
        SpaceMode::basic, roster.size(), {}, cfg.la_range, cfg.it_wi_range);
    const ConfigSpace clustered_space =
        build_space(SpaceMode::clustered, roster.size(), assignments,
                    cfg.la_range, cfg.it_wi_range);

    SampledConfig default_cfg;
    default_cfg.weights.assign(roster.size(),
                               1.0 / static_cast<double>(roster.size()));
    default_cfg.la_list = cfg.default_la_list;
    default_cfg.it_wi = cfg.default_it_wi;

    TuneReport report;
    report.trials.resize(cfg.tune_trials);
    for (std::size_t t = 0; t < cfg.tune_trials; ++t) {
        TuneTrial& trial = report.trials[t];
        trial.trial_seed = derive_seed(cfg.seed, "tune-trial", t);
        trial.basic = staged("tune/search", [&] {
            return random_search(basic_space, roster, instances, cfg.tune,
                                 trial.trial_seed);
        });
        trial.clustered = staged("tune/search", [&] {
            return random_search(clustered_space, roster, instances, cfg.tune,
                                 trial.trial_seed);
        });
        trial.basic_sr_mean = mean(evaluate_config(
            with_identical_weights(trial.basic.best), roster, instances,
            cfg.tune, trial.trial_seed));
        trial.clustered_sr_mean = mean(evaluate_config(
            with_identical_weights(trial.clustered.best), roster, instances,
            cfg.tune, trial.trial_seed));
        trial.default_mean = mean(evaluate_config(
            default_cfg, roster, instances, cfg.tune, trial.trial_seed));

        // Audit: both scenarios must have faced exactly the same run seeds.
        std::string a, b;
        for (const RunRecord& r : trial.basic.runs)
            if (r.phase == "train")
                a += r.instance_id + ":" + std::to_string(r.seed) + ";";
        for (const RunRecord& r : trial.clustered.runs)
            if (r.phase == "train")
                b += r.instance_id + ":" + std::to_string(r.seed) + ";";
        trial.paired_seeds_ok = !a.empty() && a == b;
    }

    std::vector<double> basic_means, clustered_means, basic_sr, clustered_sr;
    for (const TuneTrial& t : report.trials) {
        basic_means.push_back(t.basic.eval_mean_gap);
        clustered_means.push_back(t.clustered.eval_mean_gap);
        basic_sr.push_back(t.basic_sr_mean);
        clustered_sr.push_back(t.clustered_sr_mean);
    }
    report.basic_vs_clustered = paired_compare(basic_means, clustered_means);
    report.basic_vs_its_sr = paired_compare(basic_means, basic_sr);
    report.clustered_vs_its_sr =
        paired_compare(clustered_means, clustered_sr);

    {
        auto os = open_out(cfg.out_dir + "/tune_report.tsv");
        os << "# nbprof tuning comparison\n# " << cfg.stamp() << '\n';
        os << "# series: basic, clustered, basic_sr (identical weights), "
              "clustered_sr (identical weights); default = identical "
              "weights with laList="
           << cfg.default_la_list << " itWI=" << cfg.default_it_wi << '\n';
        const auto& bc = report.basic_vs_clustered;
        os << "# paired_t basic_vs_clustered: mean_diff "
           << format_value(bc.mean_difference) << " t "
           << format_value(bc.t_statistic) << " p "
           << format_value(bc.p_value)
           << (bc.degenerate ? " (degenerate)" : "") << '\n';
        const auto& bs = report.basic_vs_its_sr;
        os << "# paired_t basic_vs_basic_sr: mean_diff "
           << format_value(bs.mean_difference) << " t "
           << format_value(bs.t_statistic) << " p "
           << format_value(bs.p_value)
           << (bs.degenerate ? " (degenerate)" : "") << '\n';
        const auto& cs = report.clustered_vs_its_sr;
        os << "# paired_t clustered_vs_clustered_sr: mean_diff "
           << format_value(cs.mean_difference) << " t "
           << format_value(cs.t_statistic) << " p "
           << format_value(cs.p_value)
           << (cs.degenerate ? " (degenerate)" : "") << '\n';
        os << "trial\tseed\tpaired_seeds_ok\tbasic_train\tbasic_eval\t"
              "clustered_train\tclustered_eval\tbasic_sr_eval\t"
              "clustered_sr_eval\tdefault_eval\n";
        for (std::size_t t = 0; t < report.trials.size(); ++t) {
            const TuneTrial& tr = report.trials[t];
            os << t + 1 << '\t' << tr.trial_seed << '\t'
               << (tr.paired_seeds_ok ? "true" : "false") << '\t'
               << format_value(tr.basic.train_mean_gap) << '\t'
               << format_value(tr.basic.eval_mean_gap) << '\t'
               << format_value(tr.clustered.train_mean_gap) << '\t'
               << format_value(tr.clustered.eval_mean_gap) << '\t'
               << format_value(tr.basic_sr_mean) << '\t'
               << format_value(tr.clustered_sr_mean) << '\t'
               << format_value(tr.default_mean) << '\n';
        }
        // Per-run audit table.
        os << "# per-run gap table\n";
        os << "trial\tscenario\tphase\tconfig\tinstance\trun_seed\tcost\t"
              "gap\n";
        for (std::size_t t = 0; t < report.trials.size(); ++t) {
            const TuneTrial& tr = report.trials[t];
            for (const char* scenario : {"basic", "clustered"}) {
                const TuneResult& res = std::string(scenario) == "basic"
                                            ? tr.basic
                                            : tr.clustered;
                for (const RunRecord& r : res.runs)
                    os << t + 1 << '\t' << scenario << '\t' << r.phase << '\t'
                       << r.config_index << '\t' << r.instance_id << '\t'
                       << r.seed << '\t' << format_cost(r.cost) << '\t'
                       << format_value(r.gap) << '\n';
            }
        }
    }
    return report;
}

} // namespace nbprof
