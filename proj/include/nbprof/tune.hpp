#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/parallel.hpp"
#include "nbprof/rng.hpp"
#include "nbprof/search.hpp"
#include "nbprof/stats.hpp"

namespace nbprof {

/// 100 * (cost - lowerBound) / lowerBound.
inline double optimality_gap(double cost, double lower_bound) {
    if (!(lower_bound > 0.0))
        throw usage_error("optimality_gap: lower bound must be positive");
    if (!std::isfinite(cost))
        throw usage_error("optimality_gap: cost must be finite");
    return 100.0 * (cost - lower_bound) / lower_bound;
}

struct ParameterRange {
    long long lo = 1;
    long long hi = 1;
};

/// Tunable weight groups plus the two integer search parameters. Each
/// group shares one weight; the groups partition the roster.
struct ConfigSpace {
    std::vector<std::vector<std::size_t>> groups;
    ParameterRange la_list{1, 5000};
    ParameterRange it_wi{100, 50000};

    std::size_t n_weight_parameters() const { return groups.size(); }

    void validate(std::size_t roster_size) const {
        if (groups.empty()) throw usage_error("ConfigSpace: no weight groups");
        std::vector<int> seen(roster_size, 0);
        for (const auto& g : groups) {
            if (g.empty()) throw usage_error("ConfigSpace: empty weight group");
            for (std::size_t k : g) {
                if (k >= roster_size)
                    throw usage_error("ConfigSpace: group member outside the "
                                      "roster");
                ++seen[k];
            }
        }
        for (std::size_t k = 0; k < roster_size; ++k)
            if (seen[k] != 1)
                throw usage_error(
                    "ConfigSpace: groups must partition the roster "
                    "(neighborhood " +
                    std::to_string(k) + " covered " + std::to_string(seen[k]) +
                    " times)");
        if (la_list.lo < 1 || la_list.hi < la_list.lo || it_wi.lo < 1 ||
            it_wi.hi < it_wi.lo)
            throw usage_error("ConfigSpace: bad integer parameter range");
    }
};

enum class SpaceMode { basic, clustered };

/// basic: one weight per neighborhood. clustered: one weight per cluster
/// of the supplied assignment (0-based cluster ids, one per neighborhood).
inline ConfigSpace build_space(SpaceMode mode, std::size_t roster_size,
                               const std::vector<std::size_t>& assignments = {},
                               ParameterRange la_list = {1, 5000},
                               ParameterRange it_wi = {100, 50000}) {
    if (roster_size == 0) throw usage_error("build_space: empty roster");
    ConfigSpace space;
    space.la_list = la_list;
    space.it_wi = it_wi;
    if (mode == SpaceMode::basic) {
        for (std::size_t k = 0; k < roster_size; ++k)
            space.groups.push_back({k});
    } else {
        if (assignments.size() != roster_size)
            throw usage_error("build_space: cluster assignments must cover "
                              "every neighborhood");
        const std::size_t n_clusters =
            1 + *std::max_element(assignments.begin(), assignments.end());
        space.groups.assign(n_clusters, {});
        for (std::size_t k = 0; k < roster_size; ++k)
            space.groups[assignments[k]].push_back(k);
        std::erase_if(space.groups,
                      [](const std::vector<std::size_t>& g) { return g.empty(); });
    }
    space.validate(roster_size);
    return space;
}

/// A point of the configuration space, expanded to per-neighborhood
/// weights that sum to one.
struct SampledConfig {
    std::vector<double> weights;
    std::uint64_t la_list = 0;
    std::uint64_t it_wi = 0;
};

/// Group weights ~ U[0,1] copied to each member, then normalized; the
/// integers are log-uniform over their ranges.
inline SampledConfig sample_config(const ConfigSpace& space,
                                   std::size_t roster_size, Rng& rng) {
    space.validate(roster_size);
    SampledConfig cfg;
    cfg.weights.assign(roster_size, 0.0);
    for (;;) {
        double total = 0.0;
        for (const auto& group : space.groups) {
            const double w = uniform01(rng);
            for (std::size_t k : group) cfg.weights[k] = w;
        }
        for (std::size_t k = 0; k < roster_size; ++k) total += cfg.weights[k];
        if (total > 0.0) {
            for (double& w : cfg.weights) w /= total;
            break;
        }
        // All-zero draw: resample.
    }
    cfg.la_list = static_cast<std::uint64_t>(
        log_uniform_int(rng, space.la_list.lo, space.la_list.hi));
    cfg.it_wi = static_cast<std::uint64_t>(
        log_uniform_int(rng, space.it_wi.lo, space.it_wi.hi));
    return cfg;
}

/// Instance bundle the tuner runs against.
struct TuneInstance {
    RoutingInstance instance;
    double lower_bound = 0.0;
    IntervalGrid grid; ///< coarse grid; tuner runs discard the stats
};

inline TuneInstance make_tune_instance(RoutingInstance inst,
                                       double lower_bound,
                                       std::size_t n_intervals = 100,
                                       double decay = 0.99) {
    if (!(lower_bound > 0.0))
        throw data_error("make_tune_instance: lower bound must be positive "
                         "for gap scoring");
    const double upper = initial_solution(inst).cost;
    TuneInstance ti{std::move(inst), lower_bound,
                    build_grid(QualityBounds{upper, lower_bound}, n_intervals,
                               decay)};
    return ti;
}

struct TuneOptions {
    std::uint64_t budget_runs = 200; ///< training algorithm runs
    std::size_t train_runs_per_instance = 1;
    std::size_t eval_runs_per_instance = 3;
    /// Per-run cap in deterministic work units: weight vectors then trade
    /// operator strength against operator cost, like a wall-clock budget
    /// would.
    SearchBudget run_budget{0, 0.0, 500000};
    std::size_t threads = 1;
};

/// One row of the audit table kept by the tuner.
struct RunRecord {
    std::string phase; ///< "train" or "eval"
    std::size_t config_index = 0;
    std::string instance_id;
    std::uint64_t seed = 0;
    double cost = 0.0;
    double gap = 0.0;
};

struct TuneResult {
    SampledConfig best;
    std::size_t best_index = 0;
    double train_mean_gap = 0.0;
    double eval_mean_gap = 0.0;
    std::vector<double> eval_gaps; ///< per evaluation run
    std::vector<RunRecord> runs;   ///< full audit table
    std::size_t n_configs = 0;
};

namespace detail_tune {

inline double run_gap(const std::vector<NeighborhoodDef>& roster,
                      const TuneInstance& ti, const SampledConfig& cfg,
                      const SearchBudget& budget, std::uint64_t seed,
                      double* cost_out = nullptr) {
    SearchConfig sc;
    sc.weights = cfg.weights;
    sc.la_list = cfg.la_list;
    sc.it_wi = cfg.it_wi;
    sc.budget = budget;
    sc.seed = seed;
    const SearchResult res = lahc_run(ti.instance, roster, sc, ti.grid);
    if (cost_out) *cost_out = res.best_cost;
    return optimality_gap(res.best_cost, ti.lower_bound);
}

} // namespace detail_tune

/// Evaluates one fixed configuration on the held-out seed block; used for
/// the identical-weights baselines and the scenario winners.
inline std::vector<double>
evaluate_config(const SampledConfig& cfg,
                const std::vector<NeighborhoodDef>& roster,
                const std::vector<TuneInstance>& instances,
                const TuneOptions& options, std::uint64_t seed,
                std::vector<RunRecord>* audit = nullptr,
                std::size_t config_index = 0) {
    if (instances.empty()) throw usage_error("evaluate_config: no instances");
    const std::size_t jobs = instances.size() * options.eval_runs_per_instance;
    std::vector<double> gaps(jobs, 0.0);
    std::vector<double> costs(jobs, 0.0);
    parallel_for(jobs, options.threads, [&](std::size_t j) {
        const std::size_t inst_idx = j / options.eval_runs_per_instance;
        const std::size_t run_idx = j % options.eval_runs_per_instance;
        const std::uint64_t run_seed = derive_seed(
            seed, "eval:" + instances[inst_idx].instance.instance_id(),
            run_idx);
        gaps[j] = detail_tune::run_gap(roster, instances[inst_idx], cfg,
                                       options.run_budget, run_seed, &costs[j]);
    });
    if (audit) {
        for (std::size_t j = 0; j < jobs; ++j) {
            const std::size_t inst_idx = j / options.eval_runs_per_instance;
            const std::size_t run_idx = j % options.eval_runs_per_instance;
            audit->push_back(
                {"eval", config_index,
                 instances[inst_idx].instance.instance_id(),
                 derive_seed(seed,
                             "eval:" +
                                 instances[inst_idx].instance.instance_id(),
                             run_idx),
                 costs[j], gaps[j]});
        }
    }
    return gaps;
}

/// Seeded random search over a configuration space. Every candidate is
/// scored with the same per-(instance, run) seeds, so candidates face
/// identical conditions; the winner by training mean gap is re-evaluated
/// on a disjoint seed block. Sampling configuration i depends only on
/// (seed, i), which makes a larger budget a strict superset of a smaller
/// one.
inline TuneResult random_search(const ConfigSpace& space,
                                const std::vector<NeighborhoodDef>& roster,
                                const std::vector<TuneInstance>& instances,
                                const TuneOptions& options,
                                std::uint64_t seed) {
    if (instances.empty()) throw usage_error("random_search: no instances");
    if (options.budget_runs < 1)
        throw usage_error("random_search: budget must be >= 1");
    space.validate(roster.size());

    const std::size_t runs_per_config =
        instances.size() * options.train_runs_per_instance;
    const std::size_t n_configs = std::max<std::size_t>(
        1, static_cast<std::size_t>(options.budget_runs) / runs_per_config);

    std::vector<SampledConfig> configs(n_configs);
    for (std::size_t i = 0; i < n_configs; ++i) {
        Rng rng(derive_seed(seed, "sample", i));
        configs[i] = sample_config(space, roster.size(), rng);
    }

    TuneResult result;
    result.n_configs = n_configs;

    const std::size_t jobs = n_configs * runs_per_config;
    std::vector<double> gaps(jobs, 0.0);
    std::vector<double> costs(jobs, 0.0);
    parallel_for(jobs, options.threads, [&](std::size_t j) {
        const std::size_t cfg_idx = j / runs_per_config;
        const std::size_t slot = j % runs_per_config;
        const std::size_t inst_idx = slot / options.train_runs_per_instance;
        const std::size_t run_idx = slot % options.train_runs_per_instance;
        // Seeds depend on the slot only: every configuration sees the
        // same runs.
        const std::uint64_t run_seed = derive_seed(
            seed, "train:" + instances[inst_idx].instance.instance_id(),
            run_idx);
        gaps[j] = detail_tune::run_gap(roster, instances[inst_idx],
                                       configs[cfg_idx], options.run_budget,
                                       run_seed, &costs[j]);
    });

    double best_mean = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < n_configs; ++i) {
        double m = 0.0;
        for (std::size_t s = 0; s < runs_per_config; ++s)
            m += gaps[i * runs_per_config + s];
        m /= static_cast<double>(runs_per_config);
        if (m < best_mean) {
            best_mean = m;
            best_idx = i;
        }
    }
    for (std::size_t j = 0; j < jobs; ++j) {
        const std::size_t cfg_idx = j / runs_per_config;
        const std::size_t slot = j % runs_per_config;
        const std::size_t inst_idx = slot / options.train_runs_per_instance;
        const std::size_t run_idx = slot % options.train_runs_per_instance;
        result.runs.push_back(
            {"train", cfg_idx, instances[inst_idx].instance.instance_id(),
             derive_seed(seed,
                         "train:" +
                             instances[inst_idx].instance.instance_id(),
                         run_idx),
             costs[j], gaps[j]});
    }

    result.best = configs[best_idx];
    result.best_index = best_idx;
    result.train_mean_gap = best_mean;
    result.eval_gaps = evaluate_config(result.best, roster, instances, options,
                                       seed, &result.runs, best_idx);
    result.eval_mean_gap = mean(result.eval_gaps);
    return result;
}

/// Same-weight copy of a configuration (the Simple Random counterpart):
/// keeps laList/itWI, levels the weights.
inline SampledConfig with_identical_weights(const SampledConfig& cfg) {
    SampledConfig out = cfg;
    const double w = 1.0 / static_cast<double>(cfg.weights.size());
    std::fill(out.weights.begin(), out.weights.end(), w);
    return out;
}

/// Two-sided paired comparison of per-trial evaluation means.
inline PairedTestResult paired_compare(const std::vector<double>& a,
                                       const std::vector<double>& b) {
    return paired_t_test(a, b);
}

} // namespace nbprof
