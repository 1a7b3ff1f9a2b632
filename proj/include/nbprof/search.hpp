#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/neighborhoods.hpp"
#include "nbprof/rng.hpp"
#include "nbprof/routing.hpp"
#include "nbprof/runlog.hpp"

namespace nbprof {

struct SearchBudget {
    std::uint64_t max_applications = 0; ///< total neighborhood applications
    double max_seconds = 0.0;           ///< 0 disables the wall-clock cap
    /// Cap on summed operator work (deterministic time units); expensive
    /// operators then consume budget faster, the way slow operators eat a
    /// wall-clock budget. 0 disables.
    std::uint64_t max_work_units = 0;

    bool any_limit() const {
        return max_applications > 0 || max_seconds > 0.0 || max_work_units > 0;
    }
};

struct SearchConfig {
    std::vector<double> weights; ///< one per roster entry; normalized on use
    std::uint64_t la_list = 50;  ///< LAHC memory length
    std::uint64_t it_wi = 4000;  ///< idle iterations before the inner stop
    SearchBudget budget{};
    std::uint64_t seed = 1;
    double epsilon_rel = 1e-9; ///< move classification tolerance, relative

    void validate(std::size_t roster_size) const {
        if (weights.size() != roster_size)
            throw usage_error("SearchConfig: weight count does not match the "
                              "roster");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w))
                throw usage_error("SearchConfig: weights must be nonnegative");
            total += w;
        }
        if (total <= 0.0)
            throw usage_error("SearchConfig: all-zero weight vector");
        if (la_list < 1) throw usage_error("SearchConfig: laList must be >= 1");
        if (it_wi < 1) throw usage_error("SearchConfig: itWI must be >= 1");
        if (!budget.any_limit())
            throw usage_error("SearchConfig: budget must be positive");
    }
};

/// Weight-proportional draw: index k with probability w_k / sum(w).
inline std::size_t select_neighborhood(const std::vector<double>& weights,
                                       Rng& rng) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw usage_error("select_neighborhood: weights must be "
                              "nonnegative and finite");
        total += w;
    }
    if (total <= 0.0)
        throw usage_error("select_neighborhood: all-zero weight vector");
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) return k;
    }
    return weights.size() - 1;
}

struct SearchResult {
    Solution best;
    double best_cost = 0.0;
    RunLog log;
    std::uint64_t applications = 0;
    std::uint64_t work_units = 0; ///< summed operator work
    std::uint64_t restarts = 0;   ///< ILS perturbations performed
};

/// Iterated local search with an LAHC inner loop.
///
/// LAHC acceptance: a candidate is accepted iff its cost is <= the memory
/// slot from laList iterations ago or <= the current cost; the slot is
/// then overwritten with the (post-acceptance) current cost. The inner
/// loop ends after itWI consecutive iterations that did not improve the
/// current solution; the outer loop applies one ruin-recreate perturbation
/// to the best solution and restarts with fresh memory until the budget is
/// exhausted.
///
/// Every application, accepted or not — including the perturbations — is
/// recorded in the RunLog cell of the pre-move cost's interval. The roster
/// must therefore contain a ruin-recreate entry for the perturbation to be
/// attributed to.
inline SearchResult lahc_run(const RoutingInstance& inst,
                             const std::vector<NeighborhoodDef>& roster,
                             const SearchConfig& config,
                             const IntervalGrid& grid) {
    config.validate(roster.size());
    std::size_t perturb_index = roster.size();
    for (std::size_t k = 0; k < roster.size(); ++k)
        if (roster[k].type == NeighborhoodType::ruin_recreate) {
            perturb_index = k;
            break;
        }
    if (perturb_index == roster.size())
        throw usage_error("lahc_run: roster needs a ruin-recreate entry for "
                          "the ILS perturbation");

    Rng rng(config.seed);
    const auto started = std::chrono::steady_clock::now();
    const auto out_of_time = [&] {
        if (config.budget.max_seconds <= 0.0) return false;
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - started;
        return elapsed.count() >= config.budget.max_seconds;
    };

    SearchResult result;
    result.log = RunLog(inst.instance_id(), grid, roster_ids(roster));
    result.log.set_run_count(1);

    Solution current = initial_solution(inst);
    result.best = current;
    result.best_cost = current.cost;

    const auto budget_left = [&] {
        if (config.budget.max_applications > 0 &&
            result.applications >= config.budget.max_applications)
            return false;
        if (config.budget.max_work_units > 0 &&
            result.work_units >= config.budget.max_work_units)
            return false;
        return !out_of_time();
    };

    const auto record = [&](std::size_t k, double pre_cost,
                            const Solution& candidate,
                            std::uint64_t work_units) {
        const double eps = config.epsilon_rel * std::fabs(pre_cost);
        const MoveKind kind = classify_move(pre_cost, candidate.cost, eps);
        CellStats& cell = result.log.cell(k, grid.interval_of(pre_cost));
        ++cell.n_iters;
        switch (kind) {
        case MoveKind::improve:
            ++cell.n_improve;
            cell.sum_improve += pre_cost - candidate.cost;
            break;
        case MoveKind::worsen:
            ++cell.n_worsen;
            cell.sum_worsen += candidate.cost - pre_cost;
            break;
        case MoveKind::nothing:
            ++cell.n_nothing;
            break;
        }
        cell.sum_time_ns += work_units * WorkMeter::ns_per_unit;
        ++result.applications;
        result.work_units += work_units;
        return kind;
    };

    bool first_descent = true;
    while (budget_left()) {
        if (!first_descent) {
            // Perturb the best solution with one ruin-recreate application.
            WorkMeter meter;
            Solution perturbed = apply_neighborhood(
                roster[perturb_index], inst, result.best, rng, meter);
            record(perturb_index, result.best_cost, perturbed,
                   meter.units);
            ++result.restarts;
            current = std::move(perturbed);
        }
        first_descent = false;

        std::vector<double> memory(config.la_list, current.cost);
        std::uint64_t idle = 0;
        std::uint64_t iter = 0;
        while (idle < config.it_wi && budget_left()) {
            const std::size_t k = select_neighborhood(config.weights, rng);
            WorkMeter meter;
            const double pre_cost = current.cost;
            Solution candidate =
                apply_neighborhood(roster[k], inst, current, rng, meter);
            const MoveKind kind =
                record(k, pre_cost, candidate, meter.units);

            idle = kind == MoveKind::improve ? 0 : idle + 1;
            const std::size_t slot =
                static_cast<std::size_t>(iter % config.la_list);
            if (candidate.cost <= memory[slot] || candidate.cost <= pre_cost)
                current = std::move(candidate);
            memory[slot] = current.cost;
            ++iter;
            if (current.cost < result.best_cost) {
                result.best = current;
                result.best_cost = current.cost;
            }
            // Periodic full revalidation: feasibility plus cache-vs-
            // recomputed cost within 1e-6 relative.
            if (iter % 1000 == 0) validate_solution(inst, current);
        }
    }
    return result;
}

} // namespace nbprof
