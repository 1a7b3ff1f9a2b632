#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/rng.hpp"
#include "nbprof/routing.hpp"

namespace nbprof {

enum class MoveKind { improve, worsen, nothing };

struct MoveOutcome {
    MoveKind kind = MoveKind::nothing;
    double delta = 0.0; ///< |cost change|, zero for `nothing`
    std::uint64_t elapsed_ns = 0;
};

/// Minimization: improve iff new < old - eps, worsen iff new > old + eps.
inline MoveKind classify_move(double old_cost, double new_cost,
                              double epsilon) {
    if (!std::isfinite(old_cost) || !std::isfinite(new_cost))
        throw usage_error("classify_move: costs must be finite");
    if (epsilon < 0.0)
        throw usage_error("classify_move: epsilon must be nonnegative");
    if (new_cost < old_cost - epsilon) return MoveKind::improve;
    if (new_cost > old_cost + epsilon) return MoveKind::worsen;
    return MoveKind::nothing;
}

enum class NeighborhoodType {
    cheapest_insertion, ///< remove `size` customers, greedy reinsertion
    swap,               ///< exchange the positions of two customers
    relocate,           ///< move one customer to a random position
    intra_route_two_opt,
    inter_route_two_opt,
    remove_route, ///< dissolve a route into the others
    ruin_recreate ///< remove `size` customers, greedy reinsertion in
                  ///< random order (also the ILS perturbation)
};

struct NeighborhoodDef {
    std::string id;
    NeighborhoodType type;
    std::size_t size = 0; ///< meaningful for sized types only
};

/// The 10-operator roster: 7 types, cheapest-insertion at four sizes.
inline std::vector<NeighborhoodDef> default_roster() {
    return {
        {"cheapest-insertion-1", NeighborhoodType::cheapest_insertion, 1},
        {"cheapest-insertion-2", NeighborhoodType::cheapest_insertion, 2},
        {"cheapest-insertion-5", NeighborhoodType::cheapest_insertion, 5},
        {"cheapest-insertion-10", NeighborhoodType::cheapest_insertion, 10},
        {"swap", NeighborhoodType::swap, 0},
        {"relocate", NeighborhoodType::relocate, 0},
        {"intra-route-two-opt", NeighborhoodType::intra_route_two_opt, 0},
        {"inter-route-two-opt", NeighborhoodType::inter_route_two_opt, 0},
        {"remove-route", NeighborhoodType::remove_route, 0},
        {"ruin-recreate-3", NeighborhoodType::ruin_recreate, 3},
    };
}

/// Demo roster: the default plus a second copy of swap under its own id.
/// Two structurally identical operators give the downstream analysis a
/// known-answer pair that must land in one cluster.
inline std::vector<NeighborhoodDef> demo_roster() {
    auto roster = default_roster();
    roster.push_back({"swap-b", NeighborhoodType::swap, 0});
    return roster;
}

inline std::vector<std::string>
roster_ids(const std::vector<NeighborhoodDef>& roster) {
    std::vector<std::string> ids;
    ids.reserve(roster.size());
    for (const auto& d : roster) ids.push_back(d.id);
    return ids;
}

namespace detail_moves {

constexpr int max_retries = 20;

struct Location {
    std::size_t route;
    std::size_t pos;
};

inline Location locate(const Solution& s, std::size_t customer) {
    for (std::size_t r = 0; r < s.routes.size(); ++r)
        for (std::size_t p = 0; p < s.routes[r].size(); ++p)
            if (s.routes[r][p] == customer) return {r, p};
    throw internal_error("locate: customer not in solution");
}

inline void drop_empty_routes(Solution& s) {
    std::erase_if(s.routes,
                  [](const std::vector<std::size_t>& r) { return r.empty(); });
}

/// Feasible insertion candidates for `customer`, cheapest first (at most
/// `keep` of them). Positions span every gap of every route with enough
/// remaining capacity.
inline std::vector<std::pair<double, Location>>
insertion_candidates(const RoutingInstance& inst, const Solution& s,
                     std::size_t customer, WorkMeter& meter,
                     std::size_t keep) {
    const double demand = inst.customer(customer).demand;
    std::vector<std::pair<double, Location>> found;
    for (std::size_t r = 0; r < s.routes.size(); ++r) {
        const auto& route = s.routes[r];
        if (route_load(inst, route) + demand > inst.capacity()) continue;
        for (std::size_t p = 0; p <= route.size(); ++p) {
            const double before = p == 0 ? inst.depot_distance(customer, meter)
                                         : inst.distance(route[p - 1],
                                                         customer, meter);
            const double after = p == route.size()
                                     ? inst.depot_distance(customer, meter)
                                     : inst.distance(customer, route[p], meter);
            double removed = 0.0;
            if (!route.empty()) {
                if (p == 0)
                    removed = inst.depot_distance(route[0], meter);
                else if (p == route.size())
                    removed = inst.depot_distance(route.back(), meter);
                else
                    removed = inst.distance(route[p - 1], route[p], meter);
            }
            found.emplace_back(before + after - removed, Location{r, p});
        }
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first < b.first;
                  if (a.second.route != b.second.route)
                      return a.second.route < b.second.route;
                  return a.second.pos < b.second.pos;
              });
    if (found.size() > keep) found.resize(keep);
    return found;
}

/// Cheapest feasible (route, position) for `customer`. Returns false when
/// no route can take the demand.
inline bool cheapest_position(const RoutingInstance& inst, const Solution& s,
                              std::size_t customer, WorkMeter& meter,
                              Location& out) {
    const auto c = insertion_candidates(inst, s, customer, meter, 1);
    if (c.empty()) return false;
    out = c.front().second;
    return true;
}

/// Removes the chosen customers and reinserts them in the given order.
/// noise_k = 1 is pure cheapest insertion; noise_k > 1 draws uniformly
/// among the noise_k cheapest feasible positions, which keeps repeated
/// ruin-recreate applications from reassembling the identical solution.
/// Opens a new route when nothing is feasible.
inline void remove_and_reinsert(const RoutingInstance& inst, Solution& s,
                                const std::vector<std::size_t>& customers,
                                WorkMeter& meter, std::size_t noise_k = 1,
                                Rng* rng = nullptr) {
    for (auto& route : s.routes)
        std::erase_if(route, [&](std::size_t c) {
            return std::find(customers.begin(), customers.end(), c) !=
                   customers.end();
        });
    drop_empty_routes(s);
    for (std::size_t c : customers) {
        const auto candidates =
            insertion_candidates(inst, s, c, meter, std::max<std::size_t>(
                                                        noise_k, 1));
        if (candidates.empty()) {
            s.routes.push_back({c});
            continue;
        }
        const std::size_t pick =
            (noise_k > 1 && rng) ? uniform_index(*rng, candidates.size()) : 0;
        const Location loc = candidates[pick].second;
        s.routes[loc.route].insert(s.routes[loc.route].begin() +
                                       static_cast<std::ptrdiff_t>(loc.pos),
                                   c);
    }
}

/// Draws `count` distinct customer indices.
inline std::vector<std::size_t> sample_customers(const RoutingInstance& inst,
                                                 std::size_t count, Rng& rng) {
    const std::size_t n = inst.n_customers();
    count = std::min(count, n);
    std::vector<std::size_t> picked;
    picked.reserve(count);
    while (picked.size() < count) {
        const std::size_t c = uniform_index(rng, n);
        if (std::find(picked.begin(), picked.end(), c) == picked.end())
            picked.push_back(c);
    }
    return picked;
}

inline void finalize(const RoutingInstance& inst, Solution& s,
                     WorkMeter& meter) {
    drop_empty_routes(s);
    s.cost = solution_cost(inst, s, meter);
}

inline Solution move_cheapest_insertion(const RoutingInstance& inst,
                                        const Solution& base, std::size_t size,
                                        Rng& rng, WorkMeter& meter) {
    Solution s = base;
    const auto victims = sample_customers(inst, size, rng);
    remove_and_reinsert(inst, s, victims, meter);
    finalize(inst, s, meter);
    return s;
}

inline Solution move_swap(const RoutingInstance& inst, const Solution& base,
                          Rng& rng, WorkMeter& meter) {
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const std::size_t a = uniform_index(rng, inst.n_customers());
        std::size_t b = uniform_index(rng, inst.n_customers());
        if (a == b) continue;
        Solution s = base;
        const Location la = locate(s, a);
        const Location lb = locate(s, b);
        std::swap(s.routes[la.route][la.pos], s.routes[lb.route][lb.pos]);
        if (la.route != lb.route &&
            (route_load(inst, s.routes[la.route]) > inst.capacity() ||
             route_load(inst, s.routes[lb.route]) > inst.capacity()))
            continue;
        finalize(inst, s, meter);
        return s;
    }
    return base;
}

inline Solution move_relocate(const RoutingInstance& inst,
                              const Solution& base, Rng& rng,
                              WorkMeter& meter) {
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const std::size_t c = uniform_index(rng, inst.n_customers());
        Solution s = base;
        const Location from = locate(s, c);
        s.routes[from.route].erase(s.routes[from.route].begin() +
                                   static_cast<std::ptrdiff_t>(from.pos));
        drop_empty_routes(s);
        if (s.routes.empty()) return base;
        const std::size_t r = uniform_index(rng, s.routes.size());
        if (route_load(inst, s.routes[r]) + inst.customer(c).demand >
            inst.capacity())
            continue;
        const std::size_t p = uniform_index(rng, s.routes[r].size() + 1);
        s.routes[r].insert(s.routes[r].begin() + static_cast<std::ptrdiff_t>(p),
                           c);
        finalize(inst, s, meter);
        return s;
    }
    return base;
}

inline Solution move_intra_two_opt(const RoutingInstance& inst,
                                   const Solution& base, Rng& rng,
                                   WorkMeter& meter) {
    std::vector<std::size_t> eligible;
    for (std::size_t r = 0; r < base.routes.size(); ++r)
        if (base.routes[r].size() >= 2) eligible.push_back(r);
    if (eligible.empty()) return base;
    const std::size_t r = eligible[uniform_index(rng, eligible.size())];
    Solution s = base;
    auto& route = s.routes[r];
    std::size_t i = uniform_index(rng, route.size());
    std::size_t j = uniform_index(rng, route.size());
    if (i == j) j = (j + 1) % route.size();
    if (i > j) std::swap(i, j);
    std::reverse(route.begin() + static_cast<std::ptrdiff_t>(i),
                 route.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    finalize(inst, s, meter);
    return s;
}

inline Solution move_inter_two_opt(const RoutingInstance& inst,
                                   const Solution& base, Rng& rng,
                                   WorkMeter& meter) {
    if (base.routes.size() < 2) return base;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const std::size_t r1 = uniform_index(rng, base.routes.size());
        std::size_t r2 = uniform_index(rng, base.routes.size());
        if (r1 == r2) continue;
        Solution s = base;
        auto& a = s.routes[r1];
        auto& b = s.routes[r2];
        const std::size_t i = uniform_index(rng, a.size() + 1);
        const std::size_t j = uniform_index(rng, b.size() + 1);
        std::vector<std::size_t> new_a(a.begin(),
                                       a.begin() + static_cast<std::ptrdiff_t>(i));
        new_a.insert(new_a.end(), b.begin() + static_cast<std::ptrdiff_t>(j),
                     b.end());
        std::vector<std::size_t> new_b(b.begin(),
                                       b.begin() + static_cast<std::ptrdiff_t>(j));
        new_b.insert(new_b.end(), a.begin() + static_cast<std::ptrdiff_t>(i),
                     a.end());
        if (route_load(inst, new_a) > inst.capacity() ||
            route_load(inst, new_b) > inst.capacity())
            continue;
        a = std::move(new_a);
        b = std::move(new_b);
        finalize(inst, s, meter);
        return s;
    }
    return base;
}

inline Solution move_remove_route(const RoutingInstance& inst,
                                  const Solution& base, Rng& rng,
                                  WorkMeter& meter) {
    if (base.routes.size() < 2) return base;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        const std::size_t victim = uniform_index(rng, base.routes.size());
        Solution s = base;
        std::vector<std::size_t> customers = s.routes[victim];
        s.routes.erase(s.routes.begin() + static_cast<std::ptrdiff_t>(victim));
        // Shuffle the reinsertion order.
        for (std::size_t i = customers.size(); i > 1; --i)
            std::swap(customers[i - 1], customers[uniform_index(rng, i)]);
        bool ok = true;
        for (std::size_t c : customers) {
            Location loc{};
            if (!cheapest_position(inst, s, c, meter, loc)) {
                ok = false;
                break;
            }
            s.routes[loc.route].insert(
                s.routes[loc.route].begin() +
                    static_cast<std::ptrdiff_t>(loc.pos),
                c);
        }
        if (!ok) continue;
        finalize(inst, s, meter);
        return s;
    }
    return base;
}

/// Spatial ruin: removes the `size` customers nearest to a random seed
/// customer (seed included), then recreates in a shuffled order with a
/// noisy insertion (uniform among the 3 cheapest feasible positions).
/// The noise keeps the operator from undoing its own ruin on converged
/// solutions, which also makes it an effective ILS perturbation.
inline Solution move_ruin_recreate(const RoutingInstance& inst,
                                   const Solution& base, std::size_t size,
                                   Rng& rng, WorkMeter& meter) {
    Solution s = base;
    const std::size_t seed_customer = uniform_index(rng, inst.n_customers());
    std::vector<std::pair<double, std::size_t>> by_distance;
    by_distance.reserve(inst.n_customers());
    for (std::size_t c = 0; c < inst.n_customers(); ++c)
        by_distance.emplace_back(
            c == seed_customer ? -1.0 : inst.distance(seed_customer, c, meter),
            c);
    std::sort(by_distance.begin(), by_distance.end());
    std::vector<std::size_t> victims;
    for (std::size_t i = 0; i < std::min(size, by_distance.size()); ++i)
        victims.push_back(by_distance[i].second);
    for (std::size_t i = victims.size(); i > 1; --i)
        std::swap(victims[i - 1], victims[uniform_index(rng, i)]);
    remove_and_reinsert(inst, s, victims, meter, 3, &rng);
    finalize(inst, s, meter);
    return s;
}

} // namespace detail_moves

/// Applies one neighborhood to a feasible solution and returns a feasible
/// candidate. Capacity-violating draws are re-sampled up to a retry bound;
/// when every attempt fails (or the move is structurally impossible) the
/// input comes back unchanged, which the caller classifies as `nothing`.
inline Solution apply_neighborhood(const NeighborhoodDef& def,
                                   const RoutingInstance& inst,
                                   const Solution& base, Rng& rng,
                                   WorkMeter& meter) {
    using namespace detail_moves;
    switch (def.type) {
    case NeighborhoodType::cheapest_insertion:
        return move_cheapest_insertion(inst, base, def.size, rng, meter);
    case NeighborhoodType::swap:
        return move_swap(inst, base, rng, meter);
    case NeighborhoodType::relocate:
        return move_relocate(inst, base, rng, meter);
    case NeighborhoodType::intra_route_two_opt:
        return move_intra_two_opt(inst, base, rng, meter);
    case NeighborhoodType::inter_route_two_opt:
        return move_inter_two_opt(inst, base, rng, meter);
    case NeighborhoodType::remove_route:
        return move_remove_route(inst, base, rng, meter);
    case NeighborhoodType::ruin_recreate:
        return move_ruin_recreate(inst, base, def.size, rng, meter);
    }
    throw usage_error("apply_neighborhood: unknown neighborhood type");
}

} // namespace nbprof
