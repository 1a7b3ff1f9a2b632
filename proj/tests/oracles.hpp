// Independent reference implementations used only by the test suites.
// These stay deliberately naive (enumeration, Monte Carlo, direct sums)
// and share no code with the library paths they check.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "nbprof/routing.hpp"
#include "nbprof/rng.hpp"

namespace oracles {

/// Direct log-space evaluation of the binomial tail
/// Sum_{l=k..L} C(L,l) r^l (1-r)^(L-l); the terms are positive so plain
/// summation is stable.
inline double binomial_tail(std::size_t k, std::size_t L, double r) {
    if (r <= 0.0) return 0.0;
    if (r >= 1.0) return 1.0;
    const double ln_r = std::log(r);
    const double ln_1mr = std::log1p(-r);
    const double ln_fact_L = std::lgamma(static_cast<double>(L) + 1.0);
    double sum = 0.0;
    for (std::size_t l = k; l <= L; ++l) {
        const auto dl = static_cast<double>(l);
        sum += std::exp(ln_fact_L - std::lgamma(dl + 1.0) -
                        std::lgamma(static_cast<double>(L - l) + 1.0) +
                        dl * ln_r + static_cast<double>(L - l) * ln_1mr);
    }
    return std::min(sum, 1.0);
}

/// Monte-Carlo estimate of min_k P(U_(k) <= r_(k)) for sorted ranks:
/// samples L uniforms, sorts them, and counts per-position dominations.
inline double rra_monte_carlo(std::vector<double> sorted_ranks,
                              std::size_t samples, std::uint64_t seed) {
    const std::size_t L = sorted_ranks.size();
    std::vector<std::uint64_t> hits(L, 0);
    nbprof::Rng rng(seed);
    std::vector<double> u(L);
    for (std::size_t s = 0; s < samples; ++s) {
        for (double& v : u) v = nbprof::uniform01(rng);
        std::sort(u.begin(), u.end());
        for (std::size_t k = 0; k < L; ++k)
            if (u[k] <= sorted_ranks[k]) ++hits[k];
    }
    double rho = 1.0;
    for (std::size_t k = 0; k < L; ++k)
        rho = std::min(rho, static_cast<double>(hits[k]) /
                                static_cast<double>(samples));
    return rho;
}

/// Aitchison distance between two strictly positive 3-part compositions:
/// Euclidean distance of the centered log-ratio vectors.
inline double aitchison_distance(const std::array<double, 3>& a,
                                 const std::array<double, 3>& b) {
    const auto clr = [](const std::array<double, 3>& c) {
        const double g = std::cbrt(c[0] * c[1] * c[2]);
        return std::array<double, 3>{std::log(c[0] / g), std::log(c[1] / g),
                                     std::log(c[2] / g)};
    };
    const auto ca = clr(a), cb = clr(b);
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i) d2 += (ca[i] - cb[i]) * (ca[i] - cb[i]);
    return std::sqrt(d2);
}

/// Exhaustive optimum of a tiny routing instance: enumerates every
/// partition of the customers into routes and every ordering inside each
/// route. Usable up to ~6 customers.
inline double brute_force_optimum(const nbprof::RoutingInstance& inst) {
    const std::size_t n = inst.n_customers();
    std::vector<std::size_t> customers(n);
    for (std::size_t i = 0; i < n; ++i) customers[i] = i;

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> routes;

    const auto route_ok = [&](const std::vector<std::size_t>& r) {
        double load = 0.0;
        for (std::size_t c : r) load += inst.customer(c).demand;
        return load <= inst.capacity();
    };
    const auto cost_of = [&]() {
        nbprof::WorkMeter meter;
        double total = 0.0;
        for (const auto& r : routes) {
            if (r.empty()) continue;
            nbprof::Solution s;
            s.routes = {r};
            total += nbprof::solution_cost(inst, s, meter);
        }
        return total;
    };

    // Assign customer `i` to an existing route (at every position) or a
    // new route; orderings matter, so insert positions are enumerated.
    // Indices, not iterators: the recursion grows `routes`.
    const std::function<void(std::size_t)> place = [&](std::size_t i) {
        if (i == n) {
            best = std::min(best, cost_of());
            return;
        }
        const std::size_t existing = routes.size();
        for (std::size_t ri = 0; ri < existing; ++ri) {
            for (std::size_t p = 0; p <= routes[ri].size(); ++p) {
                routes[ri].insert(
                    routes[ri].begin() + static_cast<std::ptrdiff_t>(p),
                    customers[i]);
                if (route_ok(routes[ri])) place(i + 1);
                routes[ri].erase(routes[ri].begin() +
                                 static_cast<std::ptrdiff_t>(p));
            }
        }
        routes.push_back({customers[i]});
        place(i + 1);
        routes.pop_back();
    };
    place(0);
    return best;
}

/// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<std::size_t>& a,
                                  const std::vector<std::size_t>& b) {
    const std::size_t n = a.size();
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> ma, mb;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ma[a[i]] += 1.0;
        mb[b[i]] += 1.0;
    }
    const auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [k, v] : joint) sum_joint += choose2(v);
    for (const auto& [k, v] : ma) sum_a += choose2(v);
    for (const auto& [k, v] : mb) sum_b += choose2(v);
    const double total = choose2(static_cast<double>(n));
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (sum_joint - expected) / (max_index - expected);
}

/// Single sweep of the frame-grouping scan at the initial threshold
/// (r = 0.05); valid as an oracle only when that first pass already
/// produces the requested frame count.
inline std::vector<std::size_t>
frames_first_pass(const std::vector<double>& a, std::size_t n_frames) {
    const std::size_t n = a.size();
    double total = 0.0;
    for (double v : a) total += v;
    const double l = total / static_cast<double>(n_frames) * 1.05;
    std::vector<std::size_t> ends;
    std::size_t i = 1;
    while (i <= n) {
        if (a[i - 1] >= l) {
            ends.push_back(i);
            ++i;
        } else {
            double sum = a[i - 1];
            std::size_t k = i;
            while (k < n && sum + a[k] <= l) {
                sum += a[k];
                ++k;
            }
            ends.push_back(k);
            i = k + 1;
        }
    }
    return ends;
}

} // namespace oracles
