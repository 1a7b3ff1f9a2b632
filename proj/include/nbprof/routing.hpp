#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/rng.hpp"
#include "nbprof/textio.hpp"

namespace nbprof {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double euclidean(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Deterministic stand-in for a wall clock: operators charge one unit per
/// distance evaluation, and the unit count is reported as nanoseconds.
/// Keeps collected logs bit-reproducible across reruns of the same seed.
struct WorkMeter {
    std::uint64_t units = 0;
    static constexpr std::uint64_t ns_per_unit = 10;

    std::uint64_t elapsed_ns() const { return units * ns_per_unit; }
};

/// Small capacitated routing instance: one depot, Euclidean costs,
/// per-customer demand, a single vehicle capacity shared by all routes.
class RoutingInstance {
public:
    struct Customer {
        int id = 0;
        Point pos;
        double demand = 0.0;
    };

    RoutingInstance() = default;
    RoutingInstance(std::string instance_id, double capacity, Point depot,
                    std::vector<Customer> customers)
        : instance_id_(std::move(instance_id)), capacity_(capacity),
          depot_(depot), customers_(std::move(customers)) {
        if (!(capacity_ > 0.0))
            throw data_error("RoutingInstance: capacity must be positive");
        if (customers_.size() < 2)
            throw data_error("RoutingInstance: need at least two customers");
        for (const auto& c : customers_) {
            if (!(c.demand > 0.0))
                throw data_error("RoutingInstance: demands must be positive");
            if (c.demand > capacity_)
                throw data_error("RoutingInstance: demand exceeds capacity");
        }
    }

    const std::string& instance_id() const { return instance_id_; }
    double capacity() const { return capacity_; }
    const Point& depot() const { return depot_; }
    std::size_t n_customers() const { return customers_.size(); }
    const Customer& customer(std::size_t i) const { return customers_.at(i); }
    const std::vector<Customer>& customers() const { return customers_; }

    double distance(std::size_t a, std::size_t b, WorkMeter& meter) const {
        ++meter.units;
        return euclidean(customers_[a].pos, customers_[b].pos);
    }
    double depot_distance(std::size_t a, WorkMeter& meter) const {
        ++meter.units;
        return euclidean(depot_, customers_[a].pos);
    }

private:
    std::string instance_id_;
    double capacity_ = 0.0;
    Point depot_;
    std::vector<Customer> customers_;
};

/// Set of routes over customer indices; each route runs depot -> ... ->
/// depot. Total cost is cached when the solution is built.
struct Solution {
    std::vector<std::vector<std::size_t>> routes;
    double cost = 0.0;

    std::size_t n_routes() const { return routes.size(); }
};

inline double route_cost(const RoutingInstance& inst,
                         const std::vector<std::size_t>& route,
                         WorkMeter& meter) {
    if (route.empty()) return 0.0;
    double c = inst.depot_distance(route.front(), meter);
    for (std::size_t i = 0; i + 1 < route.size(); ++i)
        c += inst.distance(route[i], route[i + 1], meter);
    c += inst.depot_distance(route.back(), meter);
    return c;
}

inline double route_load(const RoutingInstance& inst,
                         const std::vector<std::size_t>& route) {
    double load = 0.0;
    for (std::size_t c : route) load += inst.customer(c).demand;
    return load;
}

inline double solution_cost(const RoutingInstance& inst, const Solution& s,
                            WorkMeter& meter) {
    double c = 0.0;
    for (const auto& r : s.routes) c += route_cost(inst, r, meter);
    return c;
}

/// Full feasibility and cost-cache check; throws on violation.
inline void validate_solution(const RoutingInstance& inst, const Solution& s,
                              double cost_rel_tol = 1e-6) {
    std::vector<int> seen(inst.n_customers(), 0);
    for (const auto& r : s.routes) {
        if (r.empty())
            throw internal_error("Solution: empty route present");
        for (std::size_t c : r) {
            if (c >= inst.n_customers())
                throw internal_error("Solution: customer index out of range");
            ++seen[c];
        }
        if (route_load(inst, r) > inst.capacity() + 1e-9)
            throw internal_error("Solution: route exceeds capacity");
    }
    for (std::size_t i = 0; i < inst.n_customers(); ++i)
        if (seen[i] != 1)
            throw internal_error("Solution: customer " + std::to_string(i) +
                                 " appears " + std::to_string(seen[i]) +
                                 " times");
    WorkMeter meter;
    const double actual = solution_cost(inst, s, meter);
    if (std::fabs(actual - s.cost) > cost_rel_tol * std::max(1.0, actual))
        throw internal_error("Solution: cached cost out of sync");
}

/// One round trip per customer; its cost doubles as the quality upper
/// bound for the instance.
inline Solution initial_solution(const RoutingInstance& inst) {
    Solution s;
    s.routes.reserve(inst.n_customers());
    WorkMeter meter;
    for (std::size_t i = 0; i < inst.n_customers(); ++i)
        s.routes.push_back({i});
    s.cost = solution_cost(inst, s, meter);
    return s;
}

/// Uniform random instance in the unit square, depot at the center,
/// integer demands in [1, capacity/3].
inline RoutingInstance generate_instance(const std::string& instance_id,
                                         std::size_t n_customers,
                                         double capacity, std::uint64_t seed) {
    if (n_customers < 2)
        throw usage_error("generate_instance: need at least two customers");
    if (!(capacity >= 3.0))
        throw usage_error("generate_instance: capacity must be >= 3");
    Rng rng(derive_seed(seed, "instance:" + instance_id));
    std::vector<RoutingInstance::Customer> customers(n_customers);
    const auto max_demand = static_cast<long long>(capacity / 3.0);
    for (std::size_t i = 0; i < n_customers; ++i) {
        customers[i].id = static_cast<int>(i) + 1;
        customers[i].pos = Point{uniform01(rng), uniform01(rng)};
        customers[i].demand =
            static_cast<double>(uniform_int(rng, 1, max_demand));
    }
    return RoutingInstance(instance_id, capacity, Point{0.5, 0.5},
                           std::move(customers));
}

/// Instance file: first data line is the capacity, then one `id x y demand`
/// row per location. The depot is the id-0 row with zero demand.
inline void write_instance(const RoutingInstance& inst, std::ostream& os,
                           const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << format_cost(inst.capacity()) << '\n';
    os << "0 " << format_cost(inst.depot().x) << ' '
       << format_cost(inst.depot().y) << " 0\n";
    for (const auto& c : inst.customers())
        os << c.id << ' ' << format_cost(c.pos.x) << ' ' << format_cost(c.pos.y)
           << ' ' << format_cost(c.demand) << '\n';
}

inline void write_instance(const RoutingInstance& inst, const std::string& path,
                           const std::vector<std::string>& comments = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("write_instance: cannot open '" + path + "'");
    write_instance(inst, os, comments);
}

inline RoutingInstance read_instance(std::istream& is,
                                     const std::string& instance_id,
                                     const std::string& origin = "<stream>") {
    std::string line;
    double capacity = 0.0;
    bool have_capacity = false;
    bool have_depot = false;
    Point depot;
    std::vector<RoutingInstance::Customer> customers;
    while (std::getline(is, line)) {
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (!have_capacity) {
            capacity = parse_double(t, "capacity");
            have_capacity = true;
            continue;
        }
        std::istringstream row{std::string(t)};
        std::string id_s, x_s, y_s, d_s, extra;
        if (!(row >> id_s >> x_s >> y_s >> d_s) || (row >> extra))
            throw data_error("read_instance: malformed row in " + origin +
                             ": '" + std::string(t) + "'");
        const auto id = static_cast<int>(parse_int(id_s, "customer id"));
        const double x = parse_double(x_s, "x");
        const double y = parse_double(y_s, "y");
        const double demand = parse_double(d_s, "demand");
        if (id == 0) {
            if (have_depot)
                throw data_error("read_instance: duplicate depot row in " +
                                 origin);
            if (demand != 0.0)
                throw data_error("read_instance: depot row must carry zero "
                                 "demand in " +
                                 origin);
            depot = Point{x, y};
            have_depot = true;
        } else {
            customers.push_back({id, Point{x, y}, demand});
        }
    }
    if (!have_capacity)
        throw data_error("read_instance: missing capacity line in " + origin);
    if (!have_depot)
        throw data_error("read_instance: missing depot (id 0) row in " + origin);
    return RoutingInstance(instance_id, capacity, depot, std::move(customers));
}

inline RoutingInstance read_instance(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("read_instance: cannot open '" + path + "'");
    const std::string stem = std::filesystem::path(path).stem().string();
    return read_instance(is, stem, path);
}

/// Cached reference lower bound, stored next to the instance file.
inline std::string lower_bound_path(const std::string& instance_path) {
    return instance_path + ".lb";
}

inline double read_lower_bound(const std::string& instance_path) {
    const std::string path = lower_bound_path(instance_path);
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw data_error("read_lower_bound: cannot open '" + path +
                         "' (generate it with nbprof-datagen)");
    std::string line;
    while (std::getline(is, line)) {
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        return parse_double(t, "lower bound");
    }
    throw data_error("read_lower_bound: no value in '" + path + "'");
}

inline void write_lower_bound(const std::string& instance_path, double value,
                              const std::vector<std::string>& comments = {}) {
    const std::string path = lower_bound_path(instance_path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("write_lower_bound: cannot open '" + path + "'");
    for (const auto& c : comments) os << "# " << c << '\n';
    os << format_cost(value) << '\n';
}

} // namespace nbprof
