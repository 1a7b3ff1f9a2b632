#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nbprof/rng.hpp"
#include "nbprof/runlog.hpp"

using namespace nbprof;

TEST_CASE("grid boundaries follow the geometric closed form") {
    const IntervalGrid g = build_grid({100.0, 0.0}, 2, 0.5);
    // w1 = 100 * 0.5 / (1 - 0.25) = 66.666..., boundaries 100, 33.33.., 0.
    CHECK(g.boundary(0) == 100.0);
    CHECK_THAT(g.boundary(1), Catch::Matchers::WithinAbs(100.0 / 3.0, 1e-12));
    CHECK_THAT(g.boundary(2), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(g.width(1), Catch::Matchers::WithinAbs(200.0 / 3.0, 1e-12));
    CHECK_THAT(g.width(2), Catch::Matchers::WithinAbs(100.0 / 3.0, 1e-12));
}

TEST_CASE("decay 1 gives a uniform partition") {
    const IntervalGrid g = build_grid({100.0, 0.0}, 4, 1.0);
    CHECK(g.boundary(0) == 100.0);
    CHECK_THAT(g.boundary(1), Catch::Matchers::WithinAbs(75.0, 1e-12));
    CHECK_THAT(g.boundary(2), Catch::Matchers::WithinAbs(50.0, 1e-12));
    CHECK_THAT(g.boundary(3), Catch::Matchers::WithinAbs(25.0, 1e-12));
    CHECK_THAT(g.boundary(4), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("production-scale grid: ratios, coverage, end alignment") {
    const IntervalGrid g = build_grid({100.0, 0.0}, 1000, 0.99);
    REQUIRE(g.n_intervals() == 1000);
    for (std::size_t i = 1; i < 1000; ++i) {
        const double ratio = g.width(i + 1) / g.width(i);
        REQUIRE(std::fabs(ratio - 0.99) <= 1e-9 * 0.99);
    }
    double total = 0.0;
    for (std::size_t i = 1; i <= 1000; ++i) total += g.width(i);
    CHECK(std::fabs(total - 100.0) <= 1e-9 * 100.0);
    CHECK(std::fabs(g.boundary(1000) - 0.0) <= 1e-9 * 100.0);
    // Intervals must be finer near the lower bound.
    CHECK(g.width(1000) < g.width(1));
}

TEST_CASE("grid construction rejects bad parameters") {
    CHECK_THROWS_AS(build_grid({0.0, 100.0}, 10, 0.9), usage_error);
    CHECK_THROWS_AS(build_grid({100.0, 100.0}, 10, 0.9), usage_error);
    CHECK_THROWS_AS(build_grid({100.0, 0.0}, 10, 0.0), usage_error);
    CHECK_THROWS_AS(build_grid({100.0, 0.0}, 10, 1.5), usage_error);
    CHECK_THROWS_AS(build_grid({100.0, 0.0}, 0, 0.9), usage_error);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(build_grid({inf, 0.0}, 10, 0.9), usage_error);
}

TEST_CASE("interval_of examples and clamping") {
    const IntervalGrid g = build_grid({100.0, 0.0}, 2, 0.5);
    CHECK(g.interval_of(50.0) == 1);
    CHECK(g.interval_of(20.0) == 2);
    CHECK(g.interval_of(100.0) == 1);  // upper bound clamps to 1
    CHECK(g.interval_of(150.0) == 1);  // beyond upper bound
    CHECK(g.interval_of(0.0) == 2);    // lower bound clamps to n
    CHECK(g.interval_of(-5.0) == 2);
    CHECK_THROWS_AS(g.interval_of(std::nan("")), usage_error);
}

TEST_CASE("interval_of: closed form agrees with binary search") {
    Rng rng(20240811);
    for (int trial = 0; trial < 40; ++trial) {
        const double lb = uniform_real(rng, -50.0, 50.0);
        const double ub = lb + uniform_real(rng, 1.0, 1000.0);
        const std::size_t n = 1 + uniform_index(rng, 400);
        // q below ~0.97 at n=400 would shrink widths past double precision.
        const double q = 0.97 + 0.03 * uniform01(rng);
        const IntervalGrid g = build_grid({ub, lb}, n, q);
        for (int probe = 0; probe < 200; ++probe) {
            const double cost = uniform_real(rng, lb - 1.0, ub + 1.0);
            REQUIRE(g.interval_of(cost) == g.interval_of_closed_form(cost));
        }
        // Boundary costs are the awkward spots: probe them directly.
        for (std::size_t i = 0; i <= n; ++i) {
            const double b = g.boundary(i);
            REQUIRE(g.interval_of(b) == g.interval_of_closed_form(b));
        }
    }
}

TEST_CASE("interval_of is monotone nonincreasing in cost") {
    const IntervalGrid g = build_grid({250.0, 10.0}, 300, 0.97);
    Rng rng(99);
    double prev_cost = 250.0;
    std::size_t prev_idx = g.interval_of(prev_cost);
    for (int i = 0; i < 500; ++i) {
        const double cost = uniform_real(rng, 5.0, 255.0);
        const std::size_t idx = g.interval_of(cost);
        if (cost <= prev_cost)
            CHECK(idx >= prev_idx);
        else
            CHECK(idx <= prev_idx);
        prev_cost = cost;
        prev_idx = idx;
    }
}

namespace {

RunLog make_log(std::uint64_t run_count = 1) {
    RunLog log("demo", build_grid({100.0, 0.0}, 3, 0.9), {"swap", "relocate"});
    log.set_run_count(run_count);
    return log;
}

} // namespace

TEST_CASE("cell stats invariants") {
    CellStats c;
    c.n_iters = 3;
    c.n_improve = 1;
    c.n_nothing = 1;
    c.n_worsen = 1;
    c.sum_improve = 2.5;
    c.sum_worsen = 0.5;
    CHECK_NOTHROW(c.validate());
    c.n_iters = 2;
    CHECK_THROWS_AS(c.validate(), data_error);
}

TEST_CASE("runlog round-trips exactly through the text format") {
    RunLog log = make_log(4);
    CellStats& a = log.cell(0, 1);
    a.n_iters = 7;
    a.n_improve = 3;
    a.n_nothing = 2;
    a.n_worsen = 2;
    a.sum_improve = 0.1 + 0.2; // deliberately non-representable sum
    a.sum_worsen = 1e-17;
    a.sum_time_ns = 123456789;
    CellStats& b = log.cell(1, 3);
    b.n_iters = 1;
    b.n_nothing = 1;

    std::stringstream ss;
    write_log(log, ss, {"round trip check"});
    const RunLog back = read_log(ss);
    CHECK(back == log);
    CHECK(back.cell(0, 1).sum_improve == log.cell(0, 1).sum_improve);
    CHECK(back.run_count() == 4);
    // Cells never touched must come back as exact zeros.
    CHECK(back.cell(0, 2).empty());
    CHECK(back.cell(1, 1).empty());
}

TEST_CASE("runlog read rejects invariant violations") {
    std::stringstream ss;
    ss << "instance demo\nupper_bound 100\nlower_bound 0\n"
          "n_intervals 3\ndecay 0.90000000000000002\nrun_count 1\n"
          "neighborhoods swap,relocate\n"
          "swap,1,2,3,0,0,1.5,0,10\n";
    CHECK_THROWS_WITH(read_log(ss),
                      Catch::Matchers::ContainsSubstring("n_iters"));
}

TEST_CASE("runlog read rejects malformed input") {
    SECTION("missing header") {
        std::stringstream ss;
        ss << "instance demo\nupper_bound 100\n";
        CHECK_THROWS_AS(read_log(ss), data_error);
    }
    SECTION("unknown neighborhood in a row") {
        std::stringstream ss;
        ss << "instance demo\nupper_bound 100\nlower_bound 0\n"
              "n_intervals 3\ndecay 0.9\nrun_count 1\n"
              "neighborhoods swap\n"
              "ghost,1,1,1,0,0,0.5,0,10\n";
        CHECK_THROWS_AS(read_log(ss), data_error);
    }
    SECTION("interval out of range") {
        std::stringstream ss;
        ss << "instance demo\nupper_bound 100\nlower_bound 0\n"
              "n_intervals 3\ndecay 0.9\nrun_count 1\n"
              "neighborhoods swap\n"
              "swap,4,1,1,0,0,0.5,0,10\n";
        CHECK_THROWS_AS(read_log(ss), data_error);
    }
    SECTION("comments and blank lines are fine") {
        std::stringstream ss;
        ss << "# header comment\n\ninstance demo\nupper_bound 100\n"
              "lower_bound 0\nn_intervals 3\ndecay 0.9\nrun_count 0\n"
              "neighborhoods swap\n# trailing comment\n";
        CHECK_NOTHROW(read_log(ss));
    }
}

TEST_CASE("merge sums field-wise and respects identity") {
    RunLog a = make_log(1);
    a.cell(0, 1).n_iters = 3;
    a.cell(0, 1).n_improve = 3;
    a.cell(0, 1).sum_improve = 1.5;
    RunLog b = make_log(2);
    b.cell(0, 1).n_iters = 4;
    b.cell(0, 1).n_worsen = 4;
    b.cell(0, 1).sum_worsen = 2.0;

    RunLog empty = make_log(0);

    const RunLog id = merge_logs({a, empty});
    CHECK(id == a);

    const RunLog ab = merge_logs({a, b});
    const RunLog ba = merge_logs({b, a});
    CHECK(ab == ba);
    CHECK(ab.cell(0, 1).n_iters == 7);
    CHECK(ab.run_count() == 3);
}

TEST_CASE("merge is permutation invariant") {
    std::vector<RunLog> logs;
    Rng rng(5);
    for (int i = 0; i < 5; ++i) {
        RunLog l = make_log(1);
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 1; j <= 3; ++j) {
                CellStats& c = l.cell(k, j);
                c.n_improve = uniform_index(rng, 5);
                c.n_worsen = uniform_index(rng, 5);
                c.n_nothing = uniform_index(rng, 5);
                c.n_iters = c.n_improve + c.n_worsen + c.n_nothing;
                c.sum_improve = c.n_improve ? uniform01(rng) : 0.0;
                c.sum_worsen = c.n_worsen ? uniform01(rng) : 0.0;
                c.sum_time_ns = uniform_index(rng, 1000);
            }
        logs.push_back(std::move(l));
    }
    const RunLog forward = merge_logs(logs);
    std::reverse(logs.begin(), logs.end());
    const RunLog backward = merge_logs(logs);
    std::swap(logs[0], logs[2]);
    const RunLog shuffled = merge_logs(logs);
    CHECK(forward == backward);
    CHECK(forward == shuffled);
}

TEST_CASE("merge rejects mismatched metadata") {
    RunLog a = make_log(1);
    RunLog other_instance("other", a.grid(), a.neighborhood_ids());
    CHECK_THROWS_AS(merge_logs({a, other_instance}), data_error);
    RunLog other_roster("demo", a.grid(), {"swap", "ghost"});
    CHECK_THROWS_AS(merge_logs({a, other_roster}), data_error);
    RunLog other_grid("demo", build_grid({100.0, 0.0}, 4, 0.9),
                      a.neighborhood_ids());
    CHECK_THROWS_AS(merge_logs({a, other_grid}), data_error);
}
