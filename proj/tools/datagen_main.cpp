// Regenerates the bundled demo instances and their cached reference lower
// bounds. The bounds come from long uniform-weight reference runs, so
// regeneration takes a couple of seconds per instance.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "nbprof/routing.hpp"
#include "nbprof/search.hpp"

namespace {

struct Spec {
    std::string id;
    std::size_t customers;
    double capacity;
};

double reference_lower_bound(const nbprof::RoutingInstance& inst,
                             std::uint64_t seed) {
    const auto roster = nbprof::default_roster();
    double best = nbprof::initial_solution(inst).cost;
    const nbprof::IntervalGrid grid(
        nbprof::QualityBounds{best + 1.0, best * 1e-3}, 100, 0.99);
    for (std::uint64_t s = 0; s < 3; ++s) {
        nbprof::SearchConfig sc;
        sc.weights.assign(roster.size(), 1.0 / roster.size());
        sc.la_list = 2000;
        sc.it_wi = 30000;
        sc.budget = nbprof::SearchBudget{3000000, 0.0};
        sc.seed = nbprof::derive_seed(seed, "reference:" + inst.instance_id(), s);
        const auto res = nbprof::lahc_run(inst, roster, sc, grid);
        best = std::min(best, res.best_cost);
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regenerate the bundled nbprof demo data"};
    std::string dir = "data/instances";
    std::uint64_t seed = 7;
    app.add_option("--dir", dir, "target directory");
    app.add_option("--seed", seed, "generation seed");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Spec> specs{
        {"demo_a", 36, 40.0}, {"demo_b", 44, 30.0}, {"demo_c", 52, 60.0}};

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "cannot create %s: %s\n", dir.c_str(),
                     ec.message().c_str());
        return 2;
    }

    try {
        for (const Spec& s : specs) {
            const auto inst = nbprof::generate_instance(s.id, s.customers,
                                                        s.capacity, seed);
            const std::string path = dir + "/" + s.id + ".txt";
            nbprof::write_instance(
                inst, path,
                {"nbprof demo instance " + s.id, "generation seed " +
                                                     std::to_string(seed)});
            const double lb = reference_lower_bound(inst, seed);
            nbprof::write_lower_bound(
                path, lb,
                {"reference lower bound for " + s.id,
                 "best of 3 uniform-weight runs, 1.5M iterations each"});
            std::printf("%s: %zu customers, capacity %g, lower bound %.6f\n",
                        path.c_str(), s.customers, s.capacity, lb);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "datagen failed: %s\n", e.what());
        return 2;
    }
    return 0;
}
