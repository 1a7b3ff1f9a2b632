#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nbprof/features.hpp"
#include "oracles.hpp"

using namespace nbprof;

TEST_CASE("ilr maps the barycenter to the origin") {
    const IlrCoords z = ilr({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    CHECK(std::fabs(z.z1) <= 1e-12);
    CHECK(std::fabs(z.z2) <= 1e-12);
}

TEST_CASE("ilr matches the direct formula evaluation") {
    const IlrCoords z = ilr({0.5, 0.25, 0.25});
    CHECK_THAT(z.z1, Catch::Matchers::WithinAbs(0.490129, 1e-6));
    CHECK_THAT(z.z2, Catch::Matchers::WithinAbs(0.282977, 1e-6));
}

TEST_CASE("zero components: replacement keeps the output finite") {
    const IlrCoords z = ilr({0.0, 0.5, 0.5}, 1e-6);
    CHECK(std::isfinite(z.z1));
    CHECK(std::isfinite(z.z2));
    CHECK(z.z1 < -5.0); // far on the x1-deficient side

    // Replacement preserves the unit sum: shrink epsilon, diverge.
    const IlrCoords z2 = ilr({0.0, 0.5, 0.5}, 1e-12);
    CHECK(z2.z1 < z.z1);

    // epsilon = 0 leaves the limit: -inf on z1.
    const IlrCoords z0 = ilr({0.0, 0.5, 0.5}, 0.0);
    CHECK(std::isinf(z0.z1));
    CHECK(z0.z1 < 0.0);
}

TEST_CASE("ilr validates input") {
    CHECK_THROWS_AS(ilr({0.5, 0.5, 0.5}), usage_error);
    CHECK_THROWS_AS(ilr({-0.1, 0.6, 0.5}), usage_error);
    CHECK_THROWS_AS(ilr({0.5, 0.25, 0.25}, 0.5), usage_error);
}

TEST_CASE("ilr is an isometry from Aitchison geometry") {
    Rng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        std::array<double, 3> a{}, b{};
        double sa = 0.0, sb = 0.0;
        for (int i = 0; i < 3; ++i) {
            a[i] = 0.01 + uniform01(rng);
            b[i] = 0.01 + uniform01(rng);
            sa += a[i];
            sb += b[i];
        }
        for (int i = 0; i < 3; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        const IlrCoords za = ilr({a[0], a[1], a[2]});
        const IlrCoords zb = ilr({b[0], b[1], b[2]});
        const double euclid = std::hypot(za.z1 - zb.z1, za.z2 - zb.z2);
        const double aitch = oracles::aitchison_distance(a, b);
        REQUIRE_THAT(euclid, Catch::Matchers::WithinAbs(aitch, 1e-9));
    }
}

TEST_CASE("ilr is zero only at the uniform composition") {
    Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 3> a{0.02 + uniform01(rng), 0.02 + uniform01(rng),
                                0.02 + uniform01(rng)};
        const double s = a[0] + a[1] + a[2];
        for (double& v : a) v /= s;
        const IlrCoords z = ilr({a[0], a[1], a[2]});
        const double norm = std::hypot(z.z1, z.z2);
        const double spread = std::max({a[0], a[1], a[2]}) -
                              std::min({a[0], a[1], a[2]});
        if (spread > 1e-6)
            REQUIRE(norm > 0.0);
        else
            REQUIRE(norm <= 1e-4);
    }
}

namespace {

InstanceAggregates synthetic_instance(const std::string& id, std::size_t m,
                                      std::size_t n_frames,
                                      std::uint64_t seed) {
    InstanceAggregates agg;
    agg.instance_id = id;
    for (std::size_t k = 0; k < m; ++k)
        agg.neighborhood_ids.push_back("nbh" + std::to_string(k));
    Rng rng(seed);
    agg.ratios.assign(m, std::vector<std::optional<FrameRatios>>(n_frames));
    agg.rho_improve.assign(n_frames, std::vector<double>(m, 1.0));
    agg.rho_worsen.assign(n_frames, std::vector<double>(m, 1.0));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t f = 0; f < n_frames; ++f) {
            double a = 0.05 + uniform01(rng);
            double b = 0.05 + uniform01(rng);
            double c = 0.05 + uniform01(rng);
            const double s = a + b + c;
            agg.ratios[k][f] =
                FrameRatios{a / s, b / s, c / s,
                            10 + uniform_index(rng, 100)};
            agg.rho_improve[f][k] = 0.01 + 0.99 * uniform01(rng);
            agg.rho_worsen[f][k] = 0.01 + 0.99 * uniform01(rng);
        }
    return agg;
}

} // namespace

TEST_CASE("assemble produces instance x frame x 4 columns") {
    std::vector<InstanceAggregates> instances;
    for (int i = 0; i < 3; ++i)
        instances.push_back(synthetic_instance("inst" + std::to_string(i), 10,
                                               5, 100 + i));
    const FeatureMatrix m = assemble(instances);
    CHECK(m.n_rows() == 10);
    CHECK(m.n_cols() == 3 * 5 * 4);
    CHECK(m.column_labels.front() == "inst0/f1/z1");
    CHECK(m.column_labels.back() == "inst2/f5/rhoW");
}

TEST_CASE("full-scale dimensions: 42 rows by 120 columns") {
    std::vector<InstanceAggregates> instances;
    for (int i = 0; i < 6; ++i)
        instances.push_back(synthetic_instance("i" + std::to_string(i), 42, 5,
                                               7 + i));
    const FeatureMatrix m = assemble(instances);
    CHECK(m.n_rows() == 42);
    CHECK(m.n_cols() == 120);
}

TEST_CASE("assemble rejects mismatched universes") {
    auto a = synthetic_instance("a", 5, 2, 1);
    auto b = synthetic_instance("b", 6, 2, 2);
    CHECK_THROWS_AS(assemble({a, b}), data_error);
}

TEST_CASE("assemble is permutation-equivariant") {
    auto base = synthetic_instance("a", 6, 3, 9);
    auto permuted = base;
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    for (std::size_t k = 0; k < 6; ++k) {
        permuted.neighborhood_ids[k] = base.neighborhood_ids[perm[k]];
        permuted.ratios[k] = base.ratios[perm[k]];
        for (std::size_t f = 0; f < 3; ++f) {
            permuted.rho_improve[f][k] = base.rho_improve[f][perm[k]];
            permuted.rho_worsen[f][k] = base.rho_worsen[f][perm[k]];
        }
    }
    const FeatureMatrix ma = assemble({base});
    const FeatureMatrix mp = assemble({permuted});
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(mp.values[k] == ma.values[perm[k]]);
}

TEST_CASE("missing ratio cells are imputed with the frame mean and masked") {
    auto inst = synthetic_instance("a", 3, 1, 42);
    inst.ratios[2][0].reset(); // neighborhood 2 idle in the only frame
    const FeatureMatrix m = assemble({inst});
    CHECK(m.imputed[2][0]);
    CHECK(m.imputed[2][1]);
    CHECK_FALSE(m.imputed[2][2]);
    CHECK_FALSE(m.imputed[0][0]);
    CHECK(std::isfinite(m.values[2][0]));

    // The imputed composition is the mean of the present ones.
    const auto& r0 = *inst.ratios[0][0];
    const auto& r1 = *inst.ratios[1][0];
    const Composition3 mean_comp{(r0.r_improve + r1.r_improve) / 2.0,
                                 (r0.r_worsen + r1.r_worsen) / 2.0,
                                 (r0.r_nothing + r1.r_nothing) / 2.0};
    const IlrCoords z = ilr(mean_comp);
    CHECK_THAT(m.values[2][0], Catch::Matchers::WithinAbs(z.z1, 1e-12));
    CHECK_THAT(m.values[2][1], Catch::Matchers::WithinAbs(z.z2, 1e-12));
}

TEST_CASE("identical neighborhoods produce identical rows") {
    auto inst = synthetic_instance("a", 4, 2, 11);
    for (std::size_t k = 1; k < 4; ++k) {
        inst.ratios[k] = inst.ratios[0];
        for (std::size_t f = 0; f < 2; ++f) {
            inst.rho_improve[f][k] = inst.rho_improve[f][0];
            inst.rho_worsen[f][k] = inst.rho_worsen[f][0];
        }
    }
    const FeatureMatrix m = assemble({inst});
    for (std::size_t k = 1; k < 4; ++k) CHECK(m.values[k] == m.values[0]);
}

TEST_CASE("standardize centers and scales columns") {
    FeatureMatrix m;
    m.row_ids = {"a", "b"};
    m.column_labels = {"c1", "c2"};
    m.values = {{1.0, 5.0}, {3.0, 5.0}};
    m.imputed = {{false, false}, {false, false}};
    const Standardization st = standardize(m);
    CHECK_THAT(m.values[0][0], Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK_THAT(m.values[1][0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(m.values[0][1] == 0.0); // constant column zeroed
    CHECK(m.values[1][1] == 0.0);
    CHECK(st.shift[1] == 5.0);
    CHECK(st.scale[1] == 1.0);
}

TEST_CASE("standardize is idempotent") {
    auto inst = synthetic_instance("a", 8, 3, 21);
    FeatureMatrix m = assemble({inst});
    standardize(m);
    FeatureMatrix again = m;
    standardize(again);
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (std::size_t c = 0; c < m.n_cols(); ++c)
            CHECK_THAT(again.values[r][c],
                       Catch::Matchers::WithinAbs(m.values[r][c], 1e-12));
}

TEST_CASE("standardize needs two rows") {
    FeatureMatrix m;
    m.row_ids = {"a"};
    m.column_labels = {"c"};
    m.values = {{1.0}};
    m.imputed = {{false}};
    CHECK_THROWS_AS(standardize(m), usage_error);
}
