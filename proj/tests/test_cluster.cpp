#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "nbprof/cluster.hpp"
#include "oracles.hpp"

using namespace nbprof;

namespace {

/// Planted subspace-Gaussian mixture: K clusters, per_cluster points in
/// dimension p; cluster centers `separation` apart along distinct axes,
/// signal variance on d_signal random-ish directions, small noise
/// elsewhere.
struct Planted {
    Eigen::MatrixXd x;
    std::vector<std::size_t> labels;
};

Planted planted_clusters(std::size_t k, std::size_t per_cluster,
                         std::size_t p, double separation,
                         std::uint64_t seed, std::size_t d_signal = 2,
                         double signal_sd = 1.0, double noise_sd = 0.1) {
    Rng rng(seed);
    const std::size_t n = k * per_cluster;
    Planted out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    out.labels.resize(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
            out.labels[row] = c;
            for (std::size_t j = 0; j < p; ++j) {
                // Cluster centers sit off the signal subspace so the
                // within-cluster structure stays the same in every cluster.
                const double center =
                    (j == (c + d_signal) % p) ? separation : 0.0;
                const double sd = (j < d_signal) ? signal_sd : noise_sd;
                out.x(static_cast<Eigen::Index>(row),
                      static_cast<Eigen::Index>(j)) =
                    center + sd * normal01(rng);
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("K=1 fits a single subspace Gaussian at the data mean") {
    const Planted data = planted_clusters(1, 25, 8, 0.0, 42);
    const ClusterModel model = fit(data.x, 1, 1);
    REQUIRE(model.n_clusters() == 1);
    const Eigen::VectorXd mean = data.x.colwise().mean().transpose();
    CHECK((model.components[0].mean - mean).norm() <= 1e-9);
    CHECK(model.components[0].weight == 1.0);
    CHECK(std::isfinite(model.log_likelihood));
    for (std::size_t i = 0; i < model.assignments.size(); ++i)
        CHECK(model.assignments[i] == 0);
}

TEST_CASE("two well-separated clouds are recovered exactly") {
    const Planted data = planted_clusters(2, 20, 10, 10.0, 7, 2, 1.0, 0.5);
    const ClusterModel model = fit(data.x, 2, 3);
    CHECK(oracles::adjusted_rand_index(model.assignments, data.labels) == 1.0);
}

TEST_CASE("EM invariants hold on every fit") {
    const Planted data = planted_clusters(3, 12, 15, 8.0, 11);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const ClusterModel model = fit(data.x, 3, seed);
        // Monotone likelihood trace.
        for (std::size_t i = 1; i < model.loglik_trace.size(); ++i)
            REQUIRE(model.loglik_trace[i] >=
                    model.loglik_trace[i - 1] - 1e-9);
        // Responsibilities are distributions.
        for (Eigen::Index r = 0; r < model.responsibilities.rows(); ++r)
            REQUIRE_THAT(model.responsibilities.row(r).sum(),
                         Catch::Matchers::WithinAbs(1.0, 1e-9));
        // Orthonormal bases.
        for (const auto& comp : model.components) {
            const Eigen::MatrixXd gram =
                comp.basis.transpose() * comp.basis;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(
                comp.intrinsic_dim, comp.intrinsic_dim);
            REQUIRE((gram - eye).cwiseAbs().maxCoeff() <= 1e-9);
            REQUIRE(comp.signal_variance >= comp.noise_variance);
            REQUIRE(comp.noise_variance > 0.0);
            REQUIRE(comp.intrinsic_dim <
                    static_cast<Eigen::Index>(model.dim));
        }
        // Mixing weights sum to one.
        double total = 0.0;
        for (const auto& comp : model.components) total += comp.weight;
        REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("duplicating every row leaves the partition intact") {
    const Planted data = planted_clusters(2, 15, 8, 12.0, 5, 2, 1.0, 0.3);
    Eigen::MatrixXd doubled(data.x.rows() * 2, data.x.cols());
    doubled << data.x, data.x;
    std::vector<std::size_t> doubled_labels = data.labels;
    doubled_labels.insert(doubled_labels.end(), data.labels.begin(),
                          data.labels.end());
    const ClusterModel model = fit(doubled, 2, 9);
    CHECK(oracles::adjusted_rand_index(model.assignments, doubled_labels) ==
          1.0);
}

TEST_CASE("bic penalizes parameters at equal likelihood") {
    ClusterModel small;
    small.n_rows = 30;
    small.dim = 10;
    small.components.resize(2);
    for (auto& c : small.components) c.intrinsic_dim = 2;
    small.log_likelihood = -100.0;
    small.free_parameters = count_free_parameters(small);

    ClusterModel big = small;
    big.components.resize(4);
    for (auto& c : big.components) c.intrinsic_dim = 2;
    big.free_parameters = count_free_parameters(big);

    REQUIRE(big.free_parameters > small.free_parameters);
    CHECK(bic(big) < bic(small));
}

TEST_CASE("bic is invariant under row permutation") {
    const Planted data = planted_clusters(2, 14, 9, 11.0, 3, 2, 1.0, 0.3);
    Eigen::MatrixXd permuted = data.x;
    // Reverse the rows.
    for (Eigen::Index i = 0; i < data.x.rows(); ++i)
        permuted.row(i) = data.x.row(data.x.rows() - 1 - i);
    const ClusterModel a = fit(data.x, 2, 17);
    const ClusterModel b = fit(permuted, 2, 17);
    CHECK_THAT(a.bic, Catch::Matchers::WithinRel(b.bic, 1e-6));
}

TEST_CASE("select recovers the planted cluster count") {
    const Planted data = planted_clusters(3, 13, 20, 10.0, 23);
    std::vector<SelectionEntry> trace;
    const ClusterModel model =
        select(data.x, 1, 6, {1, 2}, FitOptions{}, &trace);
    CHECK(model.n_clusters() == 3);
    CHECK(oracles::adjusted_rand_index(model.assignments, data.labels) == 1.0);
    CHECK(trace.size() == 6 * 2);
    // BIC(K=3) beats BIC(K=1) on plainly clustered data.
    double bic1 = -1e300, bic3 = -1e300;
    for (const auto& e : trace) {
        if (!e.ok) continue;
        if (e.k == 1) bic1 = std::max(bic1, e.bic);
        if (e.k == 3) bic3 = std::max(bic3, e.bic);
    }
    CHECK(bic3 > bic1);
}

TEST_CASE("identical rows collapse to one cluster") {
    Eigen::MatrixXd x(12, 6);
    for (Eigen::Index i = 0; i < 12; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            x(i, j) = static_cast<double>(j) * 0.5;
    // Tiny jitter so the problem is not perfectly singular.
    Rng rng(3);
    for (Eigen::Index i = 0; i < 12; ++i) x(i, 0) += 1e-9 * normal01(rng);
    std::vector<SelectionEntry> trace;
    const ClusterModel model =
        select(x, 1, 4, {1, 2, 3}, FitOptions{}, &trace);
    CHECK(model.n_clusters() == 1);
}

TEST_CASE("relabeled models keep the same bic and partition") {
    const Planted data = planted_clusters(2, 12, 7, 9.0, 13, 2, 1.0, 0.3);
    const ClusterModel model = fit(data.x, 2, 21);
    ClusterModel relabeled = model;
    std::swap(relabeled.components[0], relabeled.components[1]);
    for (auto& a : relabeled.assignments) a = 1 - a;
    relabeled.free_parameters = count_free_parameters(relabeled);
    CHECK(bic(relabeled) == bic(model));
    CHECK(oracles::adjusted_rand_index(relabeled.assignments,
                                       model.assignments) == 1.0);
}

TEST_CASE("rows << dims: a 10x60 matrix fits without numerical failure") {
    Rng rng(31);
    Eigen::MatrixXd x(10, 60);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            x(i, j) = normal01(rng) + ((i < 5) ? 2.0 : -2.0) * (j % 3 == 0);
    std::vector<SelectionEntry> trace;
    const ClusterModel model =
        select(x, 2, 9, {1, 2}, FitOptions{}, &trace);
    CHECK(model.n_clusters() >= 2);
    CHECK(std::isfinite(model.bic));
    for (std::size_t a : model.assignments) CHECK(a < model.n_clusters());
    bool any_ok = false;
    for (const auto& e : trace) any_ok = any_ok || e.ok;
    CHECK(any_ok);
}

TEST_CASE("fit rejects impossible requests") {
    Eigen::MatrixXd x(3, 4);
    x.setZero();
    CHECK_THROWS_AS(fit(x, 5, 1), usage_error);
    CHECK_THROWS_AS(fit(x, 0, 1), usage_error);
    std::vector<SelectionEntry> trace;
    CHECK_THROWS_AS(select(x, 2, 1, {1}), usage_error);
    CHECK_THROWS_AS(select(x, 1, 2, {}), usage_error);
    Eigen::MatrixXd bad(3, 4);
    bad.setConstant(std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(fit(bad, 1, 1), data_error);
}
