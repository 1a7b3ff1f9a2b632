#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/rng.hpp"

namespace nbprof {

/// One mixture component: Gaussian whose covariance has variance
/// signal_variance on the span of `basis` (p x d, orthonormal columns)
/// and noise_variance on the orthogonal complement. Densities never touch
/// a full p x p inverse, which keeps the model usable when rows << dims.
struct ClusterComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd basis;
    Eigen::Index intrinsic_dim = 1;
    double signal_variance = 1.0;
    double noise_variance = 1.0;
};

struct ClusterModel {
    std::size_t n_rows = 0;
    std::size_t dim = 0;
    std::vector<ClusterComponent> components;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    double bic = -std::numeric_limits<double>::infinity();
    std::size_t free_parameters = 0;
    std::size_t em_iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> loglik_trace; ///< one entry per EM iteration
    Eigen::MatrixXd responsibilities;    ///< n x K, rows sum to 1
    std::vector<std::size_t> assignments; ///< hard, by max posterior, 0-based
    std::vector<double> max_posterior;

    std::size_t n_clusters() const { return components.size(); }
};

struct FitOptions {
    double scree_threshold = 0.2; ///< eigenvalue-drop fraction for d_k
    std::size_t n_init = 10;      ///< k-means restarts
    std::size_t max_iter = 200;
    double rel_tol = 1e-7;
    std::size_t degenerate_retries = 5;
    /// Noise variances are floored at this fraction of the data's mean
    /// per-dimension variance. Rank-deficient clusters (rows << dims)
    /// otherwise drive b_k to zero and the likelihood to a singularity.
    double noise_floor_fraction = 0.02;
};

namespace detail_cluster {

inline double component_log_density(const ClusterComponent& c,
                                    const Eigen::VectorXd& x) {
    const auto p = static_cast<double>(x.size());
    const auto d = static_cast<double>(c.intrinsic_dim);
    const Eigen::VectorXd v = x - c.mean;
    const double total = v.squaredNorm();
    const double signal = (c.basis.transpose() * v).squaredNorm();
    const double residual = std::max(total - signal, 0.0);
    constexpr double ln_2pi = 1.8378770664093454836;
    return -0.5 * (p * ln_2pi + d * std::log(c.signal_variance) +
                   (p - d) * std::log(c.noise_variance) +
                   signal / c.signal_variance + residual / c.noise_variance);
}

/// k-means++ seeding followed by Lloyd iterations; returns labels of the
/// best of n_init runs by within-cluster squared error.
inline std::vector<std::size_t> kmeans_labels(const Eigen::MatrixXd& x,
                                              std::size_t k, Rng& rng,
                                              std::size_t n_init) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> best_labels(n, 0);
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t init = 0; init < std::max<std::size_t>(n_init, 1); ++init) {
        Eigen::MatrixXd centers(k, x.cols());
        std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
        centers.row(0) = x.row(static_cast<Eigen::Index>(uniform_index(rng, n)));
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d2 =
                    (x.row(static_cast<Eigen::Index>(i)) -
                     centers.row(static_cast<Eigen::Index>(c - 1)))
                        .squaredNorm();
                dist2[i] = std::min(dist2[i], d2);
                total += dist2[i];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                const double u = uniform01(rng) * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += dist2[i];
                    if (u < acc || i + 1 == n) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = uniform_index(rng, n);
            }
            centers.row(static_cast<Eigen::Index>(c)) =
                x.row(static_cast<Eigen::Index>(pick));
        }

        std::vector<std::size_t> labels(n, 0);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t arg = 0;
                for (std::size_t c = 0; c < k; ++c) {
                    const double d2 =
                        (x.row(static_cast<Eigen::Index>(i)) -
                         centers.row(static_cast<Eigen::Index>(c)))
                            .squaredNorm();
                    if (d2 < best) {
                        best = d2;
                        arg = c;
                    }
                }
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            // Refill empty clusters with the point farthest from its center.
            for (std::size_t c = 0; c < k; ++c) {
                if (std::count(labels.begin(), labels.end(), c) > 0) continue;
                double worst = -1.0;
                std::size_t arg = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d2 =
                        (x.row(static_cast<Eigen::Index>(i)) -
                         centers.row(static_cast<Eigen::Index>(labels[i])))
                            .squaredNorm();
                    if (d2 > worst &&
                        std::count(labels.begin(), labels.end(), labels[i]) > 1) {
                        worst = d2;
                        arg = i;
                    }
                }
                labels[arg] = c;
                changed = true;
            }
            centers.setZero();
            std::vector<double> counts(k, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                centers.row(static_cast<Eigen::Index>(labels[i])) +=
                    x.row(static_cast<Eigen::Index>(i));
                counts[labels[i]] += 1.0;
            }
            for (std::size_t c = 0; c < k; ++c)
                if (counts[c] > 0.0)
                    centers.row(static_cast<Eigen::Index>(c)) /= counts[c];
            if (!changed) break;
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sse += (x.row(static_cast<Eigen::Index>(i)) -
                    centers.row(static_cast<Eigen::Index>(labels[i])))
                       .squaredNorm();
        if (sse < best_sse) {
            best_sse = sse;
            best_labels = labels;
        }
    }
    return best_labels;
}

/// Scree pick: the last eigenvalue drop that is at least `threshold` of
/// the largest drop. Only drops inside the positive part of the spectrum
/// count; the edge where the sample spectrum hits its rank limit is not a
/// real drop, and at least one positive eigenvalue is left to the noise
/// term.
inline Eigen::Index scree_dimension(const Eigen::VectorXd& eigenvalues,
                                    double threshold, Eigen::Index d_max) {
    const Eigen::Index r = eigenvalues.size();
    if (r == 0 || eigenvalues(0) <= 0.0) return 1;
    Eigen::Index rank = 0;
    while (rank < r && eigenvalues(rank) > 1e-12 * eigenvalues(0)) ++rank;
    d_max = std::min(d_max, rank - 1);
    if (d_max < 1) return 1;
    Eigen::Index d = 1;
    double max_drop = 0.0;
    for (Eigen::Index j = 0; j + 1 < rank; ++j)
        max_drop = std::max(max_drop, eigenvalues(j) - eigenvalues(j + 1));
    if (max_drop <= 0.0) return 1;
    for (Eigen::Index j = 0; j + 1 < rank; ++j)
        if (eigenvalues(j) - eigenvalues(j + 1) >= threshold * max_drop)
            d = j + 1;
    return std::clamp<Eigen::Index>(d, 1, d_max);
}

struct MStepResult {
    std::vector<ClusterComponent> components;
    bool degenerate = false;
};

/// Exact maximizer of the EM objective for the given responsibilities and
/// (optionally) frozen per-cluster dimensions. The per-cluster scatter is
/// handled through the SVD of the weighted centered data, so cost scales
/// with rows, not dims.
inline MStepResult m_step(const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& resp, double scree_threshold,
                          double variance_floor,
                          const std::vector<Eigen::Index>* frozen_dims) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const Eigen::Index k = resp.cols();
    MStepResult out;
    out.components.resize(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
        ClusterComponent& comp = out.components[static_cast<std::size_t>(c)];
        const double nk = resp.col(c).sum();
        if (!(nk > 1e-10) || !std::isfinite(nk)) {
            out.degenerate = true;
            return out;
        }
        comp.weight = nk / static_cast<double>(n);
        comp.mean = (resp.col(c).transpose() * x).transpose() / nk;

        Eigen::MatrixXd w = x.rowwise() - comp.mean.transpose();
        for (Eigen::Index i = 0; i < n; ++i)
            w.row(i) *= std::sqrt(resp(i, c) / nk);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            w, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd eig =
            svd.singularValues().array().square().matrix();
        const double total_var = eig.sum();

        const Eigen::Index d_max = std::min<Eigen::Index>(eig.size(), p - 1);
        Eigen::Index d;
        if (frozen_dims) {
            d = std::clamp<Eigen::Index>(
                (*frozen_dims)[static_cast<std::size_t>(c)], 1,
                std::max<Eigen::Index>(d_max, 1));
        } else {
            d = scree_dimension(eig, scree_threshold, d_max);
        }
        comp.intrinsic_dim = d;
        comp.basis = svd.matrixV().leftCols(d);
        const double signal_var = eig.head(d).sum();
        comp.noise_variance =
            std::max((total_var - signal_var) / static_cast<double>(p - d),
                     variance_floor);
        comp.signal_variance = std::max(signal_var / static_cast<double>(d),
                                        comp.noise_variance);
    }
    return out;
}

/// log-likelihood and responsibilities for fixed components.
inline double e_step(const Eigen::MatrixXd& x,
                     const std::vector<ClusterComponent>& comps,
                     Eigen::MatrixXd& resp) {
    const Eigen::Index n = x.rows();
    const auto k = static_cast<Eigen::Index>(comps.size());
    resp.resize(n, k);
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double max_term = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double t =
                std::log(comps[static_cast<std::size_t>(c)].weight) +
                component_log_density(comps[static_cast<std::size_t>(c)],
                                      x.row(i).transpose());
            resp(i, c) = t;
            max_term = std::max(max_term, t);
        }
        double sum = 0.0;
        for (Eigen::Index c = 0; c < k; ++c)
            sum += std::exp(resp(i, c) - max_term);
        const double lse = max_term + std::log(sum);
        for (Eigen::Index c = 0; c < k; ++c)
            resp(i, c) = std::exp(resp(i, c) - lse);
        loglik += lse;
    }
    return loglik;
}

} // namespace detail_cluster

/// Number of free parameters of the subspace mixture: mixing weights,
/// means, per-cluster variances, and the subspace orientations
/// (d_k directions in p-space, modulo rotations within the subspace).
inline std::size_t count_free_parameters(const ClusterModel& model) {
    const auto p = static_cast<double>(model.dim);
    double m = static_cast<double>(model.n_clusters()) - 1.0; // weights
    m += static_cast<double>(model.n_clusters()) * p;         // means
    m += 2.0 * static_cast<double>(model.n_clusters());       // a_k, b_k
    for (const auto& c : model.components) {
        const auto d = static_cast<double>(c.intrinsic_dim);
        m += d * (p - (d + 1.0) / 2.0);
    }
    return static_cast<std::size_t>(std::llround(m));
}

/// BIC under the "larger is better" convention:
/// 2 log L - m log n.
inline double bic(const ClusterModel& model) {
    return 2.0 * model.log_likelihood -
           static_cast<double>(model.free_parameters) *
               std::log(static_cast<double>(model.n_rows));
}

/// Fits a K-component subspace Gaussian mixture by EM, initialized from
/// k-means. Per-cluster dimensions come from the scree criterion each
/// iteration; if a re-selected dimension ever lowers the likelihood the
/// step is redone with the previous dimensions, which restores the
/// monotone EM guarantee. Deterministic for a fixed seed.
inline ClusterModel fit(const Eigen::MatrixXd& x, std::size_t k,
                        std::uint64_t seed, const FitOptions& options = {}) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (k < 1) throw usage_error("cluster::fit: K must be >= 1");
    if (n < k)
        throw usage_error("cluster::fit: fewer rows than clusters");
    if (x.cols() < 2)
        throw usage_error("cluster::fit: need at least two feature columns");
    if (!x.allFinite())
        throw data_error("cluster::fit: matrix contains non-finite values");

    const Eigen::RowVectorXd col_means = x.colwise().mean();
    const double mean_dim_variance =
        (x.rowwise() - col_means).array().square().mean();
    const double variance_floor = std::max(
        1e-10, options.noise_floor_fraction * mean_dim_variance);

    std::string last_failure;
    for (std::size_t attempt = 0; attempt <= options.degenerate_retries;
         ++attempt) {
        Rng rng(derive_seed(seed, "cluster-fit", attempt));

        const auto labels = detail_cluster::kmeans_labels(x, k, rng,
                                                          options.n_init);
        Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(
            static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < n; ++i)
            resp(static_cast<Eigen::Index>(i),
                 static_cast<Eigen::Index>(labels[i])) = 1.0;

        auto ms = detail_cluster::m_step(x, resp, options.scree_threshold,
                                         variance_floor, nullptr);
        if (ms.degenerate) {
            last_failure = "degenerate initial partition";
            continue;
        }

        ClusterModel model;
        model.n_rows = n;
        model.dim = static_cast<std::size_t>(x.cols());
        model.seed = seed;
        model.components = std::move(ms.components);

        double loglik = detail_cluster::e_step(x, model.components, resp);
        model.loglik_trace.push_back(loglik);
        bool failed = false;
        std::size_t iter = 1;
        for (; iter < options.max_iter; ++iter) {
            auto step = detail_cluster::m_step(x, resp,
                                               options.scree_threshold,
                                               variance_floor, nullptr);
            if (step.degenerate) {
                failed = true;
                last_failure = "cluster emptied during EM";
                break;
            }
            Eigen::MatrixXd new_resp;
            double new_loglik =
                detail_cluster::e_step(x, step.components, new_resp);
            if (new_loglik < loglik) {
                // The scree re-selection changed the structure for the
                // worse; redo the step with the previous dimensions.
                std::vector<Eigen::Index> dims;
                dims.reserve(model.components.size());
                for (const auto& c : model.components)
                    dims.push_back(c.intrinsic_dim);
                step = detail_cluster::m_step(x, resp,
                                              options.scree_threshold,
                                              variance_floor, &dims);
                if (step.degenerate) {
                    failed = true;
                    last_failure = "cluster emptied during EM";
                    break;
                }
                new_loglik =
                    detail_cluster::e_step(x, step.components, new_resp);
                if (new_loglik < loglik) break; // numerical floor; keep old
            }
            const double gain = new_loglik - loglik;
            model.components = std::move(step.components);
            resp = std::move(new_resp);
            const bool converged =
                gain < options.rel_tol * (1.0 + std::fabs(new_loglik));
            loglik = new_loglik;
            model.loglik_trace.push_back(loglik);
            if (converged) {
                ++iter;
                break;
            }
        }
        if (failed) continue;

        model.log_likelihood = loglik;
        model.em_iterations = iter;
        model.responsibilities = std::move(resp);
        model.free_parameters = count_free_parameters(model);
        model.bic = bic(model);
        model.assignments.resize(n);
        model.max_posterior.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t arg = 0;
            double best = -1.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double g =
                    model.responsibilities(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(c));
                if (g > best) { // strict: ties keep the lowest index
                    best = g;
                    arg = c;
                }
            }
            model.assignments[i] = arg;
            model.max_posterior[i] = best;
        }
        return model;
    }
    throw data_error("cluster::fit: no stable fit for K=" + std::to_string(k) +
                     " (" + last_failure + ")");
}

/// One row of the model-selection trace kept by select().
struct SelectionEntry {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    double bic = -std::numeric_limits<double>::infinity();
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::string message;
};

/// Fits every K in [k_min, k_max] for every seed and returns the
/// highest-BIC model. Failed fits stay in the trace; ties resolve to the
/// smaller K, then the earlier seed.
inline ClusterModel select(const Eigen::MatrixXd& x, std::size_t k_min,
                           std::size_t k_max,
                           const std::vector<std::uint64_t>& seeds,
                           const FitOptions& options = {},
                           std::vector<SelectionEntry>* trace = nullptr) {
    if (k_min < 1 || k_max < k_min)
        throw usage_error("cluster::select: empty K range");
    if (seeds.empty()) throw usage_error("cluster::select: no seeds");
    bool have_best = false;
    ClusterModel best;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        for (const std::uint64_t seed : seeds) {
            SelectionEntry entry;
            entry.k = k;
            entry.seed = seed;
            try {
                ClusterModel model = fit(x, k, seed, options);
                entry.ok = true;
                entry.bic = model.bic;
                entry.log_likelihood = model.log_likelihood;
                if (!have_best || model.bic > best.bic) {
                    best = std::move(model);
                    have_best = true;
                }
            } catch (const error& e) {
                entry.message = e.what();
            }
            if (trace) trace->push_back(std::move(entry));
        }
    }
    if (!have_best)
        throw data_error("cluster::select: every fit failed over the K range");
    return best;
}

} // namespace nbprof
