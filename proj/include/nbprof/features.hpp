#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nbprof/aggregate.hpp"
#include "nbprof/error.hpp"

namespace nbprof {

/// A point on the 3-part simplex; parts map to (r_improve, r_worsen,
/// r_nothing).
struct Composition3 {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    void validate(double tol = 1e-12) const {
        if (x1 < 0.0 || x2 < 0.0 || x3 < 0.0)
            throw usage_error("Composition3: negative component");
        if (std::fabs(x1 + x2 + x3 - 1.0) > tol)
            throw usage_error("Composition3: components must sum to 1");
    }
};

struct IlrCoords {
    double z1 = 0.0;
    double z2 = 0.0;
};

/// Isometric log-ratio transform under one fixed orthonormal balance
/// basis:
///   z1 = (1/sqrt 2) ln(x1/x2)
///   z2 = sqrt(2/3) ln(sqrt(x1 x2) / x3)
/// Zero components are first replaced multiplicatively: zeros become
/// epsilon and the nonzero parts are rescaled so the total stays 1.
/// With epsilon = 0 a zero component sends the corresponding coordinate
/// to +-infinity; that is returned as such, not an error.
inline IlrCoords ilr(Composition3 c, double epsilon = 0.0) {
    c.validate();
    if (epsilon != 0.0 && (epsilon < 0.0 || epsilon >= 1.0 / 3.0))
        throw usage_error("ilr: epsilon must lie in [0, 1/3)");
    if (epsilon > 0.0) {
        double zeros = 0.0;
        if (c.x1 == 0.0) zeros += 1.0;
        if (c.x2 == 0.0) zeros += 1.0;
        if (c.x3 == 0.0) zeros += 1.0;
        if (zeros > 0.0) {
            const double scale = 1.0 - zeros * epsilon;
            c.x1 = c.x1 == 0.0 ? epsilon : c.x1 * scale;
            c.x2 = c.x2 == 0.0 ? epsilon : c.x2 * scale;
            c.x3 = c.x3 == 0.0 ? epsilon : c.x3 * scale;
        }
    }
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double sqrt_2_3 = std::sqrt(2.0 / 3.0);
    return IlrCoords{inv_sqrt2 * std::log(c.x1 / c.x2),
                     sqrt_2_3 * std::log(std::sqrt(c.x1 * c.x2) / c.x3)};
}

/// One row per neighborhood; columns are (instance, frame) blocks of
/// [z1, z2, rho_improve, rho_worsen]. The mask flags imputed cells.
struct FeatureMatrix {
    std::vector<std::string> row_ids;       ///< neighborhood ids
    std::vector<std::string> column_labels; ///< e.g. "demo_a/f2/z1"
    std::vector<std::vector<double>> values; ///< [row][col]
    std::vector<std::vector<bool>> imputed;  ///< [row][col]

    std::size_t n_rows() const { return row_ids.size(); }
    std::size_t n_cols() const { return column_labels.size(); }

    void validate() const {
        if (values.size() != n_rows() || imputed.size() != n_rows())
            throw internal_error("FeatureMatrix: row count mismatch");
        for (const auto& r : values)
            if (r.size() != n_cols())
                throw internal_error("FeatureMatrix: column count mismatch");
        for (const auto& r : imputed)
            if (r.size() != n_cols())
                throw internal_error("FeatureMatrix: mask shape mismatch");
    }
};

/// Everything the feature assembly needs from one analyzed instance.
struct InstanceAggregates {
    std::string instance_id;
    std::vector<std::string> neighborhood_ids;
    /// [nbh][frame] ratios; empty optional where the neighborhood was idle.
    std::vector<std::vector<std::optional<FrameRatios>>> ratios;
    /// [frame][nbh] robust rank-aggregation scores.
    std::vector<std::vector<double>> rho_improve;
    std::vector<std::vector<double>> rho_worsen;
};

/// Builds the per-neighborhood feature matrix across instances. For every
/// (instance, frame) block the composition (r_improve, r_worsen,
/// r_nothing) runs through the ILR transform with a pseudo-count zero
/// floor of 0.5/n_iters; missing compositions are imputed with the
/// frame's across-neighborhood mean composition (uniform when the whole
/// frame is silent) and flagged in the mask.
inline FeatureMatrix assemble(const std::vector<InstanceAggregates>& instances) {
    if (instances.empty()) throw usage_error("assemble: no instances");
    const std::vector<std::string>& ids = instances.front().neighborhood_ids;
    for (const auto& inst : instances)
        if (inst.neighborhood_ids != ids)
            throw data_error("assemble: neighborhood universe differs between "
                             "instances (found mismatch in '" +
                             inst.instance_id + "')");
    const std::size_t m = ids.size();

    FeatureMatrix out;
    out.row_ids = ids;
    out.values.assign(m, {});
    out.imputed.assign(m, {});

    for (const auto& inst : instances) {
        const std::size_t n_frames = inst.rho_improve.size();
        if (inst.rho_worsen.size() != n_frames || inst.ratios.size() != m)
            throw data_error("assemble: inconsistent aggregates for '" +
                             inst.instance_id + "'");
        for (std::size_t f = 0; f < n_frames; ++f) {
            const std::string base =
                inst.instance_id + "/f" + std::to_string(f + 1) + "/";
            out.column_labels.push_back(base + "z1");
            out.column_labels.push_back(base + "z2");
            out.column_labels.push_back(base + "rhoI");
            out.column_labels.push_back(base + "rhoW");

            // Mean composition of the neighborhoods present in this frame,
            // used to fill the absent ones.
            Composition3 fill{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
            double fill_eps = 0.0;
            double present = 0.0;
            Composition3 sum{0.0, 0.0, 0.0};
            double sum_iters = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const auto& r = inst.ratios[k][f];
                if (!r) continue;
                sum.x1 += r->r_improve;
                sum.x2 += r->r_worsen;
                sum.x3 += r->r_nothing;
                sum_iters += static_cast<double>(r->n_iters);
                present += 1.0;
            }
            if (present > 0.0) {
                fill = Composition3{sum.x1 / present, sum.x2 / present,
                                    sum.x3 / present};
                fill_eps = 0.5 / (sum_iters / present);
            }

            for (std::size_t k = 0; k < m; ++k) {
                const auto& r = inst.ratios[k][f];
                const bool missing = !r.has_value();
                Composition3 comp = missing
                                        ? fill
                                        : Composition3{r->r_improve,
                                                       r->r_worsen,
                                                       r->r_nothing};
                const double eps =
                    missing ? fill_eps
                            : 0.5 / static_cast<double>(r->n_iters);
                const IlrCoords z = ilr(comp, std::min(eps, 0.25));
                out.values[k].push_back(z.z1);
                out.values[k].push_back(z.z2);
                out.values[k].push_back(inst.rho_improve[f][k]);
                out.values[k].push_back(inst.rho_worsen[f][k]);
                out.imputed[k].push_back(missing);
                out.imputed[k].push_back(missing);
                out.imputed[k].push_back(false);
                out.imputed[k].push_back(false);
            }
        }
    }
    out.validate();
    return out;
}

/// Per-column shift and scale of a standardized matrix, kept so reports
/// can state what was applied.
struct Standardization {
    std::vector<double> shift;
    std::vector<double> scale; ///< 1 where the column was constant
};

/// Shifts every column to mean 0 and scales to unit variance (population
/// convention). Constant columns become all zeros.
inline Standardization standardize(FeatureMatrix& m) {
    m.validate();
    if (m.n_rows() < 2)
        throw usage_error("standardize: need at least two rows");
    const auto n = static_cast<double>(m.n_rows());
    Standardization st;
    st.shift.resize(m.n_cols());
    st.scale.resize(m.n_cols());
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < m.n_rows(); ++r) mu += m.values[r][c];
        mu /= n;
        double var = 0.0;
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            const double d = m.values[r][c] - mu;
            var += d * d;
        }
        var /= n;
        const double sd = std::sqrt(var);
        st.shift[c] = mu;
        st.scale[c] = sd > 0.0 ? sd : 1.0;
        for (std::size_t r = 0; r < m.n_rows(); ++r)
            m.values[r][c] = (m.values[r][c] - mu) / st.scale[c];
    }
    return st;
}

} // namespace nbprof
