#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "nbprof/frames.hpp"
#include "nbprof/runlog.hpp"
#include "nbprof/stats.hpp"

namespace nbprof {

/// Proportions of improving / worsening / neutral applications of one
/// neighborhood within one frame. Present only where the neighborhood was
/// applied at least once.
struct FrameRatios {
    double r_improve = 0.0;
    double r_worsen = 0.0;
    double r_nothing = 0.0;
    std::uint64_t n_iters = 0; ///< frame total behind the ratios
};

enum class MagnitudeKind { improve, worsen };

/// Neighborhoods of one interval ordered best-first by per-application
/// magnitude; normalized_rank = position / m with m the full roster size,
/// so partial lists leave a gap up to 1.
struct RankList {
    std::size_t interval = 0;
    std::vector<std::size_t> order;          ///< neighborhood indices, best first
    std::vector<double> normalized_ranks;    ///< aligned with order, in (0, 1]
};

/// Robust rank-aggregation score: the minimum over k of the probability
/// that the k-th of L uniform order statistics falls at or below the k-th
/// smallest observed rank. Lower means the item ranks consistently high.
/// Ranks must already contain one entry per list (missing filled with 1).
inline double rra_score(std::vector<double> normalized_ranks) {
    if (normalized_ranks.empty()) throw usage_error("rra_score: no ranks");
    for (double r : normalized_ranks)
        if (!(r > 0.0) || r > 1.0)
            throw usage_error("rra_score: ranks must lie in (0, 1]");
    std::sort(normalized_ranks.begin(), normalized_ranks.end());
    const std::size_t L = normalized_ranks.size();
    double rho = 1.0;
    for (std::size_t k = 1; k <= L; ++k)
        rho = std::min(rho, beta_order_cdf(k, L, normalized_ranks[k - 1]));
    return rho;
}

/// Sums n_I / n_SN / n_W over the intervals of each frame and divides by
/// the frame's n_iters. Returns one optional per (neighborhood, frame),
/// indexed [nbh][frame-1]; a neighborhood never applied in a frame yields
/// an empty optional rather than zeros.
inline std::vector<std::vector<std::optional<FrameRatios>>>
frame_ratios(const RunLog& log, const FrameSpec& spec) {
    spec.validate();
    if (spec.last_interval() > log.n_intervals())
        throw data_error("frame_ratios: frame axis exceeds the log's grid");
    std::vector<std::vector<std::optional<FrameRatios>>> out(
        log.n_neighborhoods(),
        std::vector<std::optional<FrameRatios>>(spec.n_frames()));
    for (std::size_t k = 0; k < log.n_neighborhoods(); ++k) {
        for (std::size_t f = 1; f <= spec.n_frames(); ++f) {
            std::uint64_t iters = 0, ni = 0, nsn = 0, nw = 0;
            for (std::size_t j = spec.frame_begin(f); j <= spec.frame_end(f); ++j) {
                const CellStats& c = log.cell(k, j);
                iters += c.n_iters;
                ni += c.n_improve;
                nsn += c.n_nothing;
                nw += c.n_worsen;
            }
            if (iters == 0) continue;
            const auto d = static_cast<double>(iters);
            out[k][f - 1] = FrameRatios{static_cast<double>(ni) / d,
                                        static_cast<double>(nw) / d,
                                        static_cast<double>(nsn) / d, iters};
        }
    }
    return out;
}

/// Ranks the neighborhoods of every interval by per-application magnitude
/// (s_I/n_iters or s_W/n_iters, larger first). Ties break toward the
/// cheaper operator (smaller s_time/n_iters), then by roster order.
/// Intervals where nothing was applied produce no list. Only intervals in
/// [1, max_interval] are considered (the tail-trimmed axis).
inline std::vector<RankList> interval_rank_lists(const RunLog& log,
                                                 MagnitudeKind kind,
                                                 std::size_t max_interval) {
    if (max_interval < 1 || max_interval > log.n_intervals())
        throw usage_error("interval_rank_lists: max_interval out of range");
    const std::size_t m = log.n_neighborhoods();
    std::vector<RankList> lists;
    for (std::size_t j = 1; j <= max_interval; ++j) {
        struct Entry {
            std::size_t nbh;
            double avg_magnitude;
            double avg_time;
        };
        std::vector<Entry> entries;
        for (std::size_t k = 0; k < m; ++k) {
            const CellStats& c = log.cell(k, j);
            if (c.n_iters == 0) continue;
            const auto d = static_cast<double>(c.n_iters);
            const double mag = (kind == MagnitudeKind::improve
                                    ? c.sum_improve
                                    : c.sum_worsen) /
                               d;
            entries.push_back({k, mag, static_cast<double>(c.sum_time_ns) / d});
        }
        if (entries.empty()) continue;
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) {
                      if (a.avg_magnitude != b.avg_magnitude)
                          return a.avg_magnitude > b.avg_magnitude;
                      if (a.avg_time != b.avg_time)
                          return a.avg_time < b.avg_time;
                      return a.nbh < b.nbh;
                  });
        RankList list;
        list.interval = j;
        for (std::size_t pos = 0; pos < entries.size(); ++pos) {
            list.order.push_back(entries[pos].nbh);
            list.normalized_ranks.push_back(static_cast<double>(pos + 1) /
                                            static_cast<double>(m));
        }
        lists.push_back(std::move(list));
    }
    return lists;
}

/// Aggregates the rank lists of one frame into a score per neighborhood.
/// A neighborhood missing from a list contributes rank 1; one absent from
/// every list scores exactly 1.
inline std::vector<double>
aggregate_magnitudes(const std::vector<RankList>& lists,
                     std::size_t n_neighborhoods) {
    if (lists.empty())
        throw usage_error("aggregate_magnitudes: no rank lists in frame");
    const std::size_t L = lists.size();
    std::vector<std::vector<double>> ranks(n_neighborhoods,
                                           std::vector<double>(L, 1.0));
    for (std::size_t li = 0; li < L; ++li) {
        const RankList& list = lists[li];
        for (std::size_t pos = 0; pos < list.order.size(); ++pos) {
            if (list.order[pos] >= n_neighborhoods)
                throw usage_error("aggregate_magnitudes: neighborhood index "
                                  "outside the roster");
            ranks[list.order[pos]][li] = list.normalized_ranks[pos];
        }
    }
    // A neighborhood absent from every list carries all-1 ranks, for which
    // the score is exactly 1.
    std::vector<double> rho(n_neighborhoods, 1.0);
    for (std::size_t k = 0; k < n_neighborhoods; ++k)
        rho[k] = rra_score(ranks[k]);
    return rho;
}

/// Magnitude scores for every frame of a spec, using only the lists whose
/// interval falls inside each frame. Frames with no informative interval
/// score 1 for every neighborhood (nothing was observed there).
inline std::vector<std::vector<double>>
frame_magnitude_scores(const RunLog& log, const FrameSpec& spec,
                       MagnitudeKind kind) {
    spec.validate();
    if (spec.last_interval() > log.n_intervals())
        throw data_error("frame_magnitude_scores: frame axis exceeds the log");
    const auto lists = interval_rank_lists(log, kind, spec.last_interval());
    std::vector<std::vector<double>> out;
    out.reserve(spec.n_frames());
    for (std::size_t f = 1; f <= spec.n_frames(); ++f) {
        std::vector<RankList> in_frame;
        for (const RankList& l : lists)
            if (l.interval >= spec.frame_begin(f) &&
                l.interval <= spec.frame_end(f))
                in_frame.push_back(l);
        if (in_frame.empty())
            out.emplace_back(log.n_neighborhoods(), 1.0);
        else
            out.push_back(aggregate_magnitudes(in_frame, log.n_neighborhoods()));
    }
    return out;
}

} // namespace nbprof
