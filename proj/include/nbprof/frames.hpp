#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "nbprof/error.hpp"

namespace nbprof {

/// Per-interval total of neighborhood applications after trailing empty
/// intervals have been removed. Index 0 holds interval 1.
struct ActivityProfile {
    std::vector<double> values;

    std::size_t n_intervals() const { return values.size(); }
    double total() const {
        return std::accumulate(values.begin(), values.end(), 0.0);
    }
};

/// Frame partition of [1, n_intervals]: ends[f] is the last interval of
/// frame f+1, strictly increasing, final entry = n_intervals.
struct FrameSpec {
    std::vector<std::size_t> ends;

    std::size_t n_frames() const { return ends.size(); }
    std::size_t last_interval() const { return ends.back(); }

    /// First interval of frame f (1-based frame index).
    std::size_t frame_begin(std::size_t f) const {
        if (f < 1 || f > n_frames())
            throw usage_error("FrameSpec: frame index out of range");
        return f == 1 ? 1 : ends[f - 2] + 1;
    }
    std::size_t frame_end(std::size_t f) const {
        if (f < 1 || f > n_frames())
            throw usage_error("FrameSpec: frame index out of range");
        return ends[f - 1];
    }

    void validate() const {
        if (ends.empty()) throw data_error("FrameSpec: empty");
        for (std::size_t i = 1; i < ends.size(); ++i)
            if (ends[i] <= ends[i - 1])
                throw data_error("FrameSpec: ends not strictly increasing");
        if (ends.front() < 1) throw data_error("FrameSpec: bad first end");
    }
};

/// Drops trailing zero-activity intervals (the tail the search never
/// reached). Errors on an all-zero profile.
inline ActivityProfile trim_empty_tail(const std::vector<double>& a) {
    std::size_t last = a.size();
    while (last > 0 && a[last - 1] == 0.0) --last;
    if (last == 0)
        throw data_error("trim_empty_tail: profile has no activity");
    return ActivityProfile{std::vector<double>(a.begin(), a.begin() + last)};
}

inline ActivityProfile trim_empty_tail(const std::vector<std::uint64_t>& a) {
    std::vector<double> d(a.begin(), a.end());
    return trim_empty_tail(d);
}

/// Groups intervals into exactly n_frames contiguous frames.
///
/// A scan with threshold l = avg*(1+r) closes a singleton frame on any
/// interval with activity >= l and otherwise extends the frame to the
/// largest index whose running activity sum stays <= l. If the scan yields
/// too few frames, r drops by 0.01 and the scan restarts; if too many,
/// adjacent frames are merged pairwise from the front (re-sweeping) until
/// exactly n_frames remain. r is floored at -0.95: profiles that still
/// produce too few frames there (e.g. fewer active intervals than frames)
/// are rejected.
inline FrameSpec group_frames(const ActivityProfile& profile,
                              std::size_t n_frames) {
    const std::size_t n = profile.n_intervals();
    if (n == 0 || profile.values.back() == 0.0)
        throw usage_error("group_frames: profile must be tail-trimmed");
    if (n_frames < 1 || n_frames > n)
        throw usage_error("group_frames: n_frames must lie in [1, n_intervals]");
    for (double v : profile.values)
        if (v < 0.0) throw usage_error("group_frames: negative activity");

    const std::vector<double>& a = profile.values;
    const double avg = profile.total() / static_cast<double>(n_frames);

    std::vector<std::size_t> ends;
    // r = 0.05 - 0.01*step, evaluated from integers to avoid drift.
    for (int step = 0;; ++step) {
        const double r = static_cast<double>(5 - step) / 100.0;
        if (r < -0.95)
            throw data_error(
                "group_frames: cannot split the profile into the requested "
                "number of frames (activity too concentrated)");
        const double l = avg * (1.0 + r);
        ends.clear();
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
        if (ends.size() >= n_frames) break;
    }

    // Merge surplus frames pairwise from the front; dropping the first end
    // of a pair fuses the pair into one frame.
    while (ends.size() > n_frames) {
        std::size_t pos = 0;
        while (ends.size() > n_frames && pos + 1 < ends.size()) {
            ends.erase(ends.begin() + static_cast<std::ptrdiff_t>(pos));
            ++pos;
        }
    }

    FrameSpec spec{std::move(ends)};
    spec.validate();
    if (spec.last_interval() != n)
        throw internal_error("group_frames: frames do not cover the profile");
    return spec;
}

/// Frame containing the given interval: smallest f with interval <= ends[f].
inline std::size_t frame_of(const FrameSpec& spec, std::size_t interval) {
    if (interval < 1 || interval > spec.last_interval())
        throw usage_error("frame_of: interval index out of range");
    for (std::size_t f = 0; f < spec.ends.size(); ++f)
        if (interval <= spec.ends[f]) return f + 1;
    throw internal_error("frame_of: unreachable");
}

} // namespace nbprof
