#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nbprof/error.hpp"
#include "nbprof/textio.hpp"

namespace nbprof {

/// Cost range of one instance: upper bound from a worst reference solution
/// (the initial solution), lower bound from the best known cost.
struct QualityBounds {
    double upper_bound = 0.0;
    double lower_bound = 0.0;

    void validate() const {
        if (!std::isfinite(upper_bound) || !std::isfinite(lower_bound))
            throw usage_error("QualityBounds: bounds must be finite");
        if (!(upper_bound > lower_bound))
            throw usage_error("QualityBounds: upper_bound must exceed lower_bound");
    }
    double range() const { return upper_bound - lower_bound; }
};

/// Partition of [lower_bound, upper_bound] into n intervals whose widths
/// shrink geometrically toward the lower bound. Interval i covers
/// (boundary(i), boundary(i-1)], so index 1 sits at the worst-quality end
/// and the fine intervals sit where solutions are hard to improve.
class IntervalGrid {
public:
    IntervalGrid() = default;

    IntervalGrid(QualityBounds bounds, std::size_t n_intervals, double decay)
        : bounds_(bounds), decay_(decay) {
        bounds_.validate();
        if (n_intervals < 1)
            throw usage_error("IntervalGrid: n_intervals must be >= 1");
        if (!(decay > 0.0) || decay > 1.0 || !std::isfinite(decay))
            throw usage_error("IntervalGrid: decay must lie in (0, 1]");
        const double range = bounds_.range();
        const auto n = static_cast<double>(n_intervals);
        const double w1 = decay == 1.0
                              ? range / n
                              : range * (1.0 - decay) / (1.0 - std::pow(decay, n));
        boundaries_.resize(n_intervals + 1);
        boundaries_[0] = bounds_.upper_bound;
        // Widths are built multiplicatively so consecutive ratios equal the
        // decay to within one ulp; the accumulated drift at the lower end
        // stays far inside the 1e-9 relative tolerance.
        double w = w1;
        for (std::size_t i = 1; i <= n_intervals; ++i) {
            boundaries_[i] = boundaries_[i - 1] - w;
            if (!(boundaries_[i] < boundaries_[i - 1]))
                throw usage_error(
                    "IntervalGrid: interval width underflows to zero; "
                    "fewer intervals or a larger decay is needed");
            w *= decay;
        }
        first_width_ = w1;
    }

    const QualityBounds& bounds() const { return bounds_; }
    std::size_t n_intervals() const { return boundaries_.size() - 1; }
    double decay() const { return decay_; }

    /// boundary(0) = upper_bound, boundary(n) ~= lower_bound.
    double boundary(std::size_t i) const { return boundaries_.at(i); }
    const std::vector<double>& boundaries() const { return boundaries_; }

    double width(std::size_t i) const {
        if (i < 1 || i > n_intervals())
            throw usage_error("IntervalGrid::width: index out of range");
        return boundaries_[i - 1] - boundaries_[i];
    }

    /// Interval index in [1, n] whose half-open cost range contains `cost`;
    /// costs at or beyond the bounds clamp to the end intervals.
    /// Binary search over the stored boundaries.
    std::size_t interval_of(double cost) const {
        if (!std::isfinite(cost))
            throw usage_error("interval_of: cost must be finite");
        const std::size_t n = n_intervals();
        if (cost >= boundaries_[0]) return 1;
        if (cost <= boundaries_[n]) return n;
        // boundaries_ descend; find first boundary < cost.
        std::size_t lo = 0, hi = n;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (boundaries_[mid] < cost)
                hi = mid;
            else
                lo = mid;
        }
        return hi;
    }

    /// Same lookup through the geometric-series inverse, corrected against
    /// the stored boundaries. Kept as an independent route; must agree with
    /// interval_of everywhere.
    std::size_t interval_of_closed_form(double cost) const {
        if (!std::isfinite(cost))
            throw usage_error("interval_of_closed_form: cost must be finite");
        const std::size_t n = n_intervals();
        if (cost >= boundaries_[0]) return 1;
        if (cost <= boundaries_[n]) return n;
        const double depth = bounds_.upper_bound - cost;
        double j;
        if (decay_ == 1.0) {
            j = depth / first_width_;
        } else {
            const double s = 1.0 - depth * (1.0 - decay_) / first_width_;
            j = s > 0.0 ? std::log(s) / std::log(decay_)
                        : static_cast<double>(n);
        }
        auto idx = static_cast<long long>(std::floor(j)) + 1;
        idx = std::clamp<long long>(idx, 1, static_cast<long long>(n));
        // Settle rounding at the seams by walking to the bracketing interval.
        auto i = static_cast<std::size_t>(idx);
        while (i > 1 && cost > boundaries_[i - 1]) --i;
        while (i < n && cost <= boundaries_[i]) ++i;
        return i;
    }

    bool same_geometry(const IntervalGrid& other, double rel_tol = 1e-12) const {
        const double scale = std::max(std::abs(bounds_.upper_bound),
                                      std::abs(other.bounds_.upper_bound));
        return n_intervals() == other.n_intervals() &&
               std::abs(decay_ - other.decay_) <= rel_tol &&
               std::abs(bounds_.upper_bound - other.bounds_.upper_bound) <=
                   rel_tol * (1.0 + scale) &&
               std::abs(bounds_.lower_bound - other.bounds_.lower_bound) <=
                   rel_tol * (1.0 + scale);
    }

private:
    QualityBounds bounds_;
    double decay_ = 1.0;
    double first_width_ = 0.0;
    std::vector<double> boundaries_;
};

inline IntervalGrid build_grid(QualityBounds bounds, std::size_t n_intervals,
                               double decay) {
    return IntervalGrid(bounds, n_intervals, decay);
}

/// Accumulated counters for one (neighborhood, interval) pair.
struct CellStats {
    std::uint64_t n_iters = 0; ///< applications
    std::uint64_t n_improve = 0;
    std::uint64_t n_nothing = 0;
    std::uint64_t n_worsen = 0;
    double sum_improve = 0.0;     ///< total improvement magnitude, cost units
    double sum_worsen = 0.0;      ///< total worsening magnitude, cost units
    std::uint64_t sum_time_ns = 0; ///< summed application time, integer ns

    bool empty() const {
        return n_iters == 0 && sum_improve == 0.0 && sum_worsen == 0.0 &&
               sum_time_ns == 0;
    }

    void validate() const {
        if (n_iters != n_improve + n_nothing + n_worsen)
            throw data_error("CellStats: n_iters != n_I + n_SN + n_W");
        if (sum_improve < 0.0 || sum_worsen < 0.0)
            throw data_error("CellStats: negative magnitude sum");
        if (n_improve == 0 && sum_improve != 0.0)
            throw data_error("CellStats: s_I nonzero with n_I = 0");
        if (n_worsen == 0 && sum_worsen != 0.0)
            throw data_error("CellStats: s_W nonzero with n_W = 0");
    }

    CellStats& operator+=(const CellStats& o) {
        n_iters += o.n_iters;
        n_improve += o.n_improve;
        n_nothing += o.n_nothing;
        n_worsen += o.n_worsen;
        sum_improve += o.sum_improve;
        sum_worsen += o.sum_worsen;
        sum_time_ns += o.sum_time_ns;
        return *this;
    }

    bool operator==(const CellStats&) const = default;
};

/// Per-instance matrix of CellStats over (neighborhood x interval), plus the
/// grid it was collected on. Immutable in spirit: producers fill it once,
/// afterwards logs are only merged or read.
class RunLog {
public:
    RunLog() = default;

    RunLog(std::string instance_id, IntervalGrid grid,
           std::vector<std::string> neighborhood_ids)
        : instance_id_(std::move(instance_id)), grid_(std::move(grid)),
          neighborhood_ids_(std::move(neighborhood_ids)),
          cells_(neighborhood_ids_.size() * grid_.n_intervals()) {
        if (neighborhood_ids_.empty())
            throw usage_error("RunLog: neighborhood list must not be empty");
    }

    const std::string& instance_id() const { return instance_id_; }
    const IntervalGrid& grid() const { return grid_; }
    const std::vector<std::string>& neighborhood_ids() const {
        return neighborhood_ids_;
    }
    std::size_t n_neighborhoods() const { return neighborhood_ids_.size(); }
    std::size_t n_intervals() const { return grid_.n_intervals(); }
    std::uint64_t run_count() const { return run_count_; }
    void set_run_count(std::uint64_t c) { run_count_ = c; }

    /// nbh in [0, n_neighborhoods), interval in [1, n_intervals].
    CellStats& cell(std::size_t nbh, std::size_t interval) {
        return cells_[index(nbh, interval)];
    }
    const CellStats& cell(std::size_t nbh, std::size_t interval) const {
        return cells_[index(nbh, interval)];
    }

    std::size_t neighborhood_index(const std::string& id) const {
        const auto it =
            std::find(neighborhood_ids_.begin(), neighborhood_ids_.end(), id);
        if (it == neighborhood_ids_.end())
            throw data_error("RunLog: unknown neighborhood id '" + id + "'");
        return static_cast<std::size_t>(it - neighborhood_ids_.begin());
    }

    /// Total applications per interval, summed over neighborhoods.
    std::vector<std::uint64_t> activity_profile() const {
        std::vector<std::uint64_t> a(n_intervals(), 0);
        for (std::size_t k = 0; k < n_neighborhoods(); ++k)
            for (std::size_t j = 1; j <= n_intervals(); ++j)
                a[j - 1] += cell(k, j).n_iters;
        return a;
    }

    std::uint64_t total_iters() const {
        std::uint64_t t = 0;
        for (const auto& c : cells_) t += c.n_iters;
        return t;
    }

    void validate() const {
        for (const auto& c : cells_) c.validate();
    }

    bool operator==(const RunLog& o) const {
        return instance_id_ == o.instance_id_ &&
               grid_.same_geometry(o.grid_) &&
               neighborhood_ids_ == o.neighborhood_ids_ &&
               run_count_ == o.run_count_ && cells_ == o.cells_;
    }

private:
    std::size_t index(std::size_t nbh, std::size_t interval) const {
        if (nbh >= n_neighborhoods() || interval < 1 ||
            interval > n_intervals())
            throw usage_error("RunLog::cell: index out of range");
        return nbh * n_intervals() + (interval - 1);
    }

    std::string instance_id_;
    IntervalGrid grid_;
    std::vector<std::string> neighborhood_ids_;
    std::vector<CellStats> cells_;
    std::uint64_t run_count_ = 0;
};

/// Field-wise sum of logs sharing instance, grid geometry, and roster.
/// The floating magnitude sums are accumulated in a canonical order
/// (sorted by magnitude), so any permutation of the input list produces
/// the bit-identical merged log.
inline RunLog merge_logs(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw usage_error("merge_logs: no logs given");
    RunLog out = logs.front();
    for (std::size_t i = 1; i < logs.size(); ++i) {
        const RunLog& l = logs[i];
        if (l.instance_id() != out.instance_id())
            throw data_error("merge_logs: instance_id mismatch ('" +
                             l.instance_id() + "' vs '" + out.instance_id() +
                             "')");
        if (!l.grid().same_geometry(out.grid()))
            throw data_error("merge_logs: grid mismatch for instance '" +
                             out.instance_id() + "'");
        if (l.neighborhood_ids() != out.neighborhood_ids())
            throw data_error("merge_logs: neighborhood roster mismatch");
        out.set_run_count(out.run_count() + l.run_count());
    }
    const auto sorted_sum = [&](std::size_t k, std::size_t j, auto field) {
        std::vector<double> parts;
        parts.reserve(logs.size());
        for (const RunLog& l : logs) {
            const double v = l.cell(k, j).*field;
            if (v != 0.0) parts.push_back(v);
        }
        std::sort(parts.begin(), parts.end(), [](double a, double b) {
            return std::fabs(a) != std::fabs(b) ? std::fabs(a) < std::fabs(b)
                                                : a < b;
        });
        double sum = 0.0;
        for (double v : parts) sum += v;
        return sum;
    };
    for (std::size_t k = 0; k < out.n_neighborhoods(); ++k) {
        for (std::size_t j = 1; j <= out.n_intervals(); ++j) {
            CellStats& dst = out.cell(k, j);
            dst = CellStats{};
            for (const RunLog& l : logs) {
                const CellStats& src = l.cell(k, j);
                dst.n_iters += src.n_iters;
                dst.n_improve += src.n_improve;
                dst.n_nothing += src.n_nothing;
                dst.n_worsen += src.n_worsen;
                dst.sum_time_ns += src.sum_time_ns;
            }
            dst.sum_improve = sorted_sum(k, j, &CellStats::sum_improve);
            dst.sum_worsen = sorted_sum(k, j, &CellStats::sum_worsen);
        }
    }
    return out;
}

namespace detail {

inline std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

} // namespace detail

/// Serializes a RunLog in the plain-text line format:
/// header keys, then one comma-separated row per nonzero cell.
/// Costs carry 17 significant digits so the round-trip is exact.
inline void write_log(const RunLog& log, std::ostream& os,
                      const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << "instance " << log.instance_id() << '\n';
    os << "upper_bound " << format_cost(log.grid().bounds().upper_bound) << '\n';
    os << "lower_bound " << format_cost(log.grid().bounds().lower_bound) << '\n';
    os << "n_intervals " << log.n_intervals() << '\n';
    os << "decay " << format_cost(log.grid().decay()) << '\n';
    os << "run_count " << log.run_count() << '\n';
    os << "neighborhoods " << detail::join(log.neighborhood_ids(), ',') << '\n';
    for (std::size_t k = 0; k < log.n_neighborhoods(); ++k) {
        for (std::size_t j = 1; j <= log.n_intervals(); ++j) {
            const CellStats& c = log.cell(k, j);
            if (c.empty()) continue;
            os << log.neighborhood_ids()[k] << ',' << j << ',' << c.n_iters
               << ',' << c.n_improve << ',' << c.n_nothing << ',' << c.n_worsen
               << ',' << format_cost(c.sum_improve) << ','
               << format_cost(c.sum_worsen) << ',' << c.sum_time_ns << '\n';
        }
    }
}

inline void write_log(const RunLog& log, const std::string& path,
                      const std::vector<std::string>& comments = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("write_log: cannot open '" + path + "'");
    write_log(log, os, comments);
    if (!os) throw data_error("write_log: write failed for '" + path + "'");
}

inline RunLog read_log(std::istream& is, const std::string& origin = "<stream>") {
    std::map<std::string, std::string> header;
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(is, line)) {
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto comma = t.find(',');
        const auto space = t.find(' ');
        if (space != std::string_view::npos &&
            (comma == std::string_view::npos || space < comma)) {
            header.emplace(std::string(t.substr(0, space)),
                           std::string(trim(t.substr(space + 1))));
        } else {
            rows.emplace_back(t);
        }
    }
    for (const char* key : {"instance", "upper_bound", "lower_bound",
                            "n_intervals", "decay", "run_count", "neighborhoods"})
        if (!header.count(key))
            throw data_error("read_log: missing header '" + std::string(key) +
                             "' in " + origin);

    QualityBounds bounds{parse_double(header["upper_bound"], "upper_bound"),
                         parse_double(header["lower_bound"], "lower_bound")};
    const auto n_intervals = parse_uint(header["n_intervals"], "n_intervals");
    const double decay = parse_double(header["decay"], "decay");
    IntervalGrid grid;
    try {
        grid = build_grid(bounds, static_cast<std::size_t>(n_intervals), decay);
    } catch (const usage_error& e) {
        throw data_error("read_log: invalid grid in " + origin + ": " + e.what());
    }
    std::vector<std::string> ids = split(header["neighborhoods"], ',');
    if (ids.size() == 1 && ids[0].empty())
        throw data_error("read_log: empty neighborhood list in " + origin);

    RunLog log(header["instance"], grid, ids);
    log.set_run_count(parse_uint(header["run_count"], "run_count"));

    for (const std::string& row : rows) {
        const auto f = split(row, ',');
        if (f.size() != 9)
            throw data_error("read_log: malformed cell row in " + origin +
                             ": '" + row + "'");
        const std::size_t nbh = log.neighborhood_index(f[0]);
        const auto interval = parse_uint(f[1], "interval");
        if (interval < 1 || interval > log.n_intervals())
            throw data_error("read_log: interval index out of range in " +
                             origin + ": '" + row + "'");
        CellStats c;
        c.n_iters = parse_uint(f[2], "n_iters");
        c.n_improve = parse_uint(f[3], "n_I");
        c.n_nothing = parse_uint(f[4], "n_SN");
        c.n_worsen = parse_uint(f[5], "n_W");
        c.sum_improve = parse_double(f[6], "s_I");
        c.sum_worsen = parse_double(f[7], "s_W");
        c.sum_time_ns = parse_uint(f[8], "s_time_ns");
        c.validate();
        CellStats& dst = log.cell(nbh, static_cast<std::size_t>(interval));
        if (!dst.empty())
            throw data_error("read_log: duplicate cell row in " + origin +
                             ": '" + row + "'");
        dst = c;
    }
    return log;
}

inline RunLog read_log(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("read_log: cannot open '" + path + "'");
    return read_log(is, path);
}

} // namespace nbprof
