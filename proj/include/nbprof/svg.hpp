#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "nbprof/error.hpp"

namespace nbprof {

/// Minimal static line-chart writer. Output is deterministic: no
/// timestamps, fixed number formatting.
class SvgChart {
public:
    struct Series {
        std::string label;
        std::string color;
        std::vector<double> x;
        std::vector<double> y;
    };

    SvgChart(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)),
          y_label_(std::move(y_label)) {}

    void add_series(Series s) {
        if (s.x.size() != s.y.size())
            throw usage_error("SvgChart: series length mismatch");
        series_.push_back(std::move(s));
    }

    void add_vertical_line(double x, std::string label = {}) {
        vlines_.push_back({x, std::move(label)});
    }

    void add_note(std::string note) { notes_.push_back(std::move(note)); }

    /// Comment embedded at the top of the file (config hash, seed).
    void set_stamp(std::string stamp) { stamp_ = std::move(stamp); }

    void set_y_range(double lo, double hi) {
        y_min_ = lo;
        y_max_ = hi;
        fixed_y_ = true;
    }

    void write(std::ostream& os) const {
        const double width = 720.0, height = 420.0;
        const double ml = 62.0, mr = 18.0, mt = 40.0, mb = 50.0;
        const double pw = width - ml - mr, ph = height - mt - mb;

        double x_min = std::numeric_limits<double>::infinity();
        double x_max = -std::numeric_limits<double>::infinity();
        double y_min = fixed_y_ ? y_min_ : std::numeric_limits<double>::infinity();
        double y_max = fixed_y_ ? y_max_ : -std::numeric_limits<double>::infinity();
        for (const auto& s : series_) {
            for (double v : s.x) {
                x_min = std::min(x_min, v);
                x_max = std::max(x_max, v);
            }
            if (!fixed_y_)
                for (double v : s.y) {
                    y_min = std::min(y_min, v);
                    y_max = std::max(y_max, v);
                }
        }
        for (const auto& [x, label] : vlines_) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
        }
        if (!std::isfinite(x_min)) {
            x_min = 0.0;
            x_max = 1.0;
        }
        if (!std::isfinite(y_min)) {
            y_min = 0.0;
            y_max = 1.0;
        }
        if (x_max == x_min) x_max = x_min + 1.0;
        if (y_max == y_min) y_max = y_min + 1.0;

        const auto px = [&](double x) {
            return ml + (x - x_min) / (x_max - x_min) * pw;
        };
        const auto py = [&](double y) {
            return mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph;
        };
        const auto num = [](double v) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.6g", v);
            return std::string(buf);
        };

        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
           << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
           << height << "\">\n";
        if (!stamp_.empty()) os << "<!-- " << stamp_ << " -->\n";
        os << "<rect width=\"" << width << "\" height=\"" << height
           << "\" fill=\"white\"/>\n";
        os << "<text x=\"" << width / 2
           << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"15\">"
           << escape(title_) << "</text>\n";

        // Axes with 5 ticks per side.
        os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
        for (int t = 0; t <= 4; ++t) {
            const double fx = x_min + (x_max - x_min) * t / 4.0;
            const double fy = y_min + (y_max - y_min) * t / 4.0;
            os << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(mt + ph)
               << "\" x2=\"" << num(px(fx)) << "\" y2=\"" << num(mt + ph + 4)
               << "\" stroke=\"#333\"/>\n";
            os << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(mt + ph + 16)
               << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
            os << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(py(fy))
               << "\" x2=\"" << num(ml) << "\" y2=\"" << num(py(fy))
               << "\" stroke=\"#333\"/>\n";
            os << "<text x=\"" << num(ml - 7) << "\" y=\"" << num(py(fy) + 4)
               << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
        }
        os << "</g>\n";
        os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
           << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"12\">"
           << escape(x_label_) << "</text>\n";
        os << "<text x=\"16\" y=\"" << mt + ph / 2
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"12\" transform=\"rotate(-90 16 "
           << mt + ph / 2 << ")\">" << escape(y_label_) << "</text>\n";

        for (const auto& [x, label] : vlines_) {
            os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(mt)
               << "\" x2=\"" << num(px(x)) << "\" y2=\"" << num(mt + ph)
               << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
            if (!label.empty())
                os << "<text x=\"" << num(px(x) + 3) << "\" y=\""
                   << num(mt + 12)
                   << "\" font-family=\"sans-serif\" font-size=\"10\" "
                      "fill=\"#666\">"
                   << escape(label) << "</text>\n";
        }

        double legend_y = mt + 14.0;
        for (const auto& s : series_) {
            if (s.x.size() == 1) {
                os << "<circle cx=\"" << num(px(s.x[0])) << "\" cy=\""
                   << num(py(s.y[0])) << "\" r=\"3\" fill=\"" << s.color
                   << "\"/>\n";
            } else if (!s.x.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << s.color
                   << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (i) os << ' ';
                    os << num(px(s.x[i])) << ',' << num(py(s.y[i]));
                }
                os << "\"/>\n";
            }
            os << "<rect x=\"" << num(ml + pw - 130) << "\" y=\""
               << num(legend_y - 8) << "\" width=\"10\" height=\"3\" fill=\""
               << s.color << "\"/>\n";
            os << "<text x=\"" << num(ml + pw - 115) << "\" y=\""
               << num(legend_y - 3)
               << "\" font-family=\"sans-serif\" font-size=\"11\">"
               << escape(s.label) << "</text>\n";
            legend_y += 14.0;
        }
        for (const auto& n : notes_) {
            os << "<text x=\"" << num(ml + 8) << "\" y=\"" << num(legend_y - 3)
               << "\" font-family=\"sans-serif\" font-size=\"11\" "
                  "fill=\"#a33\">"
               << escape(n) << "</text>\n";
            legend_y += 14.0;
        }
        os << "</svg>\n";
    }

    void write(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw data_error("SvgChart: cannot open '" + path + "'");
        write(os);
    }

private:
    static std::string escape(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s) {
            switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
            }
        }
        return out;
    }

    std::string title_, x_label_, y_label_, stamp_;
    std::vector<Series> series_;
    std::vector<std::pair<double, std::string>> vlines_;
    std::vector<std::string> notes_;
    double y_min_ = 0.0, y_max_ = 1.0;
    bool fixed_y_ = false;
};

} // namespace nbprof
