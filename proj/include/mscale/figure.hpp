#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mscale/multiscale_test.hpp"
#include "mscale/stats_core.hpp"

namespace mscale {

/// Optional auxiliary series drawn in its own panel between the smoothed
/// trends and the interval panel.
struct OverlaySeries {
    std::string label;
    std::vector<double> values;
};

struct FigureOptions {
    int width = 820;
    int panel_height = 190;
    int bandwidth_days = 7;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/*
 * Each panel occupies a band of the canvas:
 *
 *   top ---------------------------------------------
 *        title
 *        +----------- plot area (x: days 0..T) ----+
 *        |                                         |
 *        +-----------------------------------------+
 *   top + panel_height ------------------------------
 */
class PanelFrame {
public:
    PanelFrame(double left, double top, double width, double height, int T)
        : left_(left), top_(top + 22.0), width_(width), height_(height - 44.0), T_(T) {}

    [[nodiscard]] double x(double day) const { return left_ + width_ * day / static_cast<double>(T_); }
    [[nodiscard]] double y(double v, double lo, double hi) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return top_ + height_ * (1.0 - (v - lo) / span);
    }
    [[nodiscard]] double top() const { return top_; }
    [[nodiscard]] double bottom() const { return top_ + height_; }
    [[nodiscard]] double left() const { return left_; }
    [[nodiscard]] double right() const { return left_ + width_; }
    [[nodiscard]] double height() const { return height_; }

    void axes(std::ostringstream& os, const std::string& title, double lo, double hi) const {
        os << "  <text class=\"title\" x=\"" << num(left_) << "\" y=\"" << num(top_ - 8) << "\">" << xml_escape(title)
           << "</text>\n";
        os << "  <rect class=\"frame\" x=\"" << num(left_) << "\" y=\"" << num(top_) << "\" width=\"" << num(width_)
           << "\" height=\"" << num(height_) << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"0.8\"/>\n";
        const int step = T_ > 70 ? 20 : (T_ > 30 ? 10 : 5);
        for (int d = 0; d <= T_; d += step) {
            os << "  <text class=\"tick\" x=\"" << num(x(d)) << "\" y=\"" << num(bottom() + 14)
               << "\" text-anchor=\"middle\">" << d << "</text>\n";
        }
        if (hi > lo) {
            os << "  <text class=\"tick\" x=\"" << num(left_ - 6) << "\" y=\"" << num(top_ + 4)
               << "\" text-anchor=\"end\">" << num(hi) << "</text>\n";
            os << "  <text class=\"tick\" x=\"" << num(left_ - 6) << "\" y=\"" << num(bottom())
               << "\" text-anchor=\"end\">" << num(lo) << "</text>\n";
        }
    }

    void polyline(std::ostringstream& os, const std::vector<double>& v, double lo, double hi,
                  const char* colour) const {
        os << "  <polyline class=\"series\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.3\" points=\"";
        for (std::size_t t = 0; t < v.size(); ++t) {
            if (t) os << ' ';
            os << num(x(static_cast<double>(t) + 0.5)) << ',' << num(y(v[t], lo, hi));
        }
        os << "\"/>\n";
    }

private:
    double left_;
    double top_;
    double width_;
    double height_;
    int T_;
};

inline std::pair<double, double> value_range(std::initializer_list<const std::vector<double>*> series) {
    double lo = 0.0;
    double hi = 0.0;
    for (const auto* s : series)
        for (double v : *s) hi = std::max(hi, v), lo = std::min(lo, v);
    if (hi <= lo) hi = lo + 1.0;
    return {lo, hi};
}

} // namespace detail

/// Stacked panels for one compared pair: observed counts, smoothed trends,
/// an optional overlay, and the rejected intervals drawn as grey bars (one row
/// per interval length) with minimal intervals outlined in black.
inline std::string render_figure(const PairResult& pair, const CountSeries& first, const CountSeries& second,
                                 const std::optional<OverlaySeries>& overlay = std::nullopt,
                                 const FigureOptions& opt = {}) {
    const int T = first.T();
    const int panels = overlay ? 4 : 3;
    const double left = 70.0;
    const double plot_width = opt.width - left - 30.0;
    const int height = panels * opt.panel_height + 30;
    const char* colour_first = "#1f4e9c";
    const char* colour_second = "#c0392b";

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << opt.width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << opt.width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "  <rect x=\"0\" y=\"0\" width=\"" << opt.width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    const std::string a = detail::xml_escape(first.id);
    const std::string b = detail::xml_escape(second.id);
    os << "  <text class=\"legend\" x=\"" << detail::num(left) << "\" y=\"16\"><tspan fill=\"" << colour_first
       << "\">" << a << "</tspan> vs <tspan fill=\"" << colour_second << "\">" << b << "</tspan></text>\n";

    int slot = 0;
    auto next_frame = [&] { return detail::PanelFrame(left, 20.0 + slot++ * opt.panel_height, plot_width, opt.panel_height, T); };

    {
        const auto f = next_frame();
        const auto [lo, hi] = detail::value_range({&first.values, &second.values});
        f.axes(os, "(a) observed daily counts", lo, hi);
        f.polyline(os, first.values, lo, hi, colour_first);
        f.polyline(os, second.values, lo, hi, colour_second);
    }
    {
        const auto f = next_frame();
        const auto s1 = smooth_trend(first.values, opt.bandwidth_days);
        const auto s2 = smooth_trend(second.values, opt.bandwidth_days);
        const auto [lo, hi] = detail::value_range({&s1, &s2});
        f.axes(os, "(b) smoothed trends (rectangular kernel, " + std::to_string(opt.bandwidth_days) + "-day bandwidth)",
               lo, hi);
        f.polyline(os, s1, lo, hi, colour_first);
        f.polyline(os, s2, lo, hi, colour_second);
    }
    if (overlay) {
        const auto f = next_frame();
        const auto [lo, hi] = detail::value_range({&overlay->values});
        f.axes(os, "(c) " + overlay->label, lo, hi);
        f.polyline(os, overlay->values, lo, hi, "#555555");
    }
    {
        const auto f = next_frame();
        f.axes(os, std::string(overlay ? "(d)" : "(c)") + " rejected intervals (outlined: minimal)", 0.0, 0.0);
        std::set<int> lengths;
        for (const auto& iv : pair.rejected) lengths.insert(iv.length_days);
        if (pair.rejected.empty()) {
            os << "  <text class=\"caption\" x=\"" << detail::num((f.left() + f.right()) / 2) << "\" y=\""
               << detail::num(f.top() + f.height() / 2) << "\" text-anchor=\"middle\">no rejected intervals</text>\n";
        }
        const std::vector<int> rows(lengths.begin(), lengths.end());
        const double row_h = rows.empty() ? 0.0 : f.height() / static_cast<double>(rows.size());
        for (const auto& iv : pair.rejected) {
            const auto row = static_cast<std::size_t>(std::find(rows.begin(), rows.end(), iv.length_days) - rows.begin());
            const bool minimal = std::find(pair.minimal.begin(), pair.minimal.end(), iv) != pair.minimal.end();
            const double y = f.top() + row_h * static_cast<double>(row) + row_h * 0.2;
            os << "  <rect class=\"" << (minimal ? "bar minimal" : "bar") << "\" x=\""
               << detail::num(f.x(iv.start_day - 1)) << "\" y=\"" << detail::num(y) << "\" width=\""
               << detail::num(f.x(iv.end_day()) - f.x(iv.start_day - 1)) << "\" height=\"" << detail::num(row_h * 0.6)
               << "\" fill=\"#b0b0b0\" fill-opacity=\"0.6\"";
            if (minimal) os << " stroke=\"black\" stroke-width=\"1.2\"";
            os << "><title>days " << iv.start_day << "-" << iv.end_day() << "</title></rect>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace mscale
