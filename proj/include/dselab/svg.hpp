#pragma once

#include "dselab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace dselab {

/// Minimal SVG line-plot writer so runs can be inspected without any
/// external plotting dependency.
class SvgPlot {
public:
    struct Series {
        std::string label;
        std::string color;
        std::vector<double> x;
        std::vector<double> y;
    };

    SvgPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(const std::string& label, const std::string& color,
                    const std::vector<double>& x, const std::vector<double>& y) {
        series_.push_back(Series{label, color, x, y});
    }

    void add_hline(double y, const std::string& label, const std::string& color) {
        hlines_.push_back({y, label, color});
    }

    void write(const std::string& path) const {
        const double W = 900, H = 500, ml = 70, mr = 20, mt = 40, mb = 50;
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& s : series_) {
            for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
            for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
        }
        for (const auto& h : hlines_) { ymin = std::min(ymin, h.y); ymax = std::max(ymax, h.y); }
        if (!(xmax > xmin)) { xmax = xmin + 1; }
        if (!(ymax > ymin)) { ymax = ymin + 1; }
        const double ypad = 0.05 * (ymax - ymin);
        ymin -= ypad; ymax += ypad;

        auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
        auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

        std::ofstream out(path, std::ios::binary);
        if (!out) throw ParseError("cannot open for writing: " + path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
            << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
            << title_ << "</text>\n";
        // axes
        out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
            << H - mb << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
            << H - mb << "\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double xv = xmin + i * (xmax - xmin) / 5;
            const double yv = ymin + i * (ymax - ymin) / 5;
            out << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
                << "\" text-anchor=\"middle\">" << round3(xv) << "</text>\n";
            out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
                << "\" text-anchor=\"end\">" << round3(yv) << "</text>\n";
        }
        out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
            << x_label_ << "</text>\n";
        out << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
            << H / 2 << ")\">" << y_label_ << "</text>\n";

        for (const auto& h : hlines_) {
            out << "<line x1=\"" << ml << "\" y1=\"" << py(h.y) << "\" x2=\"" << W - mr
                << "\" y2=\"" << py(h.y) << "\" stroke=\"" << h.color
                << "\" stroke-dasharray=\"6,4\"/>\n";
            out << "<text x=\"" << W - mr - 4 << "\" y=\"" << py(h.y) - 4
                << "\" text-anchor=\"end\" fill=\"" << h.color << "\">" << h.label
                << "</text>\n";
        }

        double legend_y = mt + 6;
        for (const auto& s : series_) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out << px(s.x[i]) << "," << py(s.y[i]) << " ";
            out << "\"/>\n";
            out << "<line x1=\"" << W - mr - 160 << "\" y1=\"" << legend_y << "\" x2=\""
                << W - mr - 130 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << W - mr - 124 << "\" y=\"" << legend_y + 4 << "\">" << s.label
                << "</text>\n";
            legend_y += 16;
        }
        out << "</svg>\n";
    }

private:
    struct HLine {
        double y;
        std::string label;
        std::string color;
    };

    static std::string round3(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return buf;
    }

    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
    std::vector<HLine> hlines_;
};

} // namespace dselab
