#include "fgt2m/svg.hpp"
#include "fgt2m/binio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fgt2m {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<ChartSeries>& series, int width, int height) {
    const double ml = 64, mr = 16, mt = 34, mb = 44; // margins
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) { // nothing to draw
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
    auto sy = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
           std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" + title + "</text>\n";

    // axes with 5 ticks per direction
    svg += "<g stroke=\"#444\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"10\">\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) + "\" y2=\"" +
           fmt(mt + ph) + "\"/>\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(ml + pw) + "\" y2=\"" +
           fmt(mt + ph) + "\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = xmin + (xmax - xmin) * k / 5.0;
        const double fy = ymin + (ymax - ymin) * k / 5.0;
        svg += "<line x1=\"" + fmt(sx(fx)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(sx(fx)) +
               "\" y2=\"" + fmt(mt + ph + 4) + "\"/>\n";
        svg += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(mt + ph + 16) +
               "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#444\">" + fmt(fx) + "</text>\n";
        svg += "<line x1=\"" + fmt(ml - 4) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" + fmt(ml) + "\" y2=\"" +
               fmt(sy(fy)) + "\"/>\n";
        svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(sy(fy) + 3) +
               "\" text-anchor=\"end\" stroke=\"none\" fill=\"#444\">" + fmt(fy) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(mt + ph + 34) +
           "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#444\">" + x_label + "</text>\n";
    svg += "</g>\n";

    int color = 0;
    double legend_y = mt + 6;
    for (const auto& s : series) {
        if (s.points.empty()) continue;
        const char* stroke = kPalette[color % 6];
        std::string path = "M";
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            path += " " + fmt(sx(s.points[i].first)) + " " + fmt(sy(s.points[i].second));
            if (i == 0) path += " L";
        }
        svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\"/>\n";
        svg += "<rect x=\"" + fmt(ml + pw - 120) + "\" y=\"" + fmt(legend_y - 8) +
               "\" width=\"10\" height=\"10\" fill=\"" + stroke + "\"/>\n";
        svg += "<text x=\"" + fmt(ml + pw - 106) + "\" y=\"" + fmt(legend_y + 1) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.name + "</text>\n";
        legend_y += 16;
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::vector<ChartSeries>& series) {
    atomic_write_file(path, render_line_chart(title, x_label, series));
}

} // namespace fgt2m
