#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fgt2m {

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Self-contained SVG line chart with axes and a legend. Series with no
// points are skipped.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<ChartSeries>& series, int width = 720, int height = 420);

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::vector<ChartSeries>& series);

} // namespace fgt2m
