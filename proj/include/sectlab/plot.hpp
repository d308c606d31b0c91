#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sectlab {

// Minimal self-drawn line chart, written as a binary PPM. CSV stays the
// canonical artifact; this is a quick visual aid only.

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::array<std::uint8_t, 3> color{0, 0, 0};
};

void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series,
                     const std::string& x_label, const std::string& y_label, double y_min = 0.0,
                     double y_max = 1.0);

}  // namespace sectlab
