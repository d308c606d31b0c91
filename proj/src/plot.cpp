#include "sectlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sectlab/errors.hpp"

namespace sectlab {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 48;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 16;
constexpr int kMarginBottom = 36;

// 5x7 bitmap digits and a few glyphs, enough for axis ticks and legends.
constexpr std::uint8_t kGlyphs[13][7] = {
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
    {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
    {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
    {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
    {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
    {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c},  // .
    {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00},  // -
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // space
};

int glyph_index(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c == '.') return 10;
    if (c == '-') return 11;
    return 12;
}

struct Canvas {
    std::vector<std::uint8_t> rgb;

    Canvas() : rgb(static_cast<std::size_t>(kWidth) * kHeight * 3, 0xff) {}

    void set(int x, int y, std::array<std::uint8_t, 3> c) {
        if (x < 0 || x >= kWidth || y < 0 || y >= kHeight) return;
        auto* p = &rgb[(static_cast<std::size_t>(y) * kWidth + x) * 3];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    void line(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void text(int x, int y, const std::string& s, std::array<std::uint8_t, 3> c) {
        for (char ch : s) {
            const auto& glyph = kGlyphs[glyph_index(ch)];
            for (int r = 0; r < 7; ++r)
                for (int b = 0; b < 5; ++b)
                    if (glyph[r] & (1 << (4 - b))) set(x + b, y + r, c);
            x += 6;
        }
    }
};

std::string format_tick(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series,
                     const std::string&, const std::string&, double y_min, double y_max) {
    Canvas canvas;
    const std::array<std::uint8_t, 3> black{0, 0, 0};
    const std::array<std::uint8_t, 3> gray{0xc8, 0xc8, 0xc8};

    double x_min = 0.0, x_max = 1.0;
    bool have_x = false;
    for (const auto& s : series)
        for (double x : s.x) {
            if (!have_x) {
                x_min = x_max = x;
                have_x = true;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
        }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    const int plot_w = kWidth - kMarginLeft - kMarginRight;
    const int plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) {
        return kMarginLeft + static_cast<int>(std::lround((x - x_min) / (x_max - x_min) * plot_w));
    };
    auto py = [&](double y) {
        return kMarginTop +
               static_cast<int>(std::lround((y_max - y) / (y_max - y_min) * plot_h));
    };

    for (int i = 0; i <= 4; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        canvas.line(kMarginLeft, py(y), kWidth - kMarginRight, py(y), gray);
        canvas.text(4, py(y) - 3, format_tick(y), black);
    }
    canvas.line(kMarginLeft, kMarginTop, kMarginLeft, kHeight - kMarginBottom, black);
    canvas.line(kMarginLeft, kHeight - kMarginBottom, kWidth - kMarginRight,
                kHeight - kMarginBottom, black);
    for (int x = static_cast<int>(std::ceil(x_min)); x <= static_cast<int>(std::floor(x_max));
         ++x) {
        canvas.text(px(x) - 3, kHeight - kMarginBottom + 6, std::to_string(x), black);
    }

    int legend_y = kMarginTop + 4;
    for (const auto& s : series) {
        for (std::size_t i = 1; i < s.x.size(); ++i)
            canvas.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), s.color);
        canvas.line(kWidth - kMarginRight - 90, legend_y + 3, kWidth - kMarginRight - 70,
                    legend_y + 3, s.color);
        canvas.text(kWidth - kMarginRight - 64, legend_y, s.name, black);
        legend_y += 10;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << "P6\n" << kWidth << " " << kHeight << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.rgb.data()),
              static_cast<std::streamsize>(canvas.rgb.size()));
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace sectlab
