#include "sgdr/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgdr/errors.hpp"

namespace sgdr {

CsvTable CsvTable::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw IoError("csv: empty file " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() == t.columns.size()) t.rows.push_back(std::move(row));
    }
    return t;
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValueError("csv: no column " + name);
    const std::size_t idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[idx]);
    return out;
}

void render_line_chart(const std::string& path, const std::string& title,
                       const std::vector<Series>& series, int width, int height) {
    if (series.empty()) throw ValueError("render_line_chart: no series");
    const int ml = 60, mr = 20, mt = 30, mb = 40;  // margins
    Canvas cv(width, height);

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double x : s.xs) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        for (double y : s.ys) {
            if (!std::isfinite(y)) continue;
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const Color axis{60, 60, 60};
    const Color grid{225, 225, 225};
    auto px = [&](double x) {
        return ml + static_cast<int>((x - xmin) / (xmax - xmin) * (width - ml - mr));
    };
    auto py = [&](double y) {
        return height - mb - static_cast<int>((y - ymin) / (ymax - ymin) * (height - mt - mb));
    };

    char buf[64];
    for (int i = 0; i <= 4; ++i) {
        const double y = ymin + (ymax - ymin) * i / 4.0;
        cv.line(ml, py(y), width - mr, py(y), grid);
        std::snprintf(buf, sizeof(buf), "%.3g", y);
        cv.text(4, py(y) - 3, buf, axis);
    }
    for (int i = 0; i <= 4; ++i) {
        const double x = xmin + (xmax - xmin) * i / 4.0;
        std::snprintf(buf, sizeof(buf), "%.3g", x);
        cv.text(px(x) - 8, height - mb + 8, buf, axis);
    }
    cv.line(ml, mt, ml, height - mb, axis);
    cv.line(ml, height - mb, width - mr, height - mb, axis);
    cv.text(ml, 10, title, {0, 0, 0});

    int legend_x = ml + 8;
    for (const auto& s : series) {
        for (std::size_t i = 1; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i - 1]) || !std::isfinite(s.ys[i])) continue;
            cv.line(px(s.xs[i - 1]), py(s.ys[i - 1]), px(s.xs[i]), py(s.ys[i]), s.color);
        }
        cv.fill_rect(legend_x, mt + 2, legend_x + 10, mt + 8, s.color);
        legend_x = cv.text(legend_x + 14, mt + 2, s.label, axis) + 12;
    }
    write_png(path, cv);
}

Canvas image_canvas(const Image2D& img, int scale) {
    const int H = img.height(), W = img.width();
    Canvas cv(W * scale, H * scale);
    for (int y = 0; y < H * scale; ++y) {
        for (int x = 0; x < W * scale; ++x) {
            const float v = img.at(y / scale, x / scale);
            const auto g = static_cast<std::uint8_t>(
                std::clamp((static_cast<double>(v) + 1.0) * 0.5 * 255.0, 0.0, 255.0));
            cv.set(x, y, {g, g, g});
        }
    }
    return cv;
}

void overlay_mask(Canvas& canvas, const SegMask& mask, int scale, double alpha) {
    // MYO blue, LV green, RV red
    static const Color colors[kNumClasses] = {
        {0, 0, 0}, {40, 80, 255}, {40, 220, 60}, {235, 50, 40}};
    for (int y = 0; y < mask.h * scale; ++y) {
        for (int x = 0; x < mask.w * scale; ++x) {
            const std::uint8_t cls = mask.at(y / scale, x / scale);
            if (cls == 0) continue;
            const Color c = colors[cls];
            const std::size_t i = (static_cast<std::size_t>(y) * canvas.w + x) * 3;
            if (i + 2 >= canvas.rgb.size()) continue;
            canvas.rgb[i] = static_cast<std::uint8_t>(canvas.rgb[i] * (1 - alpha) + c.r * alpha);
            canvas.rgb[i + 1] =
                static_cast<std::uint8_t>(canvas.rgb[i + 1] * (1 - alpha) + c.g * alpha);
            canvas.rgb[i + 2] =
                static_cast<std::uint8_t>(canvas.rgb[i + 2] * (1 - alpha) + c.b * alpha);
        }
    }
}

}  // namespace sgdr
