#pragma once

#include <map>
#include <string>
#include <vector>

#include "sgdr/image.hpp"
#include "sgdr/png_writer.hpp"

namespace sgdr {

// One named curve of a line chart.
struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    Color color;
};

void render_line_chart(const std::string& path, const std::string& title,
                       const std::vector<Series>& series, int width = 800, int height = 480);

// Parsed CSV with a header row; columns addressed by name.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    static CsvTable load(const std::string& path);
    std::vector<double> column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

// Grayscale rendering of a [-1, 1] slice.
Canvas image_canvas(const Image2D& img, int scale = 2);

// Structure overlay: MYO blue, LV green, RV red.
void overlay_mask(Canvas& canvas, const SegMask& mask, int scale = 2, double alpha = 0.45);

}  // namespace sgdr
