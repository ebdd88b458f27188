#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgdr {

struct Color {
    std::uint8_t r = 0, g = 0, b = 0;
};

// Minimal RGB raster with line/text drawing; everything the plot outputs
// need and nothing more.
struct Canvas {
    int w = 0, h = 0;
    std::vector<std::uint8_t> rgb;  // 3 * w * h, row-major

    Canvas() = default;
    Canvas(int width, int height, Color fill = {255, 255, 255});

    void set(int x, int y, Color c);
    void line(int x0, int y0, int x1, int y1, Color c);
    void fill_rect(int x0, int y0, int x1, int y1, Color c);
    // 5x7 bitmap font, uppercased; returns x after the last glyph
    int text(int x, int y, const std::string& s, Color c);
    void blit(const Canvas& src, int x, int y);
};

// Truecolor 8-bit PNG (zlib-compressed, filter 0).
void write_png(const std::string& path, const Canvas& canvas);

}  // namespace sgdr
