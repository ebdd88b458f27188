#include "sgdr/png_writer.hpp"

#include <zlib.h>

#include <cctype>
#include <cstring>
#include <fstream>

#include "sgdr/errors.hpp"

namespace sgdr {

namespace {

// classic 5x7 font, one byte per column, bit 0 = top row
struct Glyph {
    char ch;
    std::uint8_t col[5];
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}},
    {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}}, {'2', {0x42, 0x61, 0x51, 0x49, 0x46}},
    {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}}, {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}},
    {'5', {0x27, 0x45, 0x45, 0x45, 0x39}}, {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}},
    {'7', {0x01, 0x71, 0x09, 0x05, 0x03}}, {'8', {0x36, 0x49, 0x49, 0x49, 0x36}},
    {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}}, {'A', {0x7E, 0x11, 0x11, 0x11, 0x7E}},
    {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}}, {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}},
    {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}}, {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}},
    {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}}, {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}},
    {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}}, {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}},
    {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}}, {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}},
    {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}}, {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}},
    {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}}, {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}},
    {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}}, {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}},
    {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}}, {'S', {0x46, 0x49, 0x49, 0x49, 0x31}},
    {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}}, {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}},
    {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}}, {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}},
    {'X', {0x63, 0x14, 0x08, 0x14, 0x63}}, {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}},
    {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'.', {0x00, 0x60, 0x60, 0x00, 0x00}}, {',', {0x00, 0x50, 0x30, 0x00, 0x00}},
    {':', {0x00, 0x36, 0x36, 0x00, 0x00}}, {'(', {0x00, 0x1C, 0x22, 0x41, 0x00}},
    {')', {0x00, 0x41, 0x22, 0x1C, 0x00}}, {'%', {0x23, 0x13, 0x08, 0x64, 0x62}},
    {'/', {0x20, 0x10, 0x08, 0x04, 0x02}}, {'=', {0x14, 0x14, 0x14, 0x14, 0x14}},
    {'_', {0x40, 0x40, 0x40, 0x40, 0x40}}, {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}},
};

const Glyph* find_glyph(char c) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& g : kFont) {
        if (g.ch == u) return &g;
    }
    return nullptr;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& os, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> len;
    put_be32(len, static_cast<std::uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(len.data()), 4);
    os.write(type, 4);
    if (!data.empty()) os.write(reinterpret_cast<const char*>(data.data()),
                                static_cast<std::streamsize>(data.size()));
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<std::uint8_t> crc_bytes;
    put_be32(crc_bytes, static_cast<std::uint32_t>(crc));
    os.write(reinterpret_cast<const char*>(crc_bytes.data()), 4);
}

}  // namespace

Canvas::Canvas(int width, int height, Color fill) : w(width), h(height) {
    rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill.r;
        rgb[i + 1] = fill.g;
        rgb[i + 2] = fill.b;
    }
}

void Canvas::set(int x, int y, Color c) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
}

void Canvas::line(int x0, int y0, int x1, int y1, Color c) {
    // Bresenham
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
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

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Color c) {
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
}

int Canvas::text(int x, int y, const std::string& s, Color c) {
    for (char ch : s) {
        const Glyph* g = find_glyph(ch);
        if (g) {
            for (int cx = 0; cx < 5; ++cx) {
                for (int cy = 0; cy < 7; ++cy) {
                    if (g->col[cx] & (1u << cy)) set(x + cx, y + cy, c);
                }
            }
        }
        x += 6;
    }
    return x;
}

void Canvas::blit(const Canvas& src, int x, int y) {
    for (int sy = 0; sy < src.h; ++sy) {
        for (int sx = 0; sx < src.w; ++sx) {
            const std::size_t i = (static_cast<std::size_t>(sy) * src.w + sx) * 3;
            set(x + sx, y + sy, {src.rgb[i], src.rgb[i + 1], src.rgb[i + 2]});
        }
    }
}

void write_png(const std::string& path, const Canvas& canvas) {
    if (canvas.w <= 0 || canvas.h <= 0) throw ValueError("write_png: empty canvas");
    // raw stream: one filter byte (0) per scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(canvas.h) * (canvas.w * 3 + 1));
    for (int y = 0; y < canvas.h; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = canvas.rgb.data() + static_cast<std::size_t>(y) * canvas.w * 3;
        raw.insert(raw.end(), row, row + canvas.w * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) !=
        Z_OK) {
        throw IoError("write_png: deflate failed");
    }
    compressed.resize(bound);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("write_png: cannot open " + path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(canvas.w));
    put_be32(ihdr, static_cast<std::uint32_t>(canvas.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(os, "IHDR", ihdr);
    write_chunk(os, "IDAT", compressed);
    write_chunk(os, "IEND", {});
    if (!os) throw IoError("write_png: write failed for " + path);
}

}  // namespace sgdr
