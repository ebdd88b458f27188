#include "sgdr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "sgdr/errors.hpp"
#include "sgdr/preprocess.hpp"

namespace sgdr {

double StyleParams::eval(double x) const {
    const auto& pts = intensity_lookup;
    if (pts.empty()) throw ValueError("StyleParams: empty intensity lookup");
    if (x <= pts.front().first) return pts.front().second;
    if (x >= pts.back().first) return pts.back().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
            const double t = (x - pts[i - 1].first) / (pts[i].first - pts[i - 1].first);
            return pts[i - 1].second + t * (pts[i].second - pts[i - 1].second);
        }
    }
    return pts.back().second;
}

void StyleParams::validate() const {
    if (intensity_lookup.empty()) throw ValueError("StyleParams: empty intensity lookup");
    for (std::size_t i = 1; i < intensity_lookup.size(); ++i) {
        if (!(intensity_lookup[i].first > intensity_lookup[i - 1].first)) {
            throw ValueError("StyleParams: lookup x values must increase strictly");
        }
    }
    if (noise_sigma < 0 || bias_field_strength < 0) {
        throw ValueError("StyleParams: negative noise or bias strength");
    }
}

PhantomSpec PhantomSpec::defaults() {
    PhantomSpec s;
    s.source_style.intensity_lookup = {
        {kClassBase[0], 0.10}, {kClassBase[1], 0.40}, {kClassBase[2], 0.65}, {kClassBase[3], 0.90}};
    s.source_style.noise_sigma = 0.03;
    s.source_style.bias_field_strength = 0.08;
    s.target_style.intensity_lookup = {
        {kClassBase[0], 0.30}, {kClassBase[1], 0.75}, {kClassBase[2], 0.20}, {kClassBase[3], 0.70}};
    s.target_style.noise_sigma = 0.05;
    s.target_style.bias_field_strength = 0.20;
    return s;
}

namespace {

// 4-connectivity check for one label value.
bool connected_4(const SegMask& m, std::uint8_t label) {
    const int H = m.h, W = m.w;
    int total = 0;
    int sy = -1, sx = -1;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (m.at(y, x) == label) {
                ++total;
                if (sy < 0) {
                    sy = y;
                    sx = x;
                }
            }
        }
    }
    if (total == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(H) * W, 0);
    std::queue<std::pair<int, int>> q;
    q.push({sy, sx});
    seen[static_cast<std::size_t>(sy) * W + sx] = 1;
    int found = 0;
    const int dy[4] = {-1, 1, 0, 0};
    const int dx[4] = {0, 0, -1, 1};
    while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop();
        ++found;
        for (int k = 0; k < 4; ++k) {
            const int ny = y + dy[k], nx = x + dx[k];
            if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
            const std::size_t idx = static_cast<std::size_t>(ny) * W + nx;
            if (!seen[idx] && m.at(ny, nx) == label) {
                seen[idx] = 1;
                q.push({ny, nx});
            }
        }
    }
    return found == total;
}

struct Geometry {
    double cy, cx;       // heart center
    double r_lv, r_myo;  // LV radius, outer MYO radius (ellipse-frame)
    double ecc;          // x-axis stretch
    double rot;          // ellipse orientation
    double rv_cy, rv_cx; // RV disc center
    double r_rv;
};

// Ellipse-frame distance from the heart center.
double ellipse_dist(const Geometry& g, double y, double x) {
    const double dy = y - g.cy, dx = x - g.cx;
    const double ca = std::cos(g.rot), sa = std::sin(g.rot);
    const double ex = (ca * dx + sa * dy) / g.ecc;
    const double ey = -sa * dx + ca * dy;
    return std::hypot(ex, ey);
}

SegMask paint(const Geometry& g, int size, Spacing spacing) {
    SegMask m;
    m.h = size;
    m.w = size;
    m.spacing = spacing;
    m.labels.assign(static_cast<std::size_t>(size) * size, 0);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double de = ellipse_dist(g, y, x);
            std::uint8_t v = 0;
            if (de <= g.r_lv) {
                v = static_cast<std::uint8_t>(SegClass::Lv);
            } else if (de <= g.r_myo) {
                v = static_cast<std::uint8_t>(SegClass::Myo);
            } else if (std::hypot(y - g.rv_cy, x - g.rv_cx) <= g.r_rv) {
                v = static_cast<std::uint8_t>(SegClass::Rv);
            }
            m.at(y, x) = v;
        }
    }
    return m;
}

bool validate_mask(const SegMask& m) {
    const auto h = m.histogram();
    // every structure present and not vanishingly small
    if (h[1] < 8 || h[2] < 8 || h[3] < 8) return false;
    // nothing may touch the image border
    for (int x = 0; x < m.w; ++x) {
        if (m.at(0, x) != 0 || m.at(m.h - 1, x) != 0) return false;
    }
    for (int y = 0; y < m.h; ++y) {
        if (m.at(y, 0) != 0 || m.at(y, m.w - 1) != 0) return false;
    }
    for (std::uint8_t label = 1; label < kNumClasses; ++label) {
        if (!connected_4(m, label)) return false;
    }
    return true;
}

}  // namespace

SegMask generate_anatomy(std::uint64_t seed, int size) {
    if (size < 32) throw ValueError("generate_anatomy: size must be >= 32");
    for (int attempt = 0; attempt < 128; ++attempt) {
        Rng rng = Rng::derive(seed, 0xa11a70u, static_cast<std::uint64_t>(attempt));
        Geometry g;
        g.cy = size * (0.5 + rng.uniform(-0.07, 0.07));
        g.cx = size * (0.5 + rng.uniform(-0.07, 0.07));
        g.r_lv = size * rng.uniform(0.10, 0.18);
        const double thickness = std::max(2.5, size * rng.uniform(0.045, 0.075));
        g.r_myo = g.r_lv + thickness;
        g.ecc = rng.uniform(0.85, 1.18);
        g.rot = rng.uniform(0.0, 6.283185307179586);
        g.r_rv = g.r_lv * rng.uniform(0.70, 1.05);
        const double phi = rng.uniform(0.0, 6.283185307179586);
        // place the RV disc just outside the MYO ring along direction phi
        const double uy = std::sin(phi), ux = std::cos(phi);
        const double ca = std::cos(g.rot), sa = std::sin(g.rot);
        const double tx = (ca * ux + sa * uy) / g.ecc;
        const double ty = -sa * ux + ca * uy;
        const double boundary_r = g.r_myo / std::hypot(tx, ty);
        const double d0 = boundary_r + 0.45 * g.r_rv;
        g.rv_cy = g.cy + d0 * uy;
        g.rv_cx = g.cx + d0 * ux;

        SegMask m = paint(g, size, Spacing{1.0, 1.0});
        if (validate_mask(m)) return m;
    }
    throw ValueError("generate_anatomy: no valid geometry after 128 attempts");
}

Image2D render_modality(const SegMask& mask, const StyleParams& style, std::uint64_t seed,
                        Domain domain) {
    style.validate();
    const int H = mask.h, W = mask.w;
    Rng rng = Rng::derive(seed, 0x5e11u);

    // two low-frequency cosine waves make a smooth bias pattern in [-1, 1]
    const double f1y = rng.uniform(0.7, 1.6), f1x = rng.uniform(0.7, 1.6);
    const double f2y = rng.uniform(0.7, 1.6), f2x = rng.uniform(0.7, 1.6);
    const double p1 = rng.uniform(0.0, 6.283185307179586);
    const double p2 = rng.uniform(0.0, 6.283185307179586);

    Tensor<float> raw({H, W});
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double ny = static_cast<double>(y) / H;
            const double nx = static_cast<double>(x) / W;
            const double bias =
                0.5 * (std::cos(3.14159265358979 * (f1y * ny + f1x * nx) + p1) +
                       std::cos(3.14159265358979 * (f2y * ny - f2x * nx) + p2));
            const double base = kClassBase[mask.at(y, x)];
            double v = style.eval(base);
            v *= 1.0 + style.bias_field_strength * bias;
            v += style.noise_sigma * rng.normal();
            raw[static_cast<std::size_t>(y) * W + x] =
                static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return normalize_intensity(raw, 0.0f, 1.0f, mask.spacing, domain);
}

double histogram_wasserstein(const std::vector<Image2D>& a, const std::vector<Image2D>& b,
                             int bins) {
    if (a.empty() || b.empty()) throw ValueError("histogram_wasserstein: empty image set");
    auto hist = [bins](const std::vector<Image2D>& imgs) {
        std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
        std::size_t n = 0;
        for (const auto& img : imgs) {
            for (float v : img.pixels.data) {
                int bin = static_cast<int>((static_cast<double>(v) + 1.0) * 0.5 * bins);
                bin = std::clamp(bin, 0, bins - 1);
                h[static_cast<std::size_t>(bin)] += 1.0;
                ++n;
            }
        }
        for (auto& v : h) v /= static_cast<double>(n);
        return h;
    };
    const auto ha = hist(a), hb = hist(b);
    // W1 = integral of |CDF_a - CDF_b| over the intensity range [-1, 1]
    const double bin_width = 2.0 / bins;
    double cdf_a = 0.0, cdf_b = 0.0, dist = 0.0;
    for (int i = 0; i < bins; ++i) {
        cdf_a += ha[static_cast<std::size_t>(i)];
        cdf_b += hb[static_cast<std::size_t>(i)];
        dist += std::abs(cdf_a - cdf_b) * bin_width;
    }
    return dist;
}

}  // namespace sgdr
