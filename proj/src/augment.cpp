#include "sgdr/augment.hpp"

#include <cmath>

#include "sgdr/errors.hpp"

namespace sgdr {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

struct Draws {
    bool flip_h = false;
    bool flip_v = false;
    int rot90_k = 0;
    bool rot_cont = false;
    double angle_deg = 0.0;
};

Draws make_draws(std::uint64_t seed, const AugmentConfig& cfg) {
    Rng rng(seed);
    Draws d;
    d.flip_h = rng.bernoulli(cfg.p_flip_h);
    d.flip_v = rng.bernoulli(cfg.p_flip_v);
    if (rng.bernoulli(cfg.p_rot90)) d.rot90_k = 1 + static_cast<int>(rng.uniform_int(3));
    d.rot_cont = rng.bernoulli(cfg.p_rot_continuous);
    if (d.rot_cont) d.angle_deg = rng.uniform(-cfg.max_angle_deg, cfg.max_angle_deg);
    return d;
}

template <class ImgLike>
void apply_draws(ImgLike& img, const Draws& d, int H, int W) {
    if (d.flip_h) flip_horizontal(img);
    if (d.flip_v) flip_vertical(img);
    if (d.rot90_k > 0 && H == W) {
        for (int k = 0; k < d.rot90_k; ++k) rot90_ccw(img);
    }
    if (d.rot_cont) rotate_continuous(img, d.angle_deg);
}

}  // namespace

void flip_horizontal(Image2D& img) {
    const int H = img.height(), W = img.width();
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W / 2; ++c) std::swap(img.at(r, c), img.at(r, W - 1 - c));
    }
}

void flip_vertical(Image2D& img) {
    const int H = img.height(), W = img.width();
    for (int r = 0; r < H / 2; ++r) {
        for (int c = 0; c < W; ++c) std::swap(img.at(r, c), img.at(H - 1 - r, c));
    }
}

void flip_horizontal(SegMask& m) {
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w / 2; ++c) std::swap(m.at(r, c), m.at(r, m.w - 1 - c));
    }
}

void flip_vertical(SegMask& m) {
    for (int r = 0; r < m.h / 2; ++r) {
        for (int c = 0; c < m.w; ++c) std::swap(m.at(r, c), m.at(m.h - 1 - r, c));
    }
}

// out(r, c) = in(c, N-1-r); maps [[a,b],[c,d]] to [[b,d],[a,c]].
void rot90_ccw(Image2D& img) {
    const int H = img.height(), W = img.width();
    if (H != W) throw ShapeError("rot90: square input required");
    Tensor<float> out({H, W});
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            out[static_cast<std::size_t>(r) * W + c] = img.at(c, W - 1 - r);
        }
    }
    img.pixels = std::move(out);
}

void rot90_ccw(SegMask& m) {
    if (m.h != m.w) throw ShapeError("rot90: square input required");
    std::vector<std::uint8_t> out(m.labels.size());
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w; ++c) {
            out[static_cast<std::size_t>(r) * m.w + c] = m.at(c, m.w - 1 - r);
        }
    }
    m.labels = std::move(out);
}

void rotate_continuous(Image2D& img, double angle_deg) {
    const int H = img.height(), W = img.width();
    const double a = angle_deg * kDegToRad;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cy = (H - 1) * 0.5, cx = (W - 1) * 0.5;
    Tensor<float> out({H, W});
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            // inverse-map the output pixel into the source image
            const double dy = r - cy, dx = c - cx;
            const double sy = ca * dy + sa * dx + cy;
            const double sx = -sa * dy + ca * dx + cx;
            float v = -1.0f;
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            if (y0 >= 0 && y0 + 1 < H && x0 >= 0 && x0 + 1 < W) {
                const double fy = sy - y0, fx = sx - x0;
                const double v00 = img.at(y0, x0), v01 = img.at(y0, x0 + 1);
                const double v10 = img.at(y0 + 1, x0), v11 = img.at(y0 + 1, x0 + 1);
                v = static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                       fy * ((1 - fx) * v10 + fx * v11));
            } else if (y0 >= -1 && y0 < H && x0 >= -1 && x0 < W) {
                // border pixel: clamp to nearest valid sample
                const int yc = std::clamp(static_cast<int>(std::lround(sy)), 0, H - 1);
                const int xc = std::clamp(static_cast<int>(std::lround(sx)), 0, W - 1);
                v = img.at(yc, xc);
            }
            out[static_cast<std::size_t>(r) * W + c] = v;
        }
    }
    img.pixels = std::move(out);
}

void rotate_continuous(SegMask& m, double angle_deg) {
    const int H = m.h, W = m.w;
    const double a = angle_deg * kDegToRad;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cy = (H - 1) * 0.5, cx = (W - 1) * 0.5;
    std::vector<std::uint8_t> out(m.labels.size(), 0);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double dy = r - cy, dx = c - cx;
            const double sy = ca * dy + sa * dx + cy;
            const double sx = -sa * dy + ca * dx + cx;
            const int yn = static_cast<int>(std::lround(sy));
            const int xn = static_cast<int>(std::lround(sx));
            if (yn >= 0 && yn < H && xn >= 0 && xn < W) {
                out[static_cast<std::size_t>(r) * W + c] = m.at(yn, xn);
            }
        }
    }
    m.labels = std::move(out);
}

LabeledSample augment(const LabeledSample& sample, std::uint64_t rng_seed,
                      const AugmentConfig& config) {
    const Draws d = make_draws(rng_seed, config);
    LabeledSample out = sample;
    apply_draws(out.image, d, out.image.height(), out.image.width());
    apply_draws(out.mask, d, out.mask.h, out.mask.w);
    return out;
}

UnlabeledSample augment(const UnlabeledSample& sample, std::uint64_t rng_seed,
                        const AugmentConfig& config) {
    const Draws d = make_draws(rng_seed, config);
    UnlabeledSample out = sample;
    apply_draws(out.image, d, out.image.height(), out.image.width());
    return out;
}

}  // namespace sgdr
