#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sgdr/rng.hpp"
#include "sgdr/tensor.hpp"

namespace sgdr {

constexpr int kStyleDim = 8;
constexpr int kNumClasses = 4;  // background, MYO, LV, RV

enum class Domain : std::uint8_t { Source = 0, Target = 1 };

enum class SegClass : std::uint8_t { Background = 0, Myo = 1, Lv = 2, Rv = 3 };

inline const char* class_name(int k) {
    static const char* names[kNumClasses] = {"BG", "MYO", "LV", "RV"};
    return (k >= 0 && k < kNumClasses) ? names[k] : "?";
}

struct Spacing {
    double row_mm = 1.0;
    double col_mm = 1.0;

    bool operator==(const Spacing&) const = default;
};

// Single-channel intensity slice. Pixels are expected in [-1, 1] once they
// have passed through normalize_intensity; H and W must be divisible by 4 to
// survive the encoder/decoder resolution ladder.
struct Image2D {
    Tensor<float> pixels;  // [H, W]
    Spacing spacing;
    Domain domain = Domain::Source;

    int height() const { return pixels.ndim() == 2 ? pixels.dim(0) : 0; }
    int width() const { return pixels.ndim() == 2 ? pixels.dim(1) : 0; }

    float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width() + c]; }
    float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width() + c]; }
};

// Integer label map over {0=background, 1=MYO, 2=LV, 3=RV}.
struct SegMask {
    std::vector<std::uint8_t> labels;  // row-major [H, W]
    int h = 0;
    int w = 0;
    Spacing spacing;

    std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * w + c]; }
    std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * w + c]; }

    bool valid_labels() const {
        for (auto v : labels) {
            if (v >= kNumClasses) return false;
        }
        return true;
    }

    std::array<std::size_t, kNumClasses> histogram() const {
        std::array<std::size_t, kNumClasses> h{};
        for (auto v : labels) {
            if (v < kNumClasses) ++h[v];
        }
        return h;
    }
};

// 8-dimensional Gaussian style posterior plus one recorded reparameterized
// draw. The noise vector is kept so the draw is reproducible.
struct StyleCode {
    std::array<double, kStyleDim> mean{};
    std::array<double, kStyleDim> log_variance{};
    std::array<double, kStyleDim> sample{};
    std::array<double, kStyleDim> noise{};

    static StyleCode draw(const std::array<double, kStyleDim>& mean,
                          const std::array<double, kStyleDim>& log_variance, Rng& rng) {
        StyleCode c;
        c.mean = mean;
        c.log_variance = log_variance;
        for (int i = 0; i < kStyleDim; ++i) {
            c.noise[static_cast<std::size_t>(i)] = rng.normal();
            c.sample[static_cast<std::size_t>(i)] =
                mean[static_cast<std::size_t>(i)] +
                std::exp(0.5 * log_variance[static_cast<std::size_t>(i)]) *
                    c.noise[static_cast<std::size_t>(i)];
        }
        return c;
    }
};

// Domain-invariant spatial features at the shared bottleneck (h = H/4).
struct ContentMap {
    Tensor<float> features;  // [C, h, w]
};

struct LabeledSample {
    Image2D image;
    SegMask mask;
};

struct UnlabeledSample {
    Image2D image;
};

}  // namespace sgdr
