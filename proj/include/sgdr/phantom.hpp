#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sgdr/image.hpp"

namespace sgdr {

// Rendering style of one synthetic modality. The lookup curve maps per-class
// base intensities to rendered intensities; control-point x values must be
// strictly increasing (the curve is a function), the y values are free, which
// is what lets the two modalities order tissue classes differently.
struct StyleParams {
    std::vector<std::pair<double, double>> intensity_lookup;
    double noise_sigma = 0.0;
    double bias_field_strength = 0.0;

    double eval(double x) const;
    void validate() const;
};

// Base intensities assigned to {BG, MYO, LV, RV} before styling.
constexpr double kClassBase[kNumClasses] = {0.125, 0.375, 0.625, 0.875};

struct PhantomSpec {
    int image_size = 64;
    int num_source = 40;
    int num_target = 40;
    int num_eval_target = 10;
    std::uint64_t anatomy_seed = 7;
    Spacing spacing{1.0, 1.0};
    StyleParams source_style;
    StyleParams target_style;

    // Source renders an increasing intensity ramp over {BG, MYO, LV, RV};
    // the target swaps the MYO/LV ordering and uses a stronger bias field,
    // so a source-trained segmenter measurably fails on target images.
    static PhantomSpec defaults();
};

// Random cardiac-like geometry: an LV disc, a MYO annulus around it and an
// adjacent RV crescent. Deterministic in (seed, size); degenerate draws are
// resampled internally and never emitted.
SegMask generate_anatomy(std::uint64_t seed, int size);

// Styled rendering of a label map: lookup intensities, smooth multiplicative
// bias field, Gaussian noise, then normalization to [-1, 1].
Image2D render_modality(const SegMask& mask, const StyleParams& style, std::uint64_t seed,
                        Domain domain);

// 1-Wasserstein distance between intensity histograms of two image sets,
// measured on 64 bins over [-1, 1]. Used to certify the domain gap.
double histogram_wasserstein(const std::vector<Image2D>& a, const std::vector<Image2D>& b,
                             int bins = 64);

}  // namespace sgdr
