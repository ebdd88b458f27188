#pragma once

#include <cstdint>

#include "sgdr/image.hpp"

namespace sgdr {

// Spatial augmentation: flips, exact 90-degree rotations (square inputs),
// and a small continuous rotation. Image and mask always receive the same
// transform; the mask is resampled nearest-neighbor.
struct AugmentConfig {
    double p_flip_h = 0.5;
    double p_flip_v = 0.5;
    double p_rot90 = 0.5;
    double p_rot_continuous = 0.25;
    double max_angle_deg = 15.0;

    static AugmentConfig disabled() { return {0.0, 0.0, 0.0, 0.0, 15.0}; }
};

LabeledSample augment(const LabeledSample& sample, std::uint64_t rng_seed,
                      const AugmentConfig& config);
UnlabeledSample augment(const UnlabeledSample& sample, std::uint64_t rng_seed,
                        const AugmentConfig& config);

// Exposed for direct use in tests.
void flip_horizontal(Image2D& img);
void flip_vertical(Image2D& img);
void rot90_ccw(Image2D& img);  // square inputs only
void flip_horizontal(SegMask& m);
void flip_vertical(SegMask& m);
void rot90_ccw(SegMask& m);
void rotate_continuous(Image2D& img, double angle_deg);  // bilinear, fill -1
void rotate_continuous(SegMask& m, double angle_deg);    // nearest, fill 0

}  // namespace sgdr
