#pragma once

#include "sgdr/image.hpp"

namespace sgdr {

// Affine intensity windowing: clip raw values to [lo, hi], then map the
// window to [-1, 1]. Monotone non-decreasing in the raw value.
Image2D normalize_intensity(const Tensor<float>& raw, float lo, float hi,
                            Spacing spacing = {}, Domain domain = Domain::Source);

// Channel k is the indicator of label k; channels sum to 1 at every pixel.
Tensor<float> one_hot(const SegMask& mask, int num_classes);

template <class T>
Tensor<T> one_hot_as(const SegMask& mask, int num_classes) {
    return one_hot(mask, num_classes).template cast<T>();
}

// Inverse of one_hot up to ties: channel argmax at every pixel.
SegMask argmax_mask(const Tensor<float>& probs, Spacing spacing);

}  // namespace sgdr
