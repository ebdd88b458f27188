#include "sgdr/preprocess.hpp"

#include <algorithm>

#include "sgdr/errors.hpp"

namespace sgdr {

Image2D normalize_intensity(const Tensor<float>& raw, float lo, float hi, Spacing spacing,
                            Domain domain) {
    if (!(hi > lo)) throw ValueError("normalize_intensity: hi must exceed lo");
    if (raw.ndim() != 2) throw ShapeError("normalize_intensity: expected H x W grid");
    Image2D img;
    img.pixels = raw;
    img.spacing = spacing;
    img.domain = domain;
    const float inv = 2.0f / (hi - lo);
    for (auto& v : img.pixels.data) {
        v = std::clamp(v, lo, hi);
        v = (v - lo) * inv - 1.0f;
    }
    return img;
}

Tensor<float> one_hot(const SegMask& mask, int num_classes) {
    const std::size_t hw = mask.labels.size();
    Tensor<float> out({num_classes, mask.h, mask.w});
    for (std::size_t i = 0; i < hw; ++i) {
        const int v = mask.labels[i];
        if (v >= num_classes) throw ValueError("one_hot: label out of range");
        out[static_cast<std::size_t>(v) * hw + i] = 1.0f;
    }
    return out;
}

SegMask argmax_mask(const Tensor<float>& probs, Spacing spacing) {
    if (probs.ndim() != 3) throw ShapeError("argmax_mask: expected K x H x W");
    const int K = probs.dim(0), H = probs.dim(1), W = probs.dim(2);
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    SegMask m;
    m.h = H;
    m.w = W;
    m.spacing = spacing;
    m.labels.resize(hw);
    for (std::size_t i = 0; i < hw; ++i) {
        int best = 0;
        float bv = probs[i];
        for (int k = 1; k < K; ++k) {
            const float v = probs[static_cast<std::size_t>(k) * hw + i];
            if (v > bv) {
                bv = v;
                best = k;
            }
        }
        m.labels[i] = static_cast<std::uint8_t>(best);
    }
    return m;
}

}  // namespace sgdr
