#pragma once

#include <cmath>

#include "sgdr/image.hpp"
#include "sgdr/modules.hpp"

namespace sgdr {

// Architecture configuration. The channel ladder is expressed relative to a
// base width of 64 so that width_multiplier = 1.0 is the full-size model and
// 0.25 the desk-scale default.
struct NetworkSpec {
    double width_multiplier = 0.25;
    int image_size = 64;
    int style_dim = kStyleDim;
    int num_classes = kNumClasses;
    int shared_layers = 3;
    int base_channels = 64;
    // No-adaptation baseline: the target content encoder aliases the source
    // encoder entirely, i.e. the source model is applied to target images
    // directly.
    bool share_full_content_encoder = false;
    bool style_encoder_instance_norm = true;

    int base() const {
        return std::max(2, static_cast<int>(std::lround(base_channels * width_multiplier)));
    }
    int bottleneck_channels() const { return 4 * base(); }
};

// --------------------------------------------------------------------------
// content encoder: 6 convolutions (two stride-2 downsamplings) + 8 residual
// blocks at the bottleneck; the trailing `shared_layers` blocks are shared
// across the two domain encoders.
// --------------------------------------------------------------------------
template <class T>
struct ContentEncoder {
    std::vector<ConvBlock<T>> convs;
    std::vector<ResBlock<T>> res;

    ContentEncoder() = default;
    ContentEncoder(ParamRegistry<T>& reg, const std::string& name, const NetworkSpec& spec,
                   Rng& rng, const ContentEncoder<T>* share_tail_of = nullptr) {
        const int b = spec.base();
        convs.emplace_back(reg, name + ".conv1", 1, b, 7, 1, 3, true, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv2", b, 2 * b, 3, 2, 1, true, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv3", 2 * b, 4 * b, 3, 2, 1, true, Act::Relu, rng);
        for (int i = 4; i <= 6; ++i) {
            convs.emplace_back(reg, name + ".conv" + std::to_string(i), 4 * b, 4 * b, 3, 1, 1,
                               true, Act::Relu, rng);
        }
        const int n_res = 8;
        const int first_shared = n_res - spec.shared_layers;  // 0-based index
        for (int i = 0; i < n_res; ++i) {
            const std::string block = ".res" + std::to_string(i + 1);
            if (share_tail_of && i >= first_shared) {
                res.push_back(share_tail_of->res[static_cast<std::size_t>(i)]);
                // alias names are recorded once per block by the bundle
            } else {
                res.emplace_back(reg, name + block, 4 * b, rng);
            }
        }
    }

    // convolutional trunk only (used by the residual-identity shape test)
    Var<T> trunk(const Var<T>& x) const {
        Var<T> h = x;
        for (const auto& c : convs) h = c.fwd(h);
        return h;
    }

    Var<T> fwd(const Var<T>& x) const {
        const auto& xs = x->value.shape;
        if (xs.size() != 3 || xs[1] % 4 != 0 || xs[2] % 4 != 0) {
            throw ShapeError("content encoder: input dims must be divisible by 4");
        }
        Var<T> h = trunk(x);
        for (const auto& r : res) h = r.fwd(h);
        return h;
    }
};

// --------------------------------------------------------------------------
// style encoder: 5 convolutions + fully connected mean / log-variance heads
// over a global average pool.
// --------------------------------------------------------------------------
template <class T>
struct StyleOut {
    Var<T> mean;
    Var<T> logvar;
};

template <class T>
struct StyleEncoder {
    std::vector<ConvBlock<T>> convs;
    LinearLayer<T> fc_mean, fc_logvar;

    StyleEncoder() = default;
    StyleEncoder(ParamRegistry<T>& reg, const std::string& name, const NetworkSpec& spec,
                 Rng& rng) {
        const int b = spec.base();
        const bool in = spec.style_encoder_instance_norm;
        convs.emplace_back(reg, name + ".conv1", 1, b, 7, 1, 3, in, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv2", b, 2 * b, 4, 2, 1, in, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv3", 2 * b, 4 * b, 4, 2, 1, in, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv4", 4 * b, 4 * b, 4, 2, 1, in, Act::Relu, rng);
        convs.emplace_back(reg, name + ".conv5", 4 * b, 4 * b, 4, 2, 1, in, Act::Relu, rng);
        fc_mean = LinearLayer<T>(reg, name + ".fc_mean", 4 * b, spec.style_dim, rng);
        fc_logvar = LinearLayer<T>(reg, name + ".fc_logvar", 4 * b, spec.style_dim, rng);
    }

    StyleOut<T> fwd(const Var<T>& x) const {
        Var<T> h = x;
        for (const auto& c : convs) h = c.fwd(h);
        Var<T> pooled = global_avg_pool(h);
        return {fc_mean.fwd(pooled), fc_logvar.fwd(pooled)};
    }
};

// --------------------------------------------------------------------------
// generator: 3 style-injected residual blocks (shared head across the two
// generators) and an upsampling ladder back to input resolution
// (x2, x2, stride-preserving), tanh output.
// --------------------------------------------------------------------------
template <class T>
struct Generator {
    std::vector<StyleResBlock<T>> res;
    ConvBlock<T> up1, up2, up3;
    Conv2dLayer<T> out_conv;

    Generator() = default;
    Generator(ParamRegistry<T>& reg, const std::string& name, const NetworkSpec& spec, Rng& rng,
              const Generator<T>* share_head_of = nullptr) {
        const int b = spec.base();
        for (int i = 0; i < 3; ++i) {
            const std::string block = name + ".res" + std::to_string(i + 1);
            if (share_head_of) {
                res.push_back(share_head_of->res[static_cast<std::size_t>(i)]);
            } else {
                res.emplace_back(reg, block, 4 * b, spec.style_dim, rng);
            }
        }
        up1 = ConvBlock<T>(reg, name + ".up1", 4 * b, 2 * b, 3, 1, 1, true, Act::Relu, rng);
        up2 = ConvBlock<T>(reg, name + ".up2", 2 * b, b, 3, 1, 1, true, Act::Relu, rng);
        up3 = ConvBlock<T>(reg, name + ".up3", b, b, 3, 1, 1, true, Act::Relu, rng);
        out_conv = Conv2dLayer<T>(reg, name + ".out", b, 1, 7, 1, 3, rng, 1.0);
    }

    Var<T> fwd(const Var<T>& content, const Var<T>& style) const {
        if (style->value.ndim() != 1 || style->value.dim(0) != res[0].c1.conv.w->value.dim(1) -
                                                                  res[0].c2.w->value.dim(1)) {
            throw ShapeError("generator: style vector has wrong length");
        }
        Var<T> h = content;
        for (const auto& r : res) h = r.fwd(h, style);
        h = up1.fwd(upsample_nn2x(h));
        h = up2.fwd(upsample_nn2x(h));
        h = up3.fwd(h);
        return tanh_op(out_conv.fwd(h));
    }
};

// --------------------------------------------------------------------------
// segmentation head: 4 residual blocks + the same upsampling ladder, softmax
// over classes at full resolution.
// --------------------------------------------------------------------------
template <class T>
struct SegHead {
    std::vector<ResBlock<T>> res;
    ConvBlock<T> up1, up2, up3;
    Conv2dLayer<T> out_conv;

    SegHead() = default;
    SegHead(ParamRegistry<T>& reg, const std::string& name, const NetworkSpec& spec, Rng& rng) {
        const int b = spec.base();
        for (int i = 0; i < 4; ++i) {
            res.emplace_back(reg, name + ".res" + std::to_string(i + 1), 4 * b, rng);
        }
        up1 = ConvBlock<T>(reg, name + ".up1", 4 * b, 2 * b, 3, 1, 1, true, Act::Relu, rng);
        up2 = ConvBlock<T>(reg, name + ".up2", 2 * b, b, 3, 1, 1, true, Act::Relu, rng);
        up3 = ConvBlock<T>(reg, name + ".up3", b, b, 3, 1, 1, true, Act::Relu, rng);
        out_conv = Conv2dLayer<T>(reg, name + ".out", b, spec.num_classes, 7, 1, 3, rng, 1.0);
    }

    Var<T> fwd(const Var<T>& content) const {
        Var<T> h = content;
        for (const auto& r : res) h = r.fwd(h);
        h = up1.fwd(upsample_nn2x(h));
        h = up2.fwd(upsample_nn2x(h));
        h = up3.fwd(h);
        return softmax_channel(out_conv.fwd(h));
    }
};

// --------------------------------------------------------------------------
// discriminators: PatchGAN ladders emitting raw score maps (no sigmoid; the
// least-squares objectives consume scores directly, the content adversary
// applies its own sigmoid inside the loss).
// --------------------------------------------------------------------------
template <class T>
struct PatchDiscriminator {
    std::vector<ConvBlock<T>> layers;
    Conv2dLayer<T> out_conv;

    PatchDiscriminator() = default;
    PatchDiscriminator(ParamRegistry<T>& reg, const std::string& name, int in_ch,
                       const NetworkSpec& spec, Rng& rng) {
        const int b = spec.base();
        layers.emplace_back(reg, name + ".conv1", in_ch, b, 4, 2, 1, false, Act::LeakyRelu, rng);
        layers.emplace_back(reg, name + ".conv2", b, 2 * b, 4, 2, 1, true, Act::LeakyRelu, rng);
        layers.emplace_back(reg, name + ".conv3", 2 * b, 4 * b, 4, 2, 1, true, Act::LeakyRelu,
                            rng);
        layers.emplace_back(reg, name + ".conv4", 4 * b, 8 * b, 3, 1, 1, true, Act::LeakyRelu,
                            rng);
        out_conv = Conv2dLayer<T>(reg, name + ".out", 8 * b, 1, 3, 1, 1, rng, 1.0);
    }

    Var<T> fwd(const Var<T>& x) const {
        Var<T> h = x;
        for (const auto& l : layers) h = l.fwd(h);
        return out_conv.fwd(h);
    }
};

template <class T>
struct ContentDiscriminator {
    std::vector<ConvBlock<T>> layers;
    Conv2dLayer<T> out_conv;

    ContentDiscriminator() = default;
    ContentDiscriminator(ParamRegistry<T>& reg, const std::string& name, const NetworkSpec& spec,
                         Rng& rng) {
        const int b = spec.base();
        layers.emplace_back(reg, name + ".conv1", 4 * b, 4 * b, 4, 2, 1, false, Act::LeakyRelu,
                            rng);
        layers.emplace_back(reg, name + ".conv2", 4 * b, 8 * b, 4, 2, 1, true, Act::LeakyRelu,
                            rng);
        layers.emplace_back(reg, name + ".conv3", 8 * b, 8 * b, 3, 1, 1, true, Act::LeakyRelu,
                            rng);
        out_conv = Conv2dLayer<T>(reg, name + ".out", 8 * b, 1, 3, 1, 1, rng, 1.0);
    }

    Var<T> fwd(const Var<T>& x) const {
        Var<T> h = x;
        for (const auto& l : layers) h = l.fwd(h);
        return out_conv.fwd(h);
    }
};

// --------------------------------------------------------------------------
// the full model family with its weight-sharing contracts
// --------------------------------------------------------------------------
template <class T>
struct ModelBundle {
    NetworkSpec spec;
    ParamRegistry<T> params;

    ContentEncoder<T> enc_content_src, enc_content_tgt;
    StyleEncoder<T> enc_style_src, enc_style_tgt;
    Generator<T> gen_src, gen_tgt;
    SegHead<T> seg;
    PatchDiscriminator<T> disc_src, disc_tgt, disc_feature;
    ContentDiscriminator<T> disc_content;

    // registry slot ranges per optimizer group
    std::vector<int> gen_group;   // encoders + generators (lr_other)
    std::vector<int> seg_group;   // segmentation head (lr_seg)
    std::vector<int> disc_group;  // all discriminators (lr_other)

    ModelBundle(const NetworkSpec& s, std::uint64_t seed) : spec(s) {
        Rng rng = Rng::derive(seed, 0x1417u);
        std::size_t mark = 0;
        auto slots_since = [&](std::vector<int>& group) {
            for (std::size_t i = mark; i < params.size(); ++i) group.push_back(static_cast<int>(i));
            mark = params.size();
        };

        enc_content_src = ContentEncoder<T>(params, "E_c_src", spec, rng);
        if (spec.share_full_content_encoder) {
            enc_content_tgt = enc_content_src;
            params.alias_prefix("E_c_tgt", "E_c_src");
        } else {
            enc_content_tgt = ContentEncoder<T>(params, "E_c_tgt", spec, rng, &enc_content_src);
            const int first_shared = 8 - spec.shared_layers;
            for (int i = first_shared; i < 8; ++i) {
                const std::string blk = ".res" + std::to_string(i + 1);
                params.alias_prefix("E_c_tgt" + blk, "E_c_src" + blk);
            }
        }
        enc_style_src = StyleEncoder<T>(params, "E_s_src", spec, rng);
        enc_style_tgt = StyleEncoder<T>(params, "E_s_tgt", spec, rng);
        gen_src = Generator<T>(params, "G_src", spec, rng);
        gen_tgt = Generator<T>(params, "G_tgt", spec, rng, &gen_src);
        for (int i = 0; i < 3; ++i) {
            const std::string blk = ".res" + std::to_string(i + 1);
            params.alias_prefix("G_tgt" + blk, "G_src" + blk);
        }
        slots_since(gen_group);

        seg = SegHead<T>(params, "S_seg", spec, rng);
        slots_since(seg_group);

        disc_src = PatchDiscriminator<T>(params, "D_src", 1, spec, rng);
        disc_tgt = PatchDiscriminator<T>(params, "D_tgt", 1, spec, rng);
        disc_content = ContentDiscriminator<T>(params, "D_content", spec, rng);
        disc_feature = PatchDiscriminator<T>(params, "D_feature", spec.num_classes, spec, rng);
        slots_since(disc_group);
    }
};

// Reparameterized style sample with a recorded noise draw.
template <class T>
Var<T> draw_style_sample(const StyleOut<T>& code, Rng& rng) {
    Tensor<T> eps(code.mean->value.shape);
    for (auto& v : eps.data) v = static_cast<T>(rng.normal());
    return reparam_sample(code.mean, code.logvar, eps);
}

}  // namespace sgdr
