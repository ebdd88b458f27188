#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgdr/ops.hpp"
#include "sgdr/rng.hpp"

namespace sgdr {

// Owns every trainable tensor. Parameters are registered once under a
// canonical name; modules that share weights re-reference the same Var and
// record an alias, so shared storage is structural, not copied.
template <class T>
class ParamRegistry {
public:
    struct Entry {
        std::string name;
        Var<T> var;
    };

    Var<T> create(const std::string& name, Tensor<T> value) {
        if (index_.count(name)) throw ValueError("param registered twice: " + name);
        Var<T> v = make_param<T>(std::move(value), static_cast<int>(entries_.size()));
        index_[name] = entries_.size();
        entries_.push_back({name, v});
        return v;
    }

    // Records that `alias_prefix.*` refers to the parameters canonically
    // registered under `canonical_prefix.*`.
    void alias_prefix(const std::string& alias_prefix, const std::string& canonical_prefix) {
        const std::string needle = canonical_prefix + ".";
        for (const auto& e : entries_) {
            if (e.name.rfind(needle, 0) == 0) {
                aliases_[alias_prefix + e.name.substr(canonical_prefix.size())] = e.name;
            }
        }
    }

    const std::vector<Entry>& entries() const { return entries_; }
    const std::map<std::string, std::string>& aliases() const { return aliases_; }

    Var<T> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it != index_.end()) return entries_[it->second].var;
        auto al = aliases_.find(name);
        if (al != aliases_.end()) return find(al->second);
        throw ValueError("unknown parameter: " + name);
    }

    std::size_t size() const { return entries_.size(); }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.var->value.numel();
        return n;
    }

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::string> aliases_;  // alias -> canonical
};

enum class Act { None, Relu, LeakyRelu, Tanh };

template <class T>
Var<T> activate(const Var<T>& x, Act act) {
    switch (act) {
        case Act::None: return x;
        case Act::Relu: return relu(x);
        case Act::LeakyRelu: return leaky_relu(x, T(0.2));
        case Act::Tanh: return tanh_op(x);
    }
    return x;
}

namespace init {

// He-style fan-in scaling; `gain` ~ sqrt(2) ahead of rectifiers, 1 for
// linear/tanh outputs.
template <class T>
Tensor<T> conv_weight(int out_ch, int in_ch, int k, Rng& rng, double gain) {
    Tensor<T> w({out_ch, in_ch, k, k});
    const double std = gain / std::sqrt(static_cast<double>(in_ch) * k * k);
    for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
    return w;
}

template <class T>
Tensor<T> linear_weight(int out_dim, int in_dim, Rng& rng, double gain) {
    Tensor<T> w({out_dim, in_dim});
    const double std = gain / std::sqrt(static_cast<double>(in_dim));
    for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
    return w;
}

}  // namespace init

template <class T>
struct Conv2dLayer {
    Var<T> w, b;
    int stride = 1;
    int pad = 0;

    Conv2dLayer() = default;
    Conv2dLayer(ParamRegistry<T>& reg, const std::string& prefix, int in_ch, int out_ch, int k,
                int stride_, int pad_, Rng& rng, double gain = 1.4142135623730951)
        : stride(stride_), pad(pad_) {
        w = reg.create(prefix + ".weight", init::conv_weight<T>(out_ch, in_ch, k, rng, gain));
        b = reg.create(prefix + ".bias", Tensor<T>({out_ch}));
    }

    Var<T> fwd(const Var<T>& x) const { return conv2d(x, w, b, stride, pad); }
};

template <class T>
struct InstanceNorm2dLayer {
    Var<T> gamma, beta;

    InstanceNorm2dLayer() = default;
    InstanceNorm2dLayer(ParamRegistry<T>& reg, const std::string& prefix, int ch) {
        gamma = reg.create(prefix + ".gamma", Tensor<T>({ch}, T(1)));
        beta = reg.create(prefix + ".beta", Tensor<T>({ch}));
    }

    Var<T> fwd(const Var<T>& x) const { return instance_norm(x, gamma, beta); }
};

template <class T>
struct LinearLayer {
    Var<T> w, b;

    LinearLayer() = default;
    LinearLayer(ParamRegistry<T>& reg, const std::string& prefix, int in_dim, int out_dim,
                Rng& rng, double gain = 1.0) {
        w = reg.create(prefix + ".weight", init::linear_weight<T>(out_dim, in_dim, rng, gain));
        b = reg.create(prefix + ".bias", Tensor<T>({out_dim}));
    }

    Var<T> fwd(const Var<T>& x) const { return linear(x, w, b); }
};

// conv -> [instance norm] -> activation
template <class T>
struct ConvBlock {
    Conv2dLayer<T> conv;
    std::optional<InstanceNorm2dLayer<T>> norm;
    Act act = Act::None;

    ConvBlock() = default;
    ConvBlock(ParamRegistry<T>& reg, const std::string& prefix, int in_ch, int out_ch, int k,
              int stride, int pad, bool with_norm, Act act_, Rng& rng,
              double gain = 1.4142135623730951)
        : conv(reg, prefix + ".conv", in_ch, out_ch, k, stride, pad, rng, gain), act(act_) {
        if (with_norm) norm.emplace(reg, prefix + ".norm", out_ch);
    }

    Var<T> fwd(const Var<T>& x) const {
        Var<T> y = conv.fwd(x);
        if (norm) y = norm->fwd(y);
        return activate(y, act);
    }
};

// Standard residual block: conv-norm-relu-conv-norm plus identity skip.
template <class T>
struct ResBlock {
    ConvBlock<T> c1;
    Conv2dLayer<T> c2;
    InstanceNorm2dLayer<T> n2;

    ResBlock() = default;
    ResBlock(ParamRegistry<T>& reg, const std::string& prefix, int ch, Rng& rng)
        : c1(reg, prefix + ".conv1", ch, ch, 3, 1, 1, true, Act::Relu, rng),
          c2(reg, prefix + ".conv2", ch, ch, 3, 1, 1, rng),
          n2(reg, prefix + ".norm2", ch) {}

    Var<T> fwd(const Var<T>& x) const { return add(n2.fwd(c2.fwd(x)), x); }
};

// Residual block with the style vector broadcast-concatenated onto the
// block input channels.
template <class T>
struct StyleResBlock {
    ConvBlock<T> c1;
    Conv2dLayer<T> c2;
    InstanceNorm2dLayer<T> n2;

    StyleResBlock() = default;
    StyleResBlock(ParamRegistry<T>& reg, const std::string& prefix, int ch, int style_dim,
                  Rng& rng)
        : c1(reg, prefix + ".conv1", ch + style_dim, ch, 3, 1, 1, true, Act::Relu, rng),
          c2(reg, prefix + ".conv2", ch, ch, 3, 1, 1, rng),
          n2(reg, prefix + ".norm2", ch) {}

    Var<T> fwd(const Var<T>& x, const Var<T>& style) const {
        Var<T> h = c1.fwd(concat_broadcast(x, style));
        return add(n2.fwd(c2.fwd(h)), x);
    }
};

}  // namespace sgdr
