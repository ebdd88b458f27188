#pragma once

#include <cmath>
#include <vector>

#include "sgdr/modules.hpp"

namespace sgdr {

// Adam with parameter groups. A slot whose gradient buffer is empty (no
// gradient flowed this step, e.g. an ablated discriminator) is skipped
// entirely, leaving the parameter bit-identical. Shared parameters appear in
// exactly one group slot, so they receive exactly one update per step.
template <class T>
class Adam {
public:
    struct Group {
        std::vector<int> slots;
        double base_lr;
    };

    Adam(const ParamRegistry<T>& reg, std::vector<Group> groups, double beta1 = 0.5,
         double beta2 = 0.999, double eps = 1e-8)
        : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(reg.size());
        v_.resize(reg.size());
    }

    // lr_scale multiplies every group's base rate (the decay schedule).
    void step(ParamRegistry<T>& reg, const GradBuffer<T>& grads, double lr_scale) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (const auto& group : groups_) {
            const double lr = group.base_lr * lr_scale;
            for (int slot : group.slots) {
                const auto& g = grads.slots[static_cast<std::size_t>(slot)];
                if (g.numel() == 0) continue;
                Tensor<T>& m = m_[static_cast<std::size_t>(slot)];
                Tensor<T>& v = v_[static_cast<std::size_t>(slot)];
                if (m.numel() == 0) {
                    m = Tensor<T>(g.shape);
                    v = Tensor<T>(g.shape);
                }
                Tensor<T>& p = reg.entries()[static_cast<std::size_t>(slot)].var->value;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    const double gi = static_cast<double>(g.data[i]);
                    double mi = beta1_ * static_cast<double>(m.data[i]) + (1.0 - beta1_) * gi;
                    double vi =
                        beta2_ * static_cast<double>(v.data[i]) + (1.0 - beta2_) * gi * gi;
                    m.data[i] = static_cast<T>(mi);
                    v.data[i] = static_cast<T>(vi);
                    const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
                    p.data[i] = static_cast<T>(static_cast<double>(p.data[i]) - update);
                }
            }
        }
    }

    std::uint64_t step_count() const { return t_; }
    void set_step_count(std::uint64_t t) { t_ = t; }
    std::vector<Tensor<T>>& moment1() { return m_; }
    std::vector<Tensor<T>>& moment2() { return v_; }

private:
    std::vector<Group> groups_;
    double beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

// Two-phase learning-rate schedule: constant for `epochs_constant`, then a
// linear ramp to zero over `epochs_decay`.
inline double lr_at_epoch_impl(int epochs_constant, int epochs_decay, int epoch,
                               double base_lr) {
    if (epoch < 0 || epoch >= epochs_constant + epochs_decay) {
        throw ValueError("lr_at_epoch: epoch out of schedule range");
    }
    if (epoch < epochs_constant) return base_lr;
    return base_lr *
           (1.0 - static_cast<double>(epoch - epochs_constant) / static_cast<double>(epochs_decay));
}

}  // namespace sgdr
