#pragma once

#include <cstdint>
#include <string>

#include "sgdr/augment.hpp"
#include "sgdr/losses.hpp"

namespace sgdr {

// Component toggles for the ablation study; any combination is valid.
struct AblationFlags {
    bool use_content_discriminator = true;
    bool use_feature_discriminator = true;
    bool use_lv_seg = true;
};

// Every training hyperparameter in one serializable record. Defaults are the
// full-scale protocol (150+150 epochs); desk_scale() is the configuration
// used throughout the test suite.
struct TrainConfig {
    int epochs_constant = 150;
    int epochs_decay = 150;
    int batch_size = 4;
    double lr_seg = 1e-3;
    double lr_other = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    LossWeights weights;
    AblationFlags ablation;
    std::uint64_t seed = 7;
    int checkpoint_every = 10;

    double width_multiplier = 0.25;
    bool no_adaptation = false;
    bool feature_adv_literal_log = false;
    bool stop_gradient_at_v = false;
    AugmentConfig augment;
    int num_workers = 2;

    void validate() const {
        if (epochs_constant < 0 || epochs_decay < 0 || epochs_constant + epochs_decay < 1) {
            throw ValueError("TrainConfig: need at least one epoch");
        }
        if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be positive");
        if (lr_seg <= 0 || lr_other <= 0) throw ValueError("TrainConfig: learning rates must be positive");
        if (checkpoint_every < 1) throw ValueError("TrainConfig: checkpoint_every must be positive");
        if (width_multiplier <= 0 || width_multiplier > 1) {
            throw ValueError("TrainConfig: width_multiplier must lie in (0, 1]");
        }
        weights.validate();
    }

    int total_epochs() const { return epochs_constant + epochs_decay; }

    static TrainConfig desk_scale() {
        TrainConfig c;
        c.epochs_constant = 30;
        c.epochs_decay = 30;
        c.checkpoint_every = 10;
        return c;
    }

    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
    static TrainConfig load_file(const std::string& path);
};

// Current learning rate for an epoch (constant phase, then linear decay).
double lr_at_epoch(const TrainConfig& config, int epoch, double base_lr);

// Architecture configuration round trip (stored in checkpoint metadata so
// evaluation can rebuild the right model).
std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& text);

}  // namespace sgdr
