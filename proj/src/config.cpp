#include "sgdr/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "sgdr/errors.hpp"
#include "sgdr/optim.hpp"

using json = nlohmann::json;

namespace sgdr {

namespace {

json weights_to_json(const LossWeights& w) {
    return json{{"lambda_cc", w.lambda_cc},
                {"lambda_recon", w.lambda_recon},
                {"lambda_latent", w.lambda_latent},
                {"lambda_c_adv", w.lambda_c_adv},
                {"lambda_domain_adv", w.lambda_domain_adv},
                {"lambda_seg", w.lambda_seg},
                {"lambda_f_adv", w.lambda_f_adv},
                {"lambda_KL", w.lambda_kl}};
}

void weights_from_json(const json& j, LossWeights& w) {
    w.lambda_cc = j.value("lambda_cc", w.lambda_cc);
    w.lambda_recon = j.value("lambda_recon", w.lambda_recon);
    w.lambda_latent = j.value("lambda_latent", w.lambda_latent);
    w.lambda_c_adv = j.value("lambda_c_adv", w.lambda_c_adv);
    w.lambda_domain_adv = j.value("lambda_domain_adv", w.lambda_domain_adv);
    w.lambda_seg = j.value("lambda_seg", w.lambda_seg);
    w.lambda_f_adv = j.value("lambda_f_adv", w.lambda_f_adv);
    w.lambda_kl = j.value("lambda_KL", w.lambda_kl);
}

}  // namespace

std::string TrainConfig::to_json() const {
    json j;
    j["epochs_constant"] = epochs_constant;
    j["epochs_decay"] = epochs_decay;
    j["batch_size"] = batch_size;
    j["lr_seg"] = lr_seg;
    j["lr_other"] = lr_other;
    j["adam_betas"] = {adam_beta1, adam_beta2};
    j["weights"] = weights_to_json(weights);
    j["ablation"] = {{"use_content_discriminator", ablation.use_content_discriminator},
                     {"use_feature_discriminator", ablation.use_feature_discriminator},
                     {"use_lv_seg", ablation.use_lv_seg}};
    j["seed"] = seed;
    j["checkpoint_every"] = checkpoint_every;
    j["width_multiplier"] = width_multiplier;
    j["no_adaptation"] = no_adaptation;
    j["feature_adv_literal_log"] = feature_adv_literal_log;
    j["stop_gradient_at_v"] = stop_gradient_at_v;
    j["augment"] = {{"p_flip_h", augment.p_flip_h},
                    {"p_flip_v", augment.p_flip_v},
                    {"p_rot90", augment.p_rot90},
                    {"p_rot_continuous", augment.p_rot_continuous},
                    {"max_angle_deg", augment.max_angle_deg}};
    j["num_workers"] = num_workers;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("TrainConfig: parse error: ") + e.what());
    }
    TrainConfig c;
    c.epochs_constant = j.value("epochs_constant", c.epochs_constant);
    c.epochs_decay = j.value("epochs_decay", c.epochs_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_seg = j.value("lr_seg", c.lr_seg);
    c.lr_other = j.value("lr_other", c.lr_other);
    if (j.contains("adam_betas")) {
        c.adam_beta1 = j["adam_betas"].at(0).get<double>();
        c.adam_beta2 = j["adam_betas"].at(1).get<double>();
    }
    if (j.contains("weights")) weights_from_json(j["weights"], c.weights);
    if (j.contains("ablation")) {
        const auto& a = j["ablation"];
        c.ablation.use_content_discriminator =
            a.value("use_content_discriminator", c.ablation.use_content_discriminator);
        c.ablation.use_feature_discriminator =
            a.value("use_feature_discriminator", c.ablation.use_feature_discriminator);
        c.ablation.use_lv_seg = a.value("use_lv_seg", c.ablation.use_lv_seg);
    }
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.width_multiplier = j.value("width_multiplier", c.width_multiplier);
    c.no_adaptation = j.value("no_adaptation", c.no_adaptation);
    c.feature_adv_literal_log = j.value("feature_adv_literal_log", c.feature_adv_literal_log);
    c.stop_gradient_at_v = j.value("stop_gradient_at_v", c.stop_gradient_at_v);
    if (j.contains("augment")) {
        const auto& a = j["augment"];
        c.augment.p_flip_h = a.value("p_flip_h", c.augment.p_flip_h);
        c.augment.p_flip_v = a.value("p_flip_v", c.augment.p_flip_v);
        c.augment.p_rot90 = a.value("p_rot90", c.augment.p_rot90);
        c.augment.p_rot_continuous = a.value("p_rot_continuous", c.augment.p_rot_continuous);
        c.augment.max_angle_deg = a.value("max_angle_deg", c.augment.max_angle_deg);
    }
    c.num_workers = j.value("num_workers", c.num_workers);
    return c;
}

TrainConfig TrainConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("TrainConfig: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

double lr_at_epoch(const TrainConfig& config, int epoch, double base_lr) {
    return lr_at_epoch_impl(config.epochs_constant, config.epochs_decay, epoch, base_lr);
}

std::string network_spec_to_json(const NetworkSpec& spec) {
    json j;
    j["network_spec"] = {{"width_multiplier", spec.width_multiplier},
                         {"image_size", spec.image_size},
                         {"style_dim", spec.style_dim},
                         {"num_classes", spec.num_classes},
                         {"shared_layers", spec.shared_layers},
                         {"base_channels", spec.base_channels},
                         {"share_full_content_encoder", spec.share_full_content_encoder},
                         {"style_encoder_instance_norm", spec.style_encoder_instance_norm}};
    return j.dump();
}

NetworkSpec network_spec_from_json(const std::string& text) {
    json root = json::parse(text);
    const json& j = root.contains("network_spec") ? root["network_spec"] : root;
    NetworkSpec s;
    s.width_multiplier = j.value("width_multiplier", s.width_multiplier);
    s.image_size = j.value("image_size", s.image_size);
    s.style_dim = j.value("style_dim", s.style_dim);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.shared_layers = j.value("shared_layers", s.shared_layers);
    s.base_channels = j.value("base_channels", s.base_channels);
    s.share_full_content_encoder =
        j.value("share_full_content_encoder", s.share_full_content_encoder);
    s.style_encoder_instance_norm =
        j.value("style_encoder_instance_norm", s.style_encoder_instance_norm);
    return s;
}

}  // namespace sgdr
