#pragma once

#include <cmath>

#include "sgdr/config.hpp"
#include "sgdr/losses.hpp"
#include "sgdr/networks.hpp"
#include "sgdr/optim.hpp"
#include "sgdr/parallel.hpp"

namespace sgdr {

// One source/target image pair prepared for a training step.
template <class T>
struct PairItem {
    Tensor<T> x;         // [1,H,W] source image
    Tensor<T> x_onehot;  // [K,H,W] source labels
    Tensor<T> y;         // [1,H,W] target image
};

struct StepOptions {
    LossWeights weights;
    AblationFlags ablation;
    bool no_adaptation = false;
    bool feature_adv_literal_log = false;
    bool stop_gradient_at_v = false;

    static StepOptions from_config(const TrainConfig& c) {
        StepOptions o;
        o.weights = c.weights;
        o.ablation = c.ablation;
        o.no_adaptation = c.no_adaptation;
        o.feature_adv_literal_log = c.feature_adv_literal_log;
        o.stop_gradient_at_v = c.stop_gradient_at_v;
        return o;
    }
};

// Every tensor of the disentangle / translate / re-encode / segment pipeline
// for one pair, kept alive between the discriminator and generator updates.
template <class T>
struct PairForward {
    Var<T> x, y;
    Tensor<T> gt_onehot;
    Var<T> z_src, z_tgt;  // injected style codes (constants)

    Var<T> c_x, c_y;                  // content maps
    StyleOut<T> style_x, style_y;     // posteriors
    Var<T> s_x, s_y;                  // reparameterized samples
    Var<T> u, v;                      // translations (u source-styled, v target-styled)
    Var<T> c_u, c_v;                  // second-pass content
    Var<T> s_u, s_v;                  // second-pass style samples
    Var<T> x_cyc, y_cyc;              // cross-cycle reconstructions
    Var<T> x_hat, y_hat;              // self-reconstructions
    Var<T> p_x, p_v, p_y;             // segmentation probabilities
    Var<T> z_rec_src, z_rec_tgt;      // recovered injected codes (posterior means)

    // frozen copies consumed by the discriminator update
    Var<T> u_det, v_det, c_x_det, c_y_det, p_v_det, p_y_det;
};

// Full forward pipeline for one pair. Draw order of the injected noise is
// fixed so runs are reproducible under any flag combination.
template <class T>
PairForward<T> forward_pair(ModelBundle<T>& m, const PairItem<T>& item, Rng rng,
                            const StepOptions& opt) {
    PairForward<T> pf;
    pf.x = make_const<T>(item.x);
    pf.y = make_const<T>(item.y);
    pf.gt_onehot = item.x_onehot;

    const int sd = m.spec.style_dim;
    auto draw_vec = [&rng, sd]() {
        Tensor<T> t({sd});
        for (auto& v : t.data) v = static_cast<T>(rng.normal());
        return t;
    };
    const Tensor<T> eps_x = draw_vec(), eps_y = draw_vec();
    const Tensor<T> eps_u = draw_vec(), eps_v = draw_vec();
    const Tensor<T> z_src = draw_vec(), z_tgt = draw_vec();

    if (opt.no_adaptation) {
        // supervised source-only path; translation disabled
        pf.c_x = m.enc_content_src.fwd(pf.x);
        pf.p_x = m.seg.fwd(pf.c_x);
        return pf;
    }

    // (1) disentangle
    pf.c_x = m.enc_content_src.fwd(pf.x);
    pf.c_y = m.enc_content_tgt.fwd(pf.y);
    pf.style_x = m.enc_style_src.fwd(pf.x);
    pf.style_y = m.enc_style_tgt.fwd(pf.y);
    pf.s_x = reparam_sample(pf.style_x.mean, pf.style_x.logvar, eps_x);
    pf.s_y = reparam_sample(pf.style_y.mean, pf.style_y.logvar, eps_y);

    // (2) translate: u carries y's anatomy with x's style and vice versa
    pf.u = m.gen_src.fwd(pf.c_y, pf.s_x);
    pf.v = m.gen_tgt.fwd(pf.c_x, pf.s_y);

    // (3) re-encode the translations, cross-cycle and self reconstructions
    pf.c_u = m.enc_content_src.fwd(pf.u);
    pf.c_v = m.enc_content_tgt.fwd(pf.v);
    StyleOut<T> style_u = m.enc_style_src.fwd(pf.u);
    StyleOut<T> style_v = m.enc_style_tgt.fwd(pf.v);
    pf.s_u = reparam_sample(style_u.mean, style_u.logvar, eps_u);
    pf.s_v = reparam_sample(style_v.mean, style_v.logvar, eps_v);
    pf.x_cyc = m.gen_src.fwd(pf.c_v, pf.s_u);
    pf.y_cyc = m.gen_tgt.fwd(pf.c_u, pf.s_v);
    pf.x_hat = m.gen_src.fwd(pf.c_x, pf.s_x);
    pf.y_hat = m.gen_tgt.fwd(pf.c_y, pf.s_y);

    // (4) segmentation forwards
    pf.p_x = m.seg.fwd(pf.c_x);
    if (opt.ablation.use_lv_seg || opt.ablation.use_feature_discriminator) {
        Var<T> c_for_seg =
            opt.stop_gradient_at_v ? m.enc_content_tgt.fwd(detach(pf.v)) : pf.c_v;
        pf.p_v = m.seg.fwd(c_for_seg);
    }
    pf.p_y = m.seg.fwd(pf.c_y);

    // latent regression: inject random codes and recover them
    pf.z_src = make_const<T>(z_src);
    pf.z_tgt = make_const<T>(z_tgt);
    Var<T> gen_z_src = m.gen_src.fwd(pf.c_x, pf.z_src);
    Var<T> gen_z_tgt = m.gen_tgt.fwd(pf.c_y, pf.z_tgt);
    pf.z_rec_src = m.enc_style_src.fwd(gen_z_src).mean;
    pf.z_rec_tgt = m.enc_style_tgt.fwd(gen_z_tgt).mean;

    // frozen inputs for the discriminator phase
    pf.u_det = detach(pf.u);
    pf.v_det = detach(pf.v);
    pf.c_x_det = detach(pf.c_x);
    pf.c_y_det = detach(pf.c_y);
    if (pf.p_v) pf.p_v_det = detach(pf.p_v);
    pf.p_y_det = detach(pf.p_y);
    return pf;
}

template <class T>
struct DiscLosses {
    Var<T> d_src, d_tgt, d_content, d_feature;
};

// Discriminator objectives on detached generator outputs.
template <class T>
DiscLosses<T> discriminator_losses(ModelBundle<T>& m, const PairForward<T>& pf,
                                   const StepOptions& opt) {
    DiscLosses<T> dl;
    if (opt.no_adaptation) return dl;
    dl.d_src = lsgan_loss(m.disc_src.fwd(pf.u_det), m.disc_src.fwd(pf.x),
                          GanSide::Discriminator);
    dl.d_tgt = lsgan_loss(m.disc_tgt.fwd(pf.v_det), m.disc_tgt.fwd(pf.y),
                          GanSide::Discriminator);
    if (opt.ablation.use_content_discriminator) {
        dl.d_content = content_adv_loss(m.disc_content.fwd(pf.c_x_det),
                                        m.disc_content.fwd(pf.c_y_det),
                                        AdvSide::Discriminator);
    }
    if (opt.ablation.use_feature_discriminator) {
        dl.d_feature =
            feature_adv_loss(m.disc_feature.fwd(pf.p_v_det), m.disc_feature.fwd(pf.p_y_det),
                             GanSide::Discriminator, opt.feature_adv_literal_log);
    }
    return dl;
}

// Generator-side objective against the (frozen) discriminators. Builds fresh
// discriminator forwards so the scores reflect the post-update weights.
template <class T>
TotalLoss<T> generator_objective(ModelBundle<T>& m, const PairForward<T>& pf,
                                 const StepOptions& opt) {
    GenLossTerms<T> t;
    if (opt.no_adaptation) {
        t.seg_x = seg_loss(pf.p_x, pf.gt_onehot);
        return total_loss(t, opt.weights);
    }
    t.cc = cross_cycle_loss(pf.x, pf.x_cyc, pf.y, pf.y_cyc);
    t.recon = self_recon_loss(pf.x, pf.x_hat, pf.y, pf.y_hat);
    t.latent = latent_regression_loss(pf.z_src, pf.z_rec_src, pf.z_tgt, pf.z_rec_tgt);
    t.kl = detail::plain_sum(kl_loss(pf.style_x), kl_loss(pf.style_y));
    t.domain_adv = detail::plain_sum(
        lsgan_loss(m.disc_src.fwd(pf.u), Var<T>{}, GanSide::Generator),
        lsgan_loss(m.disc_tgt.fwd(pf.v), Var<T>{}, GanSide::Generator));
    if (opt.ablation.use_content_discriminator) {
        t.c_adv = content_adv_loss(m.disc_content.fwd(pf.c_x), m.disc_content.fwd(pf.c_y),
                                   AdvSide::Encoder);
    }
    if (opt.ablation.use_feature_discriminator) {
        t.f_adv = feature_adv_loss(Var<T>{}, m.disc_feature.fwd(pf.p_y), GanSide::Generator,
                                   opt.feature_adv_literal_log);
    }
    t.seg_x = seg_loss(pf.p_x, pf.gt_onehot);
    if (opt.ablation.use_lv_seg) {
        t.seg_v = seg_loss(pf.p_v, pf.gt_onehot);
    }
    return total_loss(t, opt.weights);
}

// One optimization step: update all discriminators on detached inputs, then
// update encoders/generators/segmentation head against the frozen (just
// updated) discriminators. Pairs are processed in parallel; gradients are
// reduced in pair order, which keeps the step bit-deterministic.
template <class T>
LossReport train_step(ModelBundle<T>& m, Adam<T>& opt_gen, Adam<T>& opt_disc,
                      const std::vector<PairItem<T>>& batch, const StepOptions& opt,
                      double lr_scale, std::uint64_t step_seed, std::size_t workers) {
    const std::size_t B = batch.size();
    if (B == 0) throw ValueError("train_step: empty batch");
    const T inv_b = T(1) / static_cast<T>(B);
    const std::size_t n_params = m.params.size();

    std::vector<PairForward<T>> pfs(B);
    std::vector<DiscLosses<T>> dls(B);
    std::vector<GradBuffer<T>> sinks;
    sinks.reserve(B);
    for (std::size_t i = 0; i < B; ++i) sinks.emplace_back(n_params);

    parallel_for(B, workers, [&](std::size_t i) {
        Rng rng = Rng::derive(step_seed, 0xF0ull, i);
        pfs[i] = forward_pair(m, batch[i], rng, opt);
        dls[i] = discriminator_losses(m, pfs[i], opt);
        for (const Var<T>* loss : {&dls[i].d_src, &dls[i].d_tgt, &dls[i].d_content,
                                   &dls[i].d_feature}) {
            if (*loss) {
                if (!std::isfinite(static_cast<double>((*loss)->value[0]))) {
                    throw DivergenceError("non-finite discriminator loss");
                }
                backward(*loss, inv_b, sinks[i]);
            }
        }
    });

    if (!opt.no_adaptation) {
        GradBuffer<T> dgrads(n_params);
        for (auto& s : sinks) {
            dgrads.add_from(s);
            s.clear();
        }
        opt_disc.step(m.params, dgrads, lr_scale);
    }

    std::vector<TotalLoss<T>> totals(B);
    parallel_for(B, workers, [&](std::size_t i) {
        totals[i] = generator_objective(m, pfs[i], opt);
        backward(totals[i].var, inv_b, sinks[i]);
    });
    GradBuffer<T> ggrads(n_params);
    for (auto& s : sinks) ggrads.add_from(s);
    opt_gen.step(m.params, ggrads, lr_scale);

    LossReport rep;
    const double invb = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        const LossReport& r = totals[i].report;
        rep.cc += r.cc * invb;
        rep.recon += r.recon * invb;
        rep.latent += r.latent * invb;
        rep.c_adv += r.c_adv * invb;
        rep.domain_adv += r.domain_adv * invb;
        rep.seg_x += r.seg_x * invb;
        rep.seg_v += r.seg_v * invb;
        rep.f_adv += r.f_adv * invb;
        rep.kl += r.kl * invb;
        rep.total += r.total * invb;
        if (dls[i].d_src) rep.d_src += static_cast<double>(dls[i].d_src->value[0]) * invb;
        if (dls[i].d_tgt) rep.d_tgt += static_cast<double>(dls[i].d_tgt->value[0]) * invb;
        if (dls[i].d_content) {
            rep.d_content += static_cast<double>(dls[i].d_content->value[0]) * invb;
        }
        if (dls[i].d_feature) {
            rep.d_feature += static_cast<double>(dls[i].d_feature->value[0]) * invb;
        }
    }
    return rep;
}

}  // namespace sgdr
