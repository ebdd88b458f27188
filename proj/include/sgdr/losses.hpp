#pragma once

#include <cmath>
#include <string>

#include "sgdr/errors.hpp"
#include "sgdr/networks.hpp"
#include "sgdr/ops.hpp"

namespace sgdr {

// Objective weights. Defaults: reconstruction-style terms 10, adversarial
// and segmentation terms 1, KL 0.01.
struct LossWeights {
    double lambda_cc = 10.0;
    double lambda_recon = 10.0;
    double lambda_latent = 10.0;
    double lambda_c_adv = 1.0;
    double lambda_domain_adv = 1.0;
    double lambda_seg = 1.0;
    double lambda_f_adv = 1.0;
    double lambda_kl = 0.01;

    void validate() const {
        for (double v : {lambda_cc, lambda_recon, lambda_latent, lambda_c_adv, lambda_domain_adv,
                         lambda_seg, lambda_f_adv, lambda_kl}) {
            if (v < 0) throw ValueError("loss weights must be non-negative");
        }
    }
};

// Scalar values of every objective term for one step. Unweighted terms are
// retained next to the weighted total; serialization order is fixed.
struct LossReport {
    double cc = 0, recon = 0, latent = 0, c_adv = 0, domain_adv = 0;
    double seg_x = 0, seg_v = 0, f_adv = 0, kl = 0;
    double total = 0;
    double d_src = 0, d_tgt = 0, d_content = 0, d_feature = 0;

    double weighted_sum_of_parts(const LossWeights& w) const {
        return w.lambda_cc * cc + w.lambda_recon * recon + w.lambda_latent * latent +
               w.lambda_c_adv * c_adv + w.lambda_domain_adv * domain_adv +
               w.lambda_seg * (seg_x + seg_v) + w.lambda_f_adv * f_adv + w.lambda_kl * kl;
    }

    static std::string csv_header() {
        return "total,cc,recon,latent,c_adv,domain_adv,seg_x,seg_v,f_adv,kl,"
               "d_src,d_tgt,d_content,d_feature";
    }
};

enum class AdvSide { Discriminator, Encoder };
enum class GanSide { Discriminator, Generator };

namespace detail {
template <class T>
Var<T> half_sum(const Var<T>& a, const Var<T>& b) {
    return weighted_sum<T>({a, b}, {T(0.5), T(0.5)});
}
template <class T>
Var<T> plain_sum(const Var<T>& a, const Var<T>& b) {
    return weighted_sum<T>({a, b}, {T(1), T(1)});
}
}  // namespace detail

// Content adversary (domain classification over content maps, sigmoid inside
// the loss). Discriminator side pushes source scores to 1 and target scores
// to 0; encoder side pushes both to maximum confusion at 0.5. Both are means
// over the two domain terms.
template <class T>
Var<T> content_adv_loss(const Var<T>& scores_src, const Var<T>& scores_tgt, AdvSide side) {
    if (side == AdvSide::Discriminator) {
        return detail::half_sum(bce_logits_mean(scores_src, T(1)),
                                bce_logits_mean(scores_tgt, T(0)));
    }
    return detail::half_sum(bce_logits_mean(scores_src, T(0.5)),
                            bce_logits_mean(scores_tgt, T(0.5)));
}

// L_seg for one branch: soft Dice over foreground classes plus pixel-mean
// cross-entropy against the same ground truth.
template <class T>
Var<T> seg_loss(const Var<T>& probs, const Tensor<T>& gt_onehot) {
    return detail::plain_sum(dice_loss(probs, gt_onehot), ce_loss_op(probs, gt_onehot));
}

// Total segmentation objective: the source prediction and the prediction on
// the translated image are both scored against the source labels (the
// translation preserves anatomy by construction).
template <class T>
Var<T> seg_loss_total(const Var<T>& pred_x, const Tensor<T>& gt_x, const Var<T>& pred_v,
                      const Tensor<T>& gt_v) {
    return detail::plain_sum(seg_loss(pred_x, gt_x), seg_loss(pred_v, gt_v));
}

// Feature adversary over segmentation probability maps. Least-squares by
// default; `literal_log_form` switches to the saturating cross-entropy
// variant. Generator side updates the target branch only.
template <class T>
Var<T> feature_adv_loss(const Var<T>& scores_v, const Var<T>& scores_y, GanSide side,
                        bool literal_log_form = false) {
    if (side == GanSide::Discriminator) {
        if (literal_log_form) {
            return detail::plain_sum(bce_logits_mean(scores_v, T(1)),
                                     bce_logits_mean(scores_y, T(0)));
        }
        return detail::plain_sum(mse_const(scores_v, T(1)), mse_const(scores_y, T(0)));
    }
    if (literal_log_form) return bce_logits_mean(scores_y, T(1));
    return mse_const(scores_y, T(1));
}

// KL(q(s|x) || N(0,I)) for one style code.
template <class T>
Var<T> kl_loss(const StyleOut<T>& code) {
    return kl_gauss(code.mean, code.logvar);
}

// Least-squares GAN objective. Generator side: mean (D(fake)-1)^2.
// Discriminator side: mean D(fake)^2 + mean (D(real)-1)^2.
template <class T>
Var<T> lsgan_loss(const Var<T>& scores_fake, const Var<T>& scores_real, GanSide side) {
    if (side == GanSide::Generator) {
        return mse_const(scores_fake, T(1));
    }
    if (!scores_real) {
        throw ValueError("lsgan_loss: discriminator side requires real scores");
    }
    return detail::plain_sum(mse_const(scores_fake, T(0)), mse_const(scores_real, T(1)));
}

// Cross-cycle consistency: pixel-mean L1 between originals and their
// double-translation reconstructions, summed over the two domains.
template <class T>
Var<T> cross_cycle_loss(const Var<T>& x, const Var<T>& x_prime, const Var<T>& y,
                        const Var<T>& y_prime) {
    return detail::plain_sum(l1_mean(x_prime, x), l1_mean(y_prime, y));
}

// Self-reconstruction: same contract shape as cross_cycle_loss.
template <class T>
Var<T> self_recon_loss(const Var<T>& x, const Var<T>& x_hat, const Var<T>& y,
                       const Var<T>& y_hat) {
    return detail::plain_sum(l1_mean(x_hat, x), l1_mean(y_hat, y));
}

// Latent regression: injected codes must be recoverable from the generated
// images; compared against the style encoder mean (noiseless).
template <class T>
Var<T> latent_regression_loss(const Var<T>& z, const Var<T>& z_rec_src, const Var<T>& z2,
                              const Var<T>& z_rec_tgt) {
    if (z->value.shape != z_rec_src->value.shape || z2->value.shape != z_rec_tgt->value.shape) {
        throw ShapeError("latent_regression_loss: length mismatch");
    }
    return detail::plain_sum(l1_mean(z, z_rec_src), l1_mean(z2, z_rec_tgt));
}

// Generator-side term handles for the total objective. A null Var means the
// term is disabled and contributes exactly zero.
template <class T>
struct GenLossTerms {
    Var<T> cc, recon, latent, c_adv, domain_adv, seg_x, seg_v, f_adv, kl;
};

template <class T>
struct TotalLoss {
    Var<T> var;
    LossReport report;
};

// Weighted total objective. Disabled terms contribute 0; any non-finite term
// aborts with the offending term named.
template <class T>
TotalLoss<T> total_loss(const GenLossTerms<T>& t, const LossWeights& w) {
    w.validate();
    std::vector<Var<T>> terms;
    std::vector<T> weights;
    LossReport rep;
    auto push = [&](const Var<T>& v, double weight, double* slot, const char* name) {
        if (!v) return;
        const double val = static_cast<double>(v->value[0]);
        if (!std::isfinite(val)) {
            throw DivergenceError(std::string("non-finite loss term: ") + name);
        }
        *slot = val;
        terms.push_back(v);
        weights.push_back(static_cast<T>(weight));
    };
    push(t.cc, w.lambda_cc, &rep.cc, "cross_cycle");
    push(t.recon, w.lambda_recon, &rep.recon, "self_reconstruction");
    push(t.latent, w.lambda_latent, &rep.latent, "latent_regression");
    push(t.c_adv, w.lambda_c_adv, &rep.c_adv, "content_adversarial");
    push(t.domain_adv, w.lambda_domain_adv, &rep.domain_adv, "domain_adversarial");
    push(t.seg_x, w.lambda_seg, &rep.seg_x, "segmentation_source");
    push(t.seg_v, w.lambda_seg, &rep.seg_v, "segmentation_translated");
    push(t.f_adv, w.lambda_f_adv, &rep.f_adv, "feature_adversarial");
    push(t.kl, w.lambda_kl, &rep.kl, "kl");
    TotalLoss<T> out;
    out.var = weighted_sum(terms, weights);
    rep.total = static_cast<double>(out.var->value[0]);
    out.report = rep;
    return out;
}

}  // namespace sgdr
