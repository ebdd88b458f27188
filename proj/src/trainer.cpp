#include "sgdr/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "sgdr/preprocess.hpp"

namespace fs = std::filesystem;

namespace sgdr {

namespace {

Tensor<float> as_chw(const Image2D& img) {
    Tensor<float> t({1, img.height(), img.width()});
    t.data = img.pixels.data;
    return t;
}

std::string report_csv(const LossReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                  r.total, r.cc, r.recon, r.latent, r.c_adv, r.domain_adv, r.seg_x, r.seg_v,
                  r.f_adv, r.kl, r.d_src, r.d_tgt, r.d_content, r.d_feature);
    return buf;
}

std::string history_csv(const HistoryRow& row) {
    char buf[512];
    const auto& r = row.report;
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu",
                  row.epoch, r.dice_pct[0], r.dice_pct[1], r.dice_pct[2], r.mean_dice_pct,
                  r.assd_mm[0], r.assd_mm[1], r.assd_mm[2], r.mean_assd_mm, r.degenerate_count,
                  r.sample_count);
    return buf;
}

constexpr const char* kHistoryHeader =
    "epoch,dice_myo,dice_lv,dice_rv,dice_mean,assd_myo,assd_lv,assd_rv,assd_mean,"
    "degenerate,slices";

}  // namespace

PairItem<float> make_pair_item(const Image2D& x, const SegMask& x_mask, const Image2D& y) {
    PairItem<float> item;
    item.x = as_chw(x);
    item.x_onehot = one_hot(x_mask, kNumClasses);
    item.y = as_chw(y);
    return item;
}

SegMask infer(const ModelBundle<float>& m, const Image2D& image) {
    if (image.height() % 4 != 0 || image.width() % 4 != 0) {
        throw ShapeError("infer: image dims must be divisible by 4");
    }
    // guard against uninitialized / corrupted parameter loads
    for (float v : m.params.entries().front().var->value.data) {
        if (!std::isfinite(v)) throw InvalidStateError("infer: model parameters are not finite");
    }
    Var<float> x = make_const<float>(as_chw(image));
    Var<float> content = m.enc_content_tgt.fwd(x);
    Var<float> probs = m.seg.fwd(content);
    return argmax_mask(probs->value, image.spacing);
}

EvalReport evaluate_model(const ModelBundle<float>& m, const DatasetStore& eval_store,
                          Spacing spacing) {
    std::vector<SegMask> preds, gts;
    const std::size_t n = eval_store.count(Split::TargetEval);
    if (n == 0) throw ValueError("evaluate_model: empty eval split");
    for (std::size_t i = 0; i < n; ++i) {
        const LabeledSample& s = eval_store.target_eval(i);
        preds.push_back(infer(m, s.image));
        gts.push_back(s.mask);
    }
    return evaluate(preds, gts, spacing);
}

TrainOutputs train(const DatasetManifest& manifest, const TrainConfig& config,
                   const std::string& out_dir, const std::string& resume_from) {
    config.validate();
    DatasetStore store(manifest, DatasetStore::Access::TrainOnly);
    const std::size_t M = store.count(Split::Source);
    const std::size_t N = store.count(Split::TargetTrain);
    if (M == 0 || N == 0) throw ValueError("train: manifest must provide both domains");
    const std::size_t B = static_cast<std::size_t>(config.batch_size);
    if (B > M || B > N) throw ValueError("train: batch size exceeds a domain sample count");

    const Image2D& probe = store.source(0).image;
    NetworkSpec spec;
    spec.width_multiplier = config.width_multiplier;
    spec.image_size = probe.height();
    spec.share_full_content_encoder = config.no_adaptation;
    ModelBundle<float> model(spec, config.seed);

    Adam<float> opt_gen(model.params,
                        {{model.gen_group, config.lr_other}, {model.seg_group, config.lr_seg}},
                        config.adam_beta1, config.adam_beta2);
    Adam<float> opt_disc(model.params, {{model.disc_group, config.lr_other}},
                         config.adam_beta1, config.adam_beta2);

    int start_epoch = 0;
    const bool resuming = !resume_from.empty();
    if (resuming) {
        TrainerState st;
        load_checkpoint(resume_from, model.params, &st);
        st.adam_gen_m.resize(model.params.size());
        st.adam_gen_v.resize(model.params.size());
        st.adam_disc_m.resize(model.params.size());
        st.adam_disc_v.resize(model.params.size());
        opt_gen.moment1() = std::move(st.adam_gen_m);
        opt_gen.moment2() = std::move(st.adam_gen_v);
        opt_disc.moment1() = std::move(st.adam_disc_m);
        opt_disc.moment2() = std::move(st.adam_disc_v);
        opt_gen.set_step_count(st.adam_gen_t);
        opt_disc.set_step_count(st.adam_disc_t);
        start_epoch = st.next_epoch;
    }

    fs::create_directories(out_dir);
    TrainOutputs out;
    out.train_log_path = (fs::path(out_dir) / "train_log.csv").string();
    out.metrics_history_path = (fs::path(out_dir) / "metrics_history.csv").string();
    std::ofstream log(out.train_log_path,
                      resuming ? std::ios::app : std::ios::trunc);
    std::ofstream hist(out.metrics_history_path,
                       resuming ? std::ios::app : std::ios::trunc);
    if (!log || !hist) throw IoError("train: cannot open log files under " + out_dir);
    if (!resuming) {
        log << "epoch,step,lr_other,lr_seg," << LossReport::csv_header() << "\n";
        hist << kHistoryHeader << "\n";
    }

    // evaluation reads target labels through an explicitly eval-capable
    // store; the training loaders above cannot reach them
    std::unique_ptr<DatasetStore> eval_store;
    auto ensure_eval_store = [&]() -> DatasetStore& {
        if (!eval_store) {
            eval_store = std::make_unique<DatasetStore>(manifest, DatasetStore::Access::WithEval);
        }
        return *eval_store;
    };

    const StepOptions opt = StepOptions::from_config(config);
    const std::size_t steps_per_epoch = (std::max(M, N) + B - 1) / B;
    const std::size_t workers =
        config.num_workers > 0 ? static_cast<std::size_t>(config.num_workers) : 1;

    auto save_with_state = [&](const std::string& path, int next_epoch) {
        TrainerState st;
        st.next_epoch = next_epoch;
        st.adam_gen_t = opt_gen.step_count();
        st.adam_disc_t = opt_disc.step_count();
        st.adam_gen_m = opt_gen.moment1();
        st.adam_gen_v = opt_gen.moment2();
        st.adam_disc_m = opt_disc.moment1();
        st.adam_disc_v = opt_disc.moment2();
        save_checkpoint(path, model.params, &st, network_spec_to_json(spec));
    };

    char buf[256];
    for (int epoch = start_epoch; epoch < config.total_epochs(); ++epoch) {
        const double lr_scale = lr_at_epoch(config, epoch, 1.0);
        const auto src_order = store.epoch_order(Split::Source, config.seed,
                                                 static_cast<std::uint64_t>(epoch));
        const auto tgt_order = store.epoch_order(Split::TargetTrain, config.seed,
                                                 static_cast<std::uint64_t>(epoch));
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            std::vector<PairItem<float>> batch;
            batch.reserve(B);
            for (std::size_t j = 0; j < B; ++j) {
                const std::size_t flat = step * B + j;
                const std::uint64_t tag =
                    (static_cast<std::uint64_t>(epoch) << 24) | static_cast<std::uint64_t>(flat);
                LabeledSample s = augment(store.source(src_order[flat % M]),
                                          Rng::derive(config.seed, 0xa5, tag).next_u64(),
                                          config.augment);
                UnlabeledSample t = augment(store.target_train(tgt_order[flat % N]),
                                            Rng::derive(config.seed, 0xa6, tag).next_u64(),
                                            config.augment);
                batch.push_back(make_pair_item(s.image, s.mask, t.image));
            }
            const std::uint64_t step_seed =
                Rng::derive(config.seed, 0x57e9,
                            static_cast<std::uint64_t>(epoch) * steps_per_epoch + step)
                    .next_u64();
            out.last_report =
                train_step(model, opt_gen, opt_disc, batch, opt, lr_scale, step_seed, workers);
            std::snprintf(buf, sizeof(buf), "%d,%zu,%.8f,%.8f,", epoch, step,
                          config.lr_other * lr_scale, config.lr_seg * lr_scale);
            log << buf << report_csv(out.last_report) << "\n";
        }

        const bool last_epoch = epoch + 1 == config.total_epochs();
        if ((epoch + 1) % config.checkpoint_every == 0 || last_epoch) {
            HistoryRow row;
            row.epoch = epoch;
            row.report = evaluate_model(model, ensure_eval_store(), manifest.spacing);
            hist << history_csv(row) << "\n";
            hist.flush();
            out.history.push_back(row);
            std::snprintf(buf, sizeof(buf), "ckpt_epoch_%04d.sgdrckpt", epoch);
            save_with_state((fs::path(out_dir) / buf).string(), epoch + 1);
        }
        log.flush();
    }

    out.final_checkpoint = (fs::path(out_dir) / "checkpoint_final.sgdrckpt").string();
    save_with_state(out.final_checkpoint, config.total_epochs());
    return out;
}

}  // namespace sgdr
