// Command-line entry point: dataset generation, training, evaluation,
// ablation sweeps and plot emission. All outputs land under a single --out
// directory; every run writes a manifest that is sufficient to reproduce it.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sgdr/errors.hpp"
#include "sgdr/plots.hpp"
#include "sgdr/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sgdr;

namespace {

#ifndef SGDR_REVISION
#define SGDR_REVISION "unknown"
#endif

std::string manifest_path_of(const std::string& data) {
    fs::path p(data);
    if (fs::is_directory(p)) p /= "manifest.json";
    return p.string();
}

// flag > config file > default
struct TrainCliArgs {
    std::string data, out, config_file, resume;
    TrainConfig cfg;
    CLI::App* cmd = nullptr;

    void add_options(CLI::App& app) {
        cmd = app.add_subcommand("train", "train a model on a generated dataset");
        cmd->add_option("--data", data, "dataset directory or manifest.json")->required();
        cmd->add_option("--out", out, "output directory")->required();
        cmd->add_option("--config", config_file, "JSON config file (TrainConfig fields)");
        cmd->add_option("--resume", resume, "checkpoint to resume from");
        cmd->add_option("--epochs-constant", cfg.epochs_constant);
        cmd->add_option("--epochs-decay", cfg.epochs_decay);
        cmd->add_option("--batch-size", cfg.batch_size);
        cmd->add_option("--lr-seg", cfg.lr_seg);
        cmd->add_option("--lr-other", cfg.lr_other);
        cmd->add_option("--seed", cfg.seed);
        cmd->add_option("--checkpoint-every", cfg.checkpoint_every);
        cmd->add_option("--width", cfg.width_multiplier, "network width multiplier");
        cmd->add_option("--lambda-cc", cfg.weights.lambda_cc);
        cmd->add_option("--lambda-recon", cfg.weights.lambda_recon);
        cmd->add_option("--lambda-latent", cfg.weights.lambda_latent);
        cmd->add_option("--lambda-c-adv", cfg.weights.lambda_c_adv);
        cmd->add_option("--lambda-domain-adv", cfg.weights.lambda_domain_adv);
        cmd->add_option("--lambda-seg", cfg.weights.lambda_seg);
        cmd->add_option("--lambda-f-adv", cfg.weights.lambda_f_adv);
        cmd->add_option("--lambda-kl", cfg.weights.lambda_kl);
        cmd->add_option("--num-workers", cfg.num_workers);
        cmd->add_flag("--ablate-content-disc", "disable the content discriminator");
        cmd->add_flag("--ablate-feature-disc", "disable the feature discriminator");
        cmd->add_flag("--ablate-lv-seg", "disable the translated-image segmentation loss");
        cmd->add_flag("--no-adaptation",
                      "source-only baseline: translation disabled, only the source "
                      "segmentation loss is optimized");
        cmd->add_flag("--feature-adv-log-form", "literal log form of the feature adversary");
        cmd->add_flag("--stop-grad-at-v", "cut the gradient path into the translation");
        cmd->add_flag("--no-augment", "disable training-time augmentation");
    }

    TrainConfig resolve() const {
        TrainConfig out_cfg = TrainConfig::desk_scale();
        if (!config_file.empty()) out_cfg = TrainConfig::load_file(config_file);
        auto take = [&](const char* flag, auto member) {
            if (cmd->count(flag)) out_cfg.*member = cfg.*member;
        };
        take("--epochs-constant", &TrainConfig::epochs_constant);
        take("--epochs-decay", &TrainConfig::epochs_decay);
        take("--batch-size", &TrainConfig::batch_size);
        take("--lr-seg", &TrainConfig::lr_seg);
        take("--lr-other", &TrainConfig::lr_other);
        take("--seed", &TrainConfig::seed);
        take("--checkpoint-every", &TrainConfig::checkpoint_every);
        take("--width", &TrainConfig::width_multiplier);
        take("--num-workers", &TrainConfig::num_workers);
        auto take_w = [&](const char* flag, auto member) {
            if (cmd->count(flag)) out_cfg.weights.*member = cfg.weights.*member;
        };
        take_w("--lambda-cc", &LossWeights::lambda_cc);
        take_w("--lambda-recon", &LossWeights::lambda_recon);
        take_w("--lambda-latent", &LossWeights::lambda_latent);
        take_w("--lambda-c-adv", &LossWeights::lambda_c_adv);
        take_w("--lambda-domain-adv", &LossWeights::lambda_domain_adv);
        take_w("--lambda-seg", &LossWeights::lambda_seg);
        take_w("--lambda-f-adv", &LossWeights::lambda_f_adv);
        take_w("--lambda-kl", &LossWeights::lambda_kl);
        if (cmd->count("--ablate-content-disc")) out_cfg.ablation.use_content_discriminator = false;
        if (cmd->count("--ablate-feature-disc")) out_cfg.ablation.use_feature_discriminator = false;
        if (cmd->count("--ablate-lv-seg")) out_cfg.ablation.use_lv_seg = false;
        if (cmd->count("--no-adaptation")) out_cfg.no_adaptation = true;
        if (cmd->count("--feature-adv-log-form")) out_cfg.feature_adv_literal_log = true;
        if (cmd->count("--stop-grad-at-v")) out_cfg.stop_gradient_at_v = true;
        if (cmd->count("--no-augment")) out_cfg.augment = AugmentConfig::disabled();
        return out_cfg;
    }
};

void write_run_manifest(const std::string& out_dir, const TrainConfig& cfg,
                        const std::string& data_manifest) {
    json j;
    j["config"] = json::parse(cfg.to_json());
    j["revision"] = SGDR_REVISION;
    j["seed"] = cfg.seed;
    j["data_manifest"] = data_manifest;
    j["outputs"] = {{"train_log", "train_log.csv"},
                    {"metrics_history", "metrics_history.csv"},
                    {"final_checkpoint", "checkpoint_final.sgdrckpt"}};
    j["started_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    std::ofstream os(fs::path(out_dir) / "run_manifest.json");
    os << j.dump(2) << "\n";
}

int run_train(const TrainCliArgs& args) {
    const TrainConfig cfg = args.resolve();
    const auto manifest = DatasetManifest::load(manifest_path_of(args.data));
    fs::create_directories(args.out);
    write_run_manifest(args.out, cfg, manifest_path_of(args.data));
    const auto t0 = std::chrono::steady_clock::now();
    TrainOutputs outs = train(manifest, cfg, args.out, args.resume);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        json t;
        t["wall_clock_seconds"] = secs;
        std::ofstream os(fs::path(args.out) / "timings.json");
        os << t.dump(2) << "\n";
    }
    if (!outs.history.empty()) {
        std::cout << outs.history.back().report.table();
    }
    std::cout << "final checkpoint: " << outs.final_checkpoint << "\n";
    return 0;
}

ModelBundle<float> load_bundle(const std::string& checkpoint) {
    NetworkSpec spec = network_spec_from_json(read_checkpoint_meta(checkpoint));
    ModelBundle<float> m(spec, 0);
    load_checkpoint(checkpoint, m.params);
    return m;
}

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& out_dir) {
    const auto manifest = DatasetManifest::load(manifest_path_of(data));
    ModelBundle<float> m = load_bundle(checkpoint);
    DatasetStore eval_store(manifest, DatasetStore::Access::WithEval);
    EvalReport rep = evaluate_model(m, eval_store, manifest.spacing);
    std::cout << rep.table();
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / "eval_report.json");
    os << rep.to_json() << "\n";
    std::ofstream ts(fs::path(out_dir) / "eval_report.txt");
    ts << rep.table();
    std::cout << "report: " << (fs::path(out_dir) / "eval_report.json").string() << "\n";
    return 0;
}

int run_ablate(const std::string& data, const std::string& out_dir,
               const std::string& config_file) {
    TrainConfig base =
        config_file.empty() ? TrainConfig::desk_scale() : TrainConfig::load_file(config_file);
    const auto manifest = DatasetManifest::load(manifest_path_of(data));
    struct Row {
        std::string name;
        TrainConfig cfg;
        EvalReport rep;
    };
    std::vector<Row> rows;
    {
        TrainConfig c = base;
        c.no_adaptation = true;
        rows.push_back({"no_adaptation", c, {}});
    }
    {
        TrainConfig c = base;
        c.ablation.use_content_discriminator = false;
        rows.push_back({"sgdr_wo_content_discriminator", c, {}});
    }
    {
        TrainConfig c = base;
        c.ablation.use_feature_discriminator = false;
        rows.push_back({"sgdr_wo_feature_discriminator", c, {}});
    }
    {
        TrainConfig c = base;
        c.ablation.use_lv_seg = false;
        rows.push_back({"sgdr_wo_lv_seg", c, {}});
    }
    rows.push_back({"sgdr_full", base, {}});

    fs::create_directories(out_dir);
    for (auto& row : rows) {
        const std::string run_dir = (fs::path(out_dir) / row.name).string();
        std::cout << "=== " << row.name << " ===\n";
        fs::create_directories(run_dir);
        write_run_manifest(run_dir, row.cfg, manifest_path_of(data));
        TrainOutputs outs = train(manifest, row.cfg, run_dir);
        row.rep = outs.history.back().report;
        std::cout << row.rep.table();
    }

    std::string table = "variant                          mean_dice(%)  mean_assd(mm)\n";
    json jrows = json::array();
    for (const auto& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-32s %9.2f %10.2f\n", row.name.c_str(),
                      row.rep.mean_dice_pct, row.rep.mean_assd_mm);
        table += buf;
        jrows.push_back({{"variant", row.name},
                         {"mean_dice_pct", row.rep.mean_dice_pct},
                         {"mean_assd_mm", row.rep.mean_assd_mm},
                         {"report", json::parse(row.rep.to_json())}});
    }
    std::cout << table;
    std::ofstream ts(fs::path(out_dir) / "ablation_table.txt");
    ts << table;
    std::ofstream js(fs::path(out_dir) / "ablation_results.json");
    js << jrows.dump(2) << "\n";
    return 0;
}

Image2D tensor_to_image(const Tensor<float>& chw, Spacing spacing) {
    Image2D img;
    img.pixels = Tensor<float>({chw.dim(1), chw.dim(2)});
    img.pixels.data = chw.data;
    img.spacing = spacing;
    return img;
}

int run_plot(const std::string& log_path, const std::string& history_path,
             const std::string& checkpoint, const std::string& data,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    const CsvTable log = CsvTable::load(log_path);
    if (log.rows.empty()) throw ValueError("plot: training log has no rows");

    std::vector<double> xs(log.rows.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    auto curve = [&](const char* col, Color c) { return Series{col, xs, log.column(col), c}; };
    const Color blue{40, 80, 255}, green{30, 160, 60}, red{220, 60, 40}, orange{235, 150, 30},
        purple{150, 60, 200}, teal{0, 160, 170}, gray{120, 120, 120}, dark{40, 40, 40};

    render_line_chart((fs::path(out_dir) / "loss_total.png").string(), "TOTAL LOSS",
                      {curve("total", dark)});
    render_line_chart((fs::path(out_dir) / "loss_seg.png").string(), "SEGMENTATION LOSSES",
                      {curve("seg_x", blue), curve("seg_v", orange)});
    render_line_chart((fs::path(out_dir) / "loss_adv.png").string(), "ADVERSARIAL LOSSES",
                      {curve("c_adv", blue), curve("domain_adv", green), curve("f_adv", red),
                       curve("d_src", gray), curve("d_tgt", teal), curve("d_content", purple),
                       curve("d_feature", orange)});
    render_line_chart((fs::path(out_dir) / "loss_recon.png").string(),
                      "RECONSTRUCTION AND LATENT LOSSES",
                      {curve("cc", blue), curve("recon", green), curve("latent", purple),
                       curve("kl", gray)});

    if (!history_path.empty()) {
        const CsvTable hist = CsvTable::load(history_path);
        if (!hist.rows.empty()) {
            const auto ep = hist.column("epoch");
            render_line_chart((fs::path(out_dir) / "metrics_dice.png").string(),
                              "DICE (%) PER CLASS",
                              {{"MYO", ep, hist.column("dice_myo"), blue},
                               {"LV", ep, hist.column("dice_lv"), green},
                               {"RV", ep, hist.column("dice_rv"), red},
                               {"MEAN", ep, hist.column("dice_mean"), dark}});
            render_line_chart((fs::path(out_dir) / "metrics_assd.png").string(),
                              "ASSD (MM) PER CLASS",
                              {{"MYO", ep, hist.column("assd_myo"), blue},
                               {"LV", ep, hist.column("assd_lv"), green},
                               {"RV", ep, hist.column("assd_rv"), red},
                               {"MEAN", ep, hist.column("assd_mean"), dark}});
        }
    }

    if (!checkpoint.empty() && !data.empty()) {
        const auto manifest = DatasetManifest::load(manifest_path_of(data));
        ModelBundle<float> m = load_bundle(checkpoint);
        DatasetStore store(manifest, DatasetStore::Access::WithEval);

        // qualitative grid: target image | prediction | ground truth
        const int scale = 2;
        const std::size_t n = std::min<std::size_t>(4, store.count(Split::TargetEval));
        const int H = store.target_eval(0).image.height();
        const int W = store.target_eval(0).image.width();
        const int pad = 6, header = 14;
        Canvas grid(3 * (W * scale + pad) + pad,
                    header + static_cast<int>(n) * (H * scale + pad), {245, 245, 245});
        grid.text(pad, 3, "IMAGE", {0, 0, 0});
        grid.text(W * scale + 2 * pad, 3, "PREDICTION", {0, 0, 0});
        grid.text(2 * (W * scale + pad) + pad, 3, "GROUND TRUTH", {0, 0, 0});
        for (std::size_t i = 0; i < n; ++i) {
            const LabeledSample& s = store.target_eval(i);
            SegMask pred = infer(m, s.image);
            const int y0 = header + static_cast<int>(i) * (H * scale + pad);
            Canvas raw = image_canvas(s.image, scale);
            grid.blit(raw, pad, y0);
            Canvas with_pred = raw;
            overlay_mask(with_pred, pred, scale);
            grid.blit(with_pred, W * scale + 2 * pad, y0);
            Canvas with_gt = raw;
            overlay_mask(with_gt, s.mask, scale);
            grid.blit(with_gt, 2 * (W * scale + pad) + pad, y0);
        }
        write_png((fs::path(out_dir) / "qualitative_grid.png").string(), grid);

        // translation grid: originals, translations, self- and cycle-reconstructions
        if (store.count(Split::Source) > 0 && store.count(Split::TargetTrain) > 0) {
            const LabeledSample& sx = store.source(0);
            const UnlabeledSample& ty = store.target_train(0);
            PairItem<float> item = make_pair_item(sx.image, sx.mask, ty.image);
            StepOptions opt;
            PairForward<float> pf = forward_pair(m, item, Rng::derive(1234, 1), opt);
            const Spacing sp = manifest.spacing;
            struct Cell {
                const char* label;
                Tensor<float> t;
            };
            const std::vector<std::vector<Cell>> panel = {
                {{"X", item.x},
                 {"V (X AS TARGET)", pf.v->value},
                 {"X SELF", pf.x_hat->value},
                 {"X CYCLE", pf.x_cyc->value}},
                {{"Y", item.y},
                 {"U (Y AS SOURCE)", pf.u->value},
                 {"Y SELF", pf.y_hat->value},
                 {"Y CYCLE", pf.y_cyc->value}}};
            Canvas tgrid(4 * (W * scale + pad) + pad, 2 * (H * scale + pad + header) + pad,
                         {245, 245, 245});
            for (std::size_t r = 0; r < panel.size(); ++r) {
                for (std::size_t c = 0; c < panel[r].size(); ++c) {
                    const int x0 = static_cast<int>(c) * (W * scale + pad) + pad;
                    const int y0 = static_cast<int>(r) * (H * scale + pad + header) + header;
                    tgrid.text(x0, y0 - 10, panel[r][c].label, {0, 0, 0});
                    tgrid.blit(image_canvas(tensor_to_image(panel[r][c].t, sp), scale), x0, y0);
                }
            }
            write_png((fs::path(out_dir) / "translation_grid.png").string(), tgrid);
        }
    }
    std::cout << "plots written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"style/content disentangling domain-adaptive segmentation toolkit"};
    app.require_subcommand(1);

    std::string gd_out;
    PhantomSpec gd_spec = PhantomSpec::defaults();
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic two-modality benchmark");
    gen->add_option("--out", gd_out, "output directory")->required();
    gen->add_option("--size", gd_spec.image_size, "image size (divisible by 4)");
    gen->add_option("--n-source", gd_spec.num_source, "labeled source samples");
    gen->add_option("--n-target", gd_spec.num_target, "unlabeled target samples");
    gen->add_option("--n-eval", gd_spec.num_eval_target, "held-out labeled target samples");
    gen->add_option("--seed", gd_spec.anatomy_seed, "generation seed");

    TrainCliArgs train_args;
    train_args.add_options(app);

    std::string ev_ckpt, ev_data, ev_out;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the held-out target split");
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--out", ev_out)->required();

    std::string ab_data, ab_out, ab_config;
    auto* ab = app.add_subcommand("ablate", "run the component-ablation sweep");
    ab->add_option("--data", ab_data)->required();
    ab->add_option("--out", ab_out)->required();
    ab->add_option("--config", ab_config, "JSON config for every variant");

    std::string pl_log, pl_hist, pl_ckpt, pl_data, pl_out;
    auto* pl = app.add_subcommand("plot", "emit loss curves, metric curves and image panels");
    pl->add_option("--log", pl_log, "train_log.csv")->required();
    pl->add_option("--history", pl_hist, "metrics_history.csv");
    pl->add_option("--checkpoint", pl_ckpt, "checkpoint for image panels");
    pl->add_option("--data", pl_data, "dataset for image panels");
    pl->add_option("--out", pl_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            DatasetManifest m = build_dataset(gd_spec, gd_out);
            std::cout << "manifest: " << (fs::path(gd_out) / "manifest.json").string() << "\n";
            std::cout << "source=" << m.source_files.size()
                      << " target_train=" << m.target_train_files.size()
                      << " target_eval=" << m.target_eval_files.size() << "\n";
            return 0;
        }
        if (train_args.cmd->parsed()) return run_train(train_args);
        if (ev->parsed()) return run_eval(ev_ckpt, ev_data, ev_out);
        if (ab->parsed()) return run_ablate(ab_data, ab_out, ab_config);
        if (pl->parsed()) return run_plot(pl_log, pl_hist, pl_ckpt, pl_data, pl_out);
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
