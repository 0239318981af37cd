// Command-line front end: gen / render / train / eval / infer.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "pqvit/checkpoint.hpp"
#include "pqvit/dataset.hpp"
#include "pqvit/metrics.hpp"
#include "pqvit/raster.hpp"
#include "pqvit/trainer.hpp"

using namespace pqvit;

namespace {

void add_grid_flags(CLI::App* cmd, TimeGrid& grid) {
    cmd->add_option("--fs", grid.fs, "Sampling frequency, Hz");
    cmd->add_option("--f0", grid.f0, "Fundamental frequency, Hz");
    cmd->add_option("--n-samples", grid.n_samples, "Samples per signal");
}

void add_image_flags(CLI::App* cmd, ImageSpec& spec) {
    cmd->add_option("--height", spec.height, "Image height, px");
    cmd->add_option("--width", spec.width, "Image width, px");
    cmd->add_option("--y-min", spec.y_min, "Amplitude mapped to the bottom row, p.u.");
    cmd->add_option("--y-max", spec.y_max, "Amplitude mapped to the top row, p.u.");
}

int cmd_gen(const DatasetSpec& spec, const std::string& out) {
    DatasetManifest manifest = generate_dataset(spec, out);
    std::map<int, std::size_t> per_class, per_split_train;
    std::size_t n_train = 0, n_test = 0;
    for (const auto& e : manifest.entries) {
        ++per_class[e.class_id];
        (e.split == "train" ? n_train : n_test) += 1;
    }
    for (const auto& [cls, count] : per_class)
        std::cout << "class " << cls << " (" << class_name(class_from_id(cls))
                  << "): " << count << " samples\n";
    std::cout << "train: " << n_train << "  test: " << n_test << "  total: "
              << manifest.entries.size() << '\n';
    return 0;
}

int cmd_render(const std::string& dataset_dir, const ImageSpec& spec,
               const std::string& out_dir) {
    DatasetManifest manifest = load_manifest(dataset_dir);
    std::filesystem::create_directories(out_dir);
    for (const auto& e : manifest.entries) {
        Signal s;
        s.samples = read_signal(manifest, e);
        s.label = class_from_id(e.class_id);
        char name[64];
        std::snprintf(name, sizeof name, "%06zu_c%02d.pgm", e.index, e.class_id);
        write_pgm(rasterize(s, spec), std::filesystem::path(out_dir) / name);
    }
    std::cout << "wrote " << manifest.entries.size() << " images to " << out_dir << '\n';
    return 0;
}

int cmd_train(const std::string& dataset_dir, ViTConfig vit_cfg,
              const TrainConfig& train_cfg, ImageSpec image_spec,
              const std::string& out_dir) {
    DatasetManifest manifest = load_manifest(dataset_dir);
    vit_cfg.classes = manifest.spec.effective_classes().size();
    vit_cfg.image_h = image_spec.height;
    vit_cfg.image_w = image_spec.width;
    TrainResult result = train(manifest, vit_cfg, train_cfg, image_spec, out_dir);
    if (!result.history.epochs.empty())
        std::cout << "final eval accuracy: "
                  << result.history.epochs.back().eval_acc << '\n';
    std::cout << "checkpoint: " << (std::filesystem::path(out_dir) / "model.ckpt").string()
              << '\n';
    return 0;
}

int cmd_eval(const std::string& dataset_dir, const std::string& ckpt_path,
             const std::string& split, const std::string& out_dir) {
    DatasetManifest manifest = load_manifest(dataset_dir);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.params.config.image_h != ckpt.image_spec.height ||
        ckpt.params.config.image_w != ckpt.image_spec.width)
        throw std::runtime_error("eval: checkpoint image geometry is inconsistent");
    if (ckpt.params.config.classes != manifest.spec.effective_classes().size())
        throw std::runtime_error("eval: checkpoint class count does not match dataset");

    EvalResult r = evaluate(ckpt.params, manifest, split, ckpt.image_spec);
    MetricsReport report =
        metrics_report(r.truth, r.pred, ckpt.params.config.classes);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_confusion_csv(report.cm, dir / "confusion_counts.csv", false);
    write_confusion_csv(report.cm, dir / "confusion_percent.csv", true);
    write_per_class_csv(report.per_class, dir / "per_class.csv");
    write_summary_csv(report, dir / "summary.csv");

    std::cout << "accuracy: " << report.accuracy << '\n'
              << "precision_w: " << report.aggregate.precision << '\n'
              << "recall_w: " << report.aggregate.recall << '\n'
              << "f1_w: " << report.aggregate.f1 << '\n';
    return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& signal_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);

    std::ifstream f(signal_path, std::ios::binary);
    if (!f) throw std::runtime_error("infer: cannot open " + signal_path);
    f.seekg(0, std::ios::end);
    const std::size_t bytes = std::size_t(f.tellg());
    f.seekg(0);
    const std::size_t expect = ckpt.grid.n_samples * sizeof(float);
    if (bytes != expect)
        throw std::runtime_error("infer: signal file has " +
                                 std::to_string(bytes / sizeof(float)) +
                                 " samples, expected " +
                                 std::to_string(ckpt.grid.n_samples));
    std::vector<float> raw(ckpt.grid.n_samples);
    f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(bytes));

    Signal s;
    s.samples.assign(raw.begin(), raw.end());
    const Tensor input = to_model_input(rasterize(s, ckpt.image_spec));
    const std::vector<double> probs = forward_probs(ckpt.params, input);

    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    std::cout << "class: " << best;
    if (probs.size() == kNumClasses)
        std::cout << " (" << class_name(class_from_id(int(best))) << ")";
    std::cout << '\n';
    std::cout.precision(10);
    for (std::size_t i = 0; i < probs.size(); ++i)
        std::cout << "p[" << i << "] = " << probs[i] << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power-quality disturbance classification pipeline"};
    app.require_subcommand(1);

    // gen
    DatasetSpec gen_spec;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a labeled PQD dataset");
    gen->add_option("--per-class", gen_spec.per_class, "Samples per class");
    gen->add_option("--snr", gen_spec.snr_db, "Noise SNR, dB");
    gen->add_option("--seed", gen_spec.master_seed, "Master seed");
    gen->add_option("--train-frac", gen_spec.train_fraction, "Train split fraction");
    gen->add_option("--classes", gen_spec.class_ids, "Class id subset (default: all 17)");
    add_grid_flags(gen, gen_spec.grid);
    gen->add_option("--out", gen_out, "Output directory")->required();

    // render
    std::string render_dataset, render_out;
    ImageSpec render_spec;
    auto* render = app.add_subcommand("render", "Rasterize dataset signals to PGM images");
    render->add_option("--dataset", render_dataset, "Dataset directory")->required();
    render->add_option("--out", render_out, "Output directory")->required();
    add_image_flags(render, render_spec);

    // train
    std::string train_dataset, train_out;
    ViTConfig vit_cfg;
    TrainConfig train_cfg;
    ImageSpec train_image;
    auto* tr = app.add_subcommand("train", "Train the classifier");
    tr->add_option("--dataset", train_dataset, "Dataset directory")->required();
    tr->add_option("--out", train_out, "Output directory")->required();
    add_image_flags(tr, train_image);
    tr->add_option("--patch", vit_cfg.patch, "Patch size P");
    tr->add_option("--dim", vit_cfg.dim, "Hidden dimension D");
    tr->add_option("--layers", vit_cfg.layers, "Encoder layers L");
    tr->add_option("--heads", vit_cfg.heads, "Attention heads");
    tr->add_option("--mlp-ratio", vit_cfg.mlp_ratio, "MLP expansion ratio");
    tr->add_flag("--no-final-ln{false}", vit_cfg.final_ln, "Disable the final LN");
    tr->add_option("--init-seed", vit_cfg.init_seed, "Weight init seed");
    tr->add_option("--epochs", train_cfg.epochs, "Training epochs");
    tr->add_option("--batch", train_cfg.train_batch, "Train batch size");
    tr->add_option("--eval-batch", train_cfg.eval_batch, "Eval batch size");
    tr->add_option("--lr", train_cfg.learning_rate, "Learning rate");
    tr->add_option("--wd", train_cfg.weight_decay, "Weight decay");
    tr->add_option("--seed", train_cfg.seed, "Shuffle seed");
    tr->add_option("--ckpt-every", train_cfg.checkpoint_every,
                   "Cadence checkpoints every N epochs (0 = final only)");

    // eval
    std::string eval_dataset, eval_ckpt, eval_split = "test", eval_out;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint and export metrics");
    ev->add_option("--dataset", eval_dataset, "Dataset directory")->required();
    ev->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    ev->add_option("--split", eval_split, "Dataset split to score");
    ev->add_option("--out", eval_out, "Output directory")->required();

    // infer
    std::string infer_ckpt, infer_signal;
    auto* in = app.add_subcommand("infer", "Classify one raw signal file");
    in->add_option("--checkpoint", infer_ckpt, "Checkpoint file")->required();
    in->add_option("--signal", infer_signal, "Raw float32 LE signal file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
        if (render->parsed()) return cmd_render(render_dataset, render_spec, render_out);
        if (tr->parsed())
            return cmd_train(train_dataset, vit_cfg, train_cfg, train_image, train_out);
        if (ev->parsed()) return cmd_eval(eval_dataset, eval_ckpt, eval_split, eval_out);
        if (in->parsed()) return cmd_infer(infer_ckpt, infer_signal);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
