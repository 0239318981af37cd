#include "pqvit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pqvit/rng.hpp"

namespace pqvit {

void adamw_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                AdamState& state, const TrainConfig& hyper) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, double(state.step));

    params.for_each([&](const std::string& name, Tensor& p, bool decay) {
        auto git = grads.find(name);
        if (git == grads.end())
            throw std::invalid_argument("adamw_step: missing gradient for " + name);
        const Tensor& g = git->second;
        if (!g.same_shape(p))
            throw std::invalid_argument("adamw_step: gradient shape mismatch for " + name);

        Tensor& m = state.m.try_emplace(name, Tensor::zeros(p.shape())).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor::zeros(p.shape())).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.adam_eps);
            if (decay) p[i] -= hyper.learning_rate * hyper.weight_decay * p[i];
        }
    });
}

namespace {

struct PreparedSample {
    Tensor input;  // H x W in [-1, 1]
    std::size_t label = 0;
};

std::vector<PreparedSample> prepare_split(const DatasetManifest& manifest,
                                          const std::string& split,
                                          const ImageSpec& image_spec,
                                          const std::map<int, std::size_t>& label_map) {
    std::vector<PreparedSample> out;
    for (const ManifestEntry* e : manifest.split(split)) {
        Signal s;
        s.samples = read_signal(manifest, *e);
        s.label = class_from_id(e->class_id);
        PreparedSample ps;
        ps.input = to_model_input(rasterize(s, image_spec));
        ps.label = label_map.at(e->class_id);
        out.push_back(std::move(ps));
    }
    return out;
}

std::size_t argmax(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

}  // namespace

TrainResult train(const DatasetManifest& manifest, const ViTConfig& model_config,
                  const TrainConfig& train_config, const ImageSpec& image_spec,
                  const std::filesystem::path& out_dir) {
    model_config.validate();
    train_config.validate();

    // Class ids map onto contiguous model labels in manifest class order.
    const std::vector<int> classes = manifest.spec.effective_classes();
    if (model_config.classes != classes.size())
        throw std::invalid_argument("train: model class count " +
                                    std::to_string(model_config.classes) +
                                    " does not match dataset's " +
                                    std::to_string(classes.size()));
    std::map<int, std::size_t> label_map;
    for (std::size_t i = 0; i < classes.size(); ++i) label_map[classes[i]] = i;

    std::vector<PreparedSample> train_set =
        prepare_split(manifest, "train", image_spec, label_map);
    std::vector<PreparedSample> test_set =
        prepare_split(manifest, "test", image_spec, label_map);
    if (train_set.empty())
        throw std::invalid_argument("train: dataset has an empty train split");

    ModelParams params = init_model(model_config, model_config.init_seed);
    AdamState opt;
    TrainHistory history;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    auto write_ckpt = [&](const std::filesystem::path& path) {
        Checkpoint c;
        c.params = params;
        c.image_spec = image_spec;
        c.grid = manifest.spec.grid;
        c.train = train_config;
        c.history = history;
        save_checkpoint(c, path);
    };

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto t_start = std::chrono::steady_clock::now();

        // Per-epoch deterministic shuffle.
        Rng shuffle_rng(Rng::derive_seed(train_config.seed, 0x65706f6368ULL, epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += train_config.train_batch) {
            const std::size_t bsz =
                std::min(train_config.train_batch, order.size() - b0);
            Tape tape;
            ParamNodes nodes = register_params(tape, params);
            std::vector<Tape::NodeId> losses;
            for (std::size_t i = 0; i < bsz; ++i) {
                const PreparedSample& s = train_set[order[b0 + i]];
                Tape::NodeId logits = forward_logits(tape, nodes, model_config, s.input);
                if (argmax(tape.value(logits)) == s.label) ++correct;
                losses.push_back(tape.cross_entropy(logits, s.label));
            }
            Tape::NodeId batch_loss = losses[0];
            for (std::size_t i = 1; i < losses.size(); ++i)
                batch_loss = tape.add(batch_loss, losses[i]);
            batch_loss = tape.scale(batch_loss, 1.0 / double(bsz));

            const double loss = tape.value(batch_loss)[0];
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(b0 / train_config.train_batch));
            loss_sum += loss * double(bsz);

            tape.backward(batch_loss);
            std::map<std::string, Tensor> grads;
            nodes.for_each([&](const std::string& name, Tape::NodeId id) {
                grads.emplace(name, tape.grad(id));
            });
            adamw_step(params, grads, opt, train_config);
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / double(train_set.size());
        rec.train_acc = double(correct) / double(train_set.size());
        if (!test_set.empty()) {
            std::size_t ok = 0;
            for (const auto& s : test_set) {
                Tape tape;
                ParamNodes nodes = register_params(tape, params);
                Tape::NodeId logits = forward_logits(tape, nodes, model_config, s.input);
                if (argmax(tape.value(logits)) == s.label) ++ok;
            }
            rec.eval_acc = double(ok) / double(test_set.size());
        }
        rec.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
        history.epochs.push_back(rec);

        if (!out_dir.empty() && train_config.checkpoint_every > 0 &&
            (epoch + 1) % train_config.checkpoint_every == 0 &&
            epoch + 1 < train_config.epochs)
            write_ckpt(out_dir / ("model_epoch" + std::to_string(epoch + 1) + ".ckpt"));
    }

    TrainResult result;
    result.history = history;
    result.checkpoint.params = std::move(params);
    result.checkpoint.image_spec = image_spec;
    result.checkpoint.grid = manifest.spec.grid;
    result.checkpoint.train = train_config;
    result.checkpoint.history = history;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_checkpoint(result.checkpoint, out_dir / "model.ckpt");
        history.write_csv(out_dir / "history.csv");
    }
    return result;
}

EvalResult evaluate(const ModelParams& params, const DatasetManifest& manifest,
                    const std::string& split, const ImageSpec& image_spec) {
    const std::vector<int> classes = manifest.spec.effective_classes();
    std::map<int, std::size_t> label_map;
    for (std::size_t i = 0; i < classes.size(); ++i) label_map[classes[i]] = i;

    EvalResult r;
    std::size_t ok = 0;
    for (const ManifestEntry* e : manifest.split(split)) {
        Signal s;
        s.samples = read_signal(manifest, *e);
        s.label = class_from_id(e->class_id);
        const Tensor input = to_model_input(rasterize(s, image_spec));
        const std::vector<double> probs = forward_probs(params, input);
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = i;
        r.truth.push_back(int(label_map.at(e->class_id)));
        r.pred.push_back(int(best));
        if (best == label_map.at(e->class_id)) ++ok;
    }
    r.accuracy = r.truth.empty() ? 0.0 : double(ok) / double(r.truth.size());
    return r;
}

GradCheckReport grad_check(const ViTConfig& config, const Tensor& image,
                           std::size_t label, double tolerance,
                           std::size_t coords_per_tensor, std::uint64_t seed,
                           double h) {
    ModelParams params = init_model(config, config.init_seed);

    auto loss_at = [&](const ModelParams& p) {
        Tape tape;
        ParamNodes nodes = register_params(tape, p);
        Tape::NodeId logits = forward_logits(tape, nodes, config, image);
        return tape.value(tape.cross_entropy(logits, label))[0];
    };

    // Analytic gradients once.
    std::map<std::string, Tensor> analytic;
    {
        Tape tape;
        ParamNodes nodes = register_params(tape, params);
        Tape::NodeId logits = forward_logits(tape, nodes, config, image);
        Tape::NodeId loss = tape.cross_entropy(logits, label);
        tape.backward(loss);
        nodes.for_each([&](const std::string& name, Tape::NodeId id) {
            analytic.emplace(name, tape.grad(id));
        });
    }

    GradCheckReport report;
    Rng rng(seed);
    params.for_each([&](const std::string& name, Tensor& t, bool) {
        GradCheckReport::TensorEntry entry;
        entry.name = name;
        const Tensor& g = analytic.at(name);
        const std::size_t n_coords = std::min(coords_per_tensor, t.size());
        for (std::size_t c = 0; c < n_coords; ++c) {
            const std::size_t i =
                t.size() <= coords_per_tensor ? c : rng.uniform_int(t.size());
            const double orig = t[i];
            t[i] = orig + h;
            const double lp = loss_at(params);
            t[i] = orig - h;
            const double lm = loss_at(params);
            t[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = g[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
            const double rel = std::abs(fd - an) / denom;
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
            ++entry.coords_checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.tensors.push_back(std::move(entry));
    });
    report.passed = report.max_rel_err < tolerance;
    return report;
}

}  // namespace pqvit
