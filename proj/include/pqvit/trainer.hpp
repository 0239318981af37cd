#pragma once

#include <map>
#include <optional>
#include <string>

#include "pqvit/checkpoint.hpp"
#include "pqvit/dataset.hpp"

namespace pqvit {

struct AdamState {
    std::size_t step = 0;
    std::map<std::string, Tensor> m, v;
};

// Decoupled-weight-decay Adam step with bias correction. Decay only touches
// matrix weights (LN parameters, biases, class token and position embeddings
// are excluded) and is scaled by the learning rate.
void adamw_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                AdamState& state, const TrainConfig& hyper);

struct TrainResult {
    Checkpoint checkpoint;
    TrainHistory history;
};

// Mini-batch training over the manifest's train split, evaluating on the
// test split each epoch. Rasterization uses `image_spec`. Checkpoints go to
// out_dir ("model.ckpt" plus cadence files); pass an empty path to skip
// writing. Fully deterministic in (configs, seeds, dataset).
TrainResult train(const DatasetManifest& manifest, const ViTConfig& model_config,
                  const TrainConfig& train_config, const ImageSpec& image_spec,
                  const std::filesystem::path& out_dir);

// Forward the whole split and return (accuracy, predictions).
struct EvalResult {
    double accuracy = 0.0;
    std::vector<int> truth, pred;
};
EvalResult evaluate(const ModelParams& params, const DatasetManifest& manifest,
                    const std::string& split, const ImageSpec& image_spec);

struct GradCheckReport {
    struct TensorEntry {
        std::string name;
        std::size_t coords_checked = 0;
        double max_rel_err = 0.0;
    };
    std::vector<TensorEntry> tensors;
    double max_rel_err = 0.0;
    bool passed = false;
};

// Compares tape gradients of the cross-entropy loss on one sample against
// central finite differences at randomly chosen coordinates of every
// trainable tensor.
GradCheckReport grad_check(const ViTConfig& config, const Tensor& image,
                           std::size_t label, double tolerance,
                           std::size_t coords_per_tensor = 20,
                           std::uint64_t seed = 1, double h = 1e-5);

}  // namespace pqvit
