#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pqvit/tape.hpp"
#include "pqvit/tensor.hpp"

namespace pqvit {

inline constexpr double kLayerNormEps = 1e-6;

struct ViTConfig {
    std::size_t image_h = 224;
    std::size_t image_w = 224;
    std::size_t channels = 1;
    std::size_t patch = 16;
    std::size_t dim = 64;        // D
    std::size_t layers = 2;      // L
    std::size_t heads = 4;       // h
    std::size_t mlp_ratio = 4;
    std::size_t classes = 17;    // K
    bool final_ln = true;
    std::uint64_t init_seed = 0;

    std::size_t patch_dim() const { return patch * patch * channels; }
    std::size_t num_patches() const { return (image_h / patch) * (image_w / patch); }
    std::size_t head_dim() const { return dim / heads; }
    std::size_t mlp_dim() const { return mlp_ratio * dim; }
    void validate() const;
};

struct LayerParams {
    Tensor ln1_gamma, ln1_beta;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gamma, ln2_beta;
    Tensor w1, b1, w2, b2;
};

struct ModelParams {
    ViTConfig config;
    Tensor patch_embed;  // (P^2*C) x D
    Tensor pos_embed;    // (N+1) x D
    Tensor cls_token;    // 1 x D
    std::vector<LayerParams> layers;
    Tensor final_gamma, final_beta;
    Tensor head_w;  // D x K
    Tensor head_b;  // K

    // Visits every trainable tensor in a fixed order. `decay` marks tensors
    // subject to weight decay (matrix weights only).
    void for_each(const std::function<void(const std::string& name, Tensor& t,
                                           bool decay)>& fn);
    void for_each(const std::function<void(const std::string& name, const Tensor& t,
                                           bool decay)>& fn) const;
};

// Truncated-normal(0, 0.02, +-2 sigma) weights, zero biases/class token,
// unit LN gains; deterministic in seed.
ModelParams init_model(const ViTConfig& config, std::uint64_t seed);

// Row-major non-overlapping P x P patches of a flattened H x W image;
// within a patch pixels stay row-major.
Tensor patchify(const Tensor& image, std::size_t patch);
Tensor unpatchify(const Tensor& patches, std::size_t image_h, std::size_t image_w,
                  std::size_t patch);

// Eq.-1 embedding without the tape: [cls; patches * E] + E_pos.
Tensor embed_tokens(const ModelParams& params, const Tensor& patches);

// Tape node handles for one registration of the model parameters, shared by
// every forward built on the same tape.
struct ParamNodes {
    Tape::NodeId patch_embed, pos_embed, cls_token;
    struct Layer {
        Tape::NodeId ln1_gamma, ln1_beta;
        Tape::NodeId wq, bq, wk, bk, wv, bv, wo, bo;
        Tape::NodeId ln2_gamma, ln2_beta;
        Tape::NodeId w1, b1, w2, b2;
    };
    std::vector<Layer> layers;
    Tape::NodeId final_gamma, final_beta;
    Tape::NodeId head_w, head_b;

    void for_each(const std::function<void(const std::string&, Tape::NodeId)>& fn) const;
};

ParamNodes register_params(Tape& tape, const ModelParams& params);

// Class-token embedding (Eq. 1), L pre-LN encoder layers (Eqs. 2-3) and the
// affine head; returns the 1 x K logits node. Softmax/cross-entropy are left
// to the caller. If `attention_out` is given, the per-layer per-head
// attention matrices are copied into it.
Tape::NodeId forward_logits(Tape& tape, const ParamNodes& nodes,
                            const ViTConfig& config, const Tensor& image,
                            std::vector<Tensor>* attention_out = nullptr);

// Convenience inference path: probabilities (Eq. 4) on a throwaway tape.
std::vector<double> forward_probs(const ModelParams& params, const Tensor& image);

}  // namespace pqvit
