#include "pqvit/vit.hpp"

#include <cmath>
#include <stdexcept>

#include "pqvit/rng.hpp"

namespace pqvit {

void ViTConfig::validate() const {
    if (patch == 0 || image_h % patch != 0 || image_w % patch != 0)
        throw std::invalid_argument("ViTConfig: image dimensions must be divisible by patch size");
    if (channels != 1)
        throw std::invalid_argument("ViTConfig: only grayscale input supported");
    if (heads == 0 || dim % heads != 0)
        throw std::invalid_argument("ViTConfig: dim must be divisible by heads");
    if (layers == 0 || classes < 2 || mlp_ratio == 0)
        throw std::invalid_argument("ViTConfig: degenerate architecture");
}

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&,
                                                    bool)>& fn) {
    fn("embed.proj", patch_embed, true);
    fn("embed.pos", pos_embed, false);  // never weight-decayed
    fn("embed.cls", cls_token, false);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerParams& lp = layers[l];
        fn(p + "ln1.gamma", lp.ln1_gamma, false);
        fn(p + "ln1.beta", lp.ln1_beta, false);
        fn(p + "attn.wq", lp.wq, true);
        fn(p + "attn.bq", lp.bq, false);
        fn(p + "attn.wk", lp.wk, true);
        fn(p + "attn.bk", lp.bk, false);
        fn(p + "attn.wv", lp.wv, true);
        fn(p + "attn.bv", lp.bv, false);
        fn(p + "attn.wo", lp.wo, true);
        fn(p + "attn.bo", lp.bo, false);
        fn(p + "ln2.gamma", lp.ln2_gamma, false);
        fn(p + "ln2.beta", lp.ln2_beta, false);
        fn(p + "mlp.w1", lp.w1, true);
        fn(p + "mlp.b1", lp.b1, false);
        fn(p + "mlp.w2", lp.w2, true);
        fn(p + "mlp.b2", lp.b2, false);
    }
    if (config.final_ln) {
        fn("final_ln.gamma", final_gamma, false);
        fn("final_ln.beta", final_beta, false);
    }
    fn("head.w", head_w, true);
    fn("head.b", head_b, false);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&,
                                                    bool)>& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const std::string& n, Tensor& t, bool d) { fn(n, t, d); });
}

ModelParams init_model(const ViTConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t D = config.dim, N = config.num_patches();

    ModelParams m;
    m.config = config;
    m.patch_embed = Tensor({config.patch_dim(), D});
    m.pos_embed = Tensor({N + 1, D});
    m.cls_token = Tensor({1, D});
    m.layers.resize(config.layers);
    for (auto& lp : m.layers) {
        lp.ln1_gamma = Tensor::full({D}, 1.0);
        lp.ln1_beta = Tensor({D});
        lp.wq = Tensor({D, D});
        lp.bq = Tensor({D});
        lp.wk = Tensor({D, D});
        lp.bk = Tensor({D});
        lp.wv = Tensor({D, D});
        lp.bv = Tensor({D});
        lp.wo = Tensor({D, D});
        lp.bo = Tensor({D});
        lp.ln2_gamma = Tensor::full({D}, 1.0);
        lp.ln2_beta = Tensor({D});
        lp.w1 = Tensor({D, config.mlp_dim()});
        lp.b1 = Tensor({config.mlp_dim()});
        lp.w2 = Tensor({config.mlp_dim(), D});
        lp.b2 = Tensor({D});
    }
    m.final_gamma = Tensor::full({D}, 1.0);
    m.final_beta = Tensor({D});
    m.head_w = Tensor({D, config.classes});
    m.head_b = Tensor({config.classes});

    // One stream in visitation order keeps the draw deterministic.
    Rng rng(seed);
    m.for_each([&](const std::string& name, Tensor& t, bool decay) {
        // Matrix weights and position embeddings get random init; biases,
        // LN parameters and the class token stay at their set values.
        if (!decay && name != "embed.pos") return;
        for (auto& v : t.vec()) v = rng.truncated_normal(0.02);
    });
    return m;
}

Tensor patchify(const Tensor& image, std::size_t patch) {
    if (image.rank() != 2)
        throw std::invalid_argument("patchify: expected rank-2 image");
    const std::size_t h = image.shape()[0], w = image.shape()[1];
    if (patch == 0 || h % patch != 0 || w % patch != 0)
        throw std::invalid_argument("patchify: image dimensions not divisible by patch");
    const std::size_t ph = h / patch, pw = w / patch;
    Tensor out({ph * pw, patch * patch});
    std::size_t p = 0;
    for (std::size_t pi = 0; pi < ph; ++pi)
        for (std::size_t pj = 0; pj < pw; ++pj, ++p)
            for (std::size_t i = 0; i < patch; ++i)
                for (std::size_t j = 0; j < patch; ++j)
                    out.at(p, i * patch + j) = image.at(pi * patch + i, pj * patch + j);
    return out;
}

Tensor unpatchify(const Tensor& patches, std::size_t image_h, std::size_t image_w,
                  std::size_t patch) {
    const std::size_t ph = image_h / patch, pw = image_w / patch;
    if (patches.rank() != 2 || patches.shape()[0] != ph * pw ||
        patches.shape()[1] != patch * patch)
        throw std::invalid_argument("unpatchify: shape mismatch");
    Tensor img({image_h, image_w});
    std::size_t p = 0;
    for (std::size_t pi = 0; pi < ph; ++pi)
        for (std::size_t pj = 0; pj < pw; ++pj, ++p)
            for (std::size_t i = 0; i < patch; ++i)
                for (std::size_t j = 0; j < patch; ++j)
                    img.at(pi * patch + i, pj * patch + j) = patches.at(p, i * patch + j);
    return img;
}

Tensor embed_tokens(const ModelParams& params, const Tensor& patches) {
    const std::size_t n = patches.shape()[0], d = params.config.dim;
    if (patches.shape()[1] != params.config.patch_dim() ||
        n != params.config.num_patches())
        throw std::invalid_argument("embed_tokens: patch shape mismatch");
    Tensor proj = matmul(patches, params.patch_embed);
    Tensor z({n + 1, d});
    for (std::size_t j = 0; j < d; ++j) z.at(0, j) = params.cls_token[j];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z.at(i + 1, j) = proj.at(i, j);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += params.pos_embed[i];
    return z;
}

void ParamNodes::for_each(const std::function<void(const std::string&, Tape::NodeId)>& fn) const {
    fn("embed.proj", patch_embed);
    fn("embed.pos", pos_embed);
    fn("embed.cls", cls_token);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        const Layer& lp = layers[l];
        fn(p + "ln1.gamma", lp.ln1_gamma);
        fn(p + "ln1.beta", lp.ln1_beta);
        fn(p + "attn.wq", lp.wq);
        fn(p + "attn.bq", lp.bq);
        fn(p + "attn.wk", lp.wk);
        fn(p + "attn.bk", lp.bk);
        fn(p + "attn.wv", lp.wv);
        fn(p + "attn.bv", lp.bv);
        fn(p + "attn.wo", lp.wo);
        fn(p + "attn.bo", lp.bo);
        fn(p + "ln2.gamma", lp.ln2_gamma);
        fn(p + "ln2.beta", lp.ln2_beta);
        fn(p + "mlp.w1", lp.w1);
        fn(p + "mlp.b1", lp.b1);
        fn(p + "mlp.w2", lp.w2);
        fn(p + "mlp.b2", lp.b2);
    }
    fn("final_ln.gamma", final_gamma);
    fn("final_ln.beta", final_beta);
    fn("head.w", head_w);
    fn("head.b", head_b);
}

ParamNodes register_params(Tape& tape, const ModelParams& params) {
    ParamNodes n;
    n.patch_embed = tape.input(params.patch_embed);
    n.pos_embed = tape.input(params.pos_embed);
    n.cls_token = tape.input(params.cls_token);
    for (const auto& lp : params.layers) {
        ParamNodes::Layer l;
        l.ln1_gamma = tape.input(lp.ln1_gamma);
        l.ln1_beta = tape.input(lp.ln1_beta);
        l.wq = tape.input(lp.wq);
        l.bq = tape.input(lp.bq);
        l.wk = tape.input(lp.wk);
        l.bk = tape.input(lp.bk);
        l.wv = tape.input(lp.wv);
        l.bv = tape.input(lp.bv);
        l.wo = tape.input(lp.wo);
        l.bo = tape.input(lp.bo);
        l.ln2_gamma = tape.input(lp.ln2_gamma);
        l.ln2_beta = tape.input(lp.ln2_beta);
        l.w1 = tape.input(lp.w1);
        l.b1 = tape.input(lp.b1);
        l.w2 = tape.input(lp.w2);
        l.b2 = tape.input(lp.b2);
        n.layers.push_back(l);
    }
    n.final_gamma = tape.input(params.final_gamma);
    n.final_beta = tape.input(params.final_beta);
    n.head_w = tape.input(params.head_w);
    n.head_b = tape.input(params.head_b);
    return n;
}

Tape::NodeId forward_logits(Tape& tape, const ParamNodes& nodes,
                            const ViTConfig& config, const Tensor& image,
                            std::vector<Tensor>* attention_out) {
    config.validate();
    if (image.rank() != 2 || image.shape()[0] != config.image_h ||
        image.shape()[1] != config.image_w)
        throw std::invalid_argument("forward_logits: image does not match config geometry");

    const std::size_t dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(double(dh));

    Tape::NodeId patches = tape.input(patchify(image, config.patch));
    Tape::NodeId x = tape.matmul(patches, nodes.patch_embed);      // N x D
    Tape::NodeId z = tape.concat_rows({nodes.cls_token, x});       // (N+1) x D
    z = tape.add(z, nodes.pos_embed);

    for (const auto& l : nodes.layers) {
        // z' = MSA(LN(z)) + z
        Tape::NodeId h = tape.layer_norm(z, l.ln1_gamma, l.ln1_beta, kLayerNormEps);
        Tape::NodeId q = tape.add_rowvec(tape.matmul(h, l.wq), l.bq);
        Tape::NodeId k = tape.add_rowvec(tape.matmul(h, l.wk), l.bk);
        Tape::NodeId v = tape.add_rowvec(tape.matmul(h, l.wv), l.bv);
        std::vector<Tape::NodeId> head_outs;
        for (std::size_t hh = 0; hh < config.heads; ++hh) {
            Tape::NodeId qh = tape.slice_cols(q, hh * dh, dh);
            Tape::NodeId kh = tape.slice_cols(k, hh * dh, dh);
            Tape::NodeId vh = tape.slice_cols(v, hh * dh, dh);
            Tape::NodeId att = tape.softmax_rows(
                tape.scale(tape.matmul(qh, tape.transpose(kh)), scale));
            if (attention_out) attention_out->push_back(tape.value(att));
            // column-concat expressed through transposes
            head_outs.push_back(tape.transpose(tape.matmul(att, vh)));
        }
        Tape::NodeId cat = tape.transpose(tape.concat_rows(head_outs));
        Tape::NodeId msa = tape.add_rowvec(tape.matmul(cat, l.wo), l.bo);
        z = tape.add(z, msa);

        // z = MLP(LN(z')) + z'
        Tape::NodeId h2 = tape.layer_norm(z, l.ln2_gamma, l.ln2_beta, kLayerNormEps);
        Tape::NodeId m1 = tape.gelu(tape.add_rowvec(tape.matmul(h2, l.w1), l.b1));
        Tape::NodeId m2 = tape.add_rowvec(tape.matmul(m1, l.w2), l.b2);
        z = tape.add(z, m2);
    }

    if (config.final_ln)
        z = tape.layer_norm(z, nodes.final_gamma, nodes.final_beta, kLayerNormEps);
    Tape::NodeId cls = tape.slice_rows(z, 0, 1);  // z_L^0
    return tape.add_rowvec(tape.matmul(cls, nodes.head_w), nodes.head_b);
}

std::vector<double> forward_probs(const ModelParams& params, const Tensor& image) {
    Tape tape;
    ParamNodes nodes = register_params(tape, params);
    Tape::NodeId logits = forward_logits(tape, nodes, params.config, image);
    Tensor probs = softmax_rows(tape.value(logits));
    return probs.vec();
}

}  // namespace pqvit
