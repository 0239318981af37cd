#include "pqvit/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace pqvit {

using ordered_json = nlohmann::ordered_json;

void TrainConfig::validate() const {
    if (train_batch == 0 || eval_batch == 0)
        throw std::invalid_argument("TrainConfig: batch sizes must be positive");
    if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0))
        throw std::invalid_argument("TrainConfig: lr and weight decay must be nonnegative");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: moment coefficients must lie in [0, 1)");
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("TrainHistory: cannot write " + path.string());
    f << "epoch,train_loss,train_acc,eval_acc,seconds\n";
    f.precision(10);
    for (const auto& e : epochs)
        f << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ','
          << e.eval_acc << ',' << e.seconds << '\n';
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

ordered_json header_json(const Checkpoint& c) {
    ordered_json j;
    j["magic"] = "PQVT";
    j["version"] = kCheckpointVersion;
    const ViTConfig& v = c.params.config;
    j["vit"] = {{"image_h", v.image_h}, {"image_w", v.image_w},
                {"channels", v.channels}, {"patch", v.patch},
                {"dim", v.dim},         {"layers", v.layers},
                {"heads", v.heads},     {"mlp_ratio", v.mlp_ratio},
                {"classes", v.classes}, {"final_ln", v.final_ln},
                {"init_seed", v.init_seed}};
    j["image"] = {{"height", c.image_spec.height}, {"width", c.image_spec.width},
                  {"channels", c.image_spec.channels},
                  {"y_min", c.image_spec.y_min},   {"y_max", c.image_spec.y_max},
                  {"line_value", c.image_spec.line_value},
                  {"bg_value", c.image_spec.bg_value}};
    j["grid"] = {{"fs", c.grid.fs}, {"f0", c.grid.f0}, {"n_samples", c.grid.n_samples}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"train_batch", c.train.train_batch},
                  {"eval_batch", c.train.eval_batch},
                  {"learning_rate", c.train.learning_rate},
                  {"weight_decay", c.train.weight_decay},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"adam_eps", c.train.adam_eps},
                  {"seed", c.train.seed}};
    ordered_json hist = ordered_json::array();
    for (const auto& e : c.history.epochs)
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_acc", e.train_acc},
                        {"eval_acc", e.eval_acc},
                        {"seconds", e.seconds}});
    j["history"] = hist;
    return j;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    const std::string header = header_json(ckpt).dump();
    f.write("PQVT", 4);
    const std::uint32_t ver = kCheckpointVersion;
    f.write(reinterpret_cast<const char*>(&ver), 4);
    write_u64(f, header.size());
    f.write(header.data(), std::streamsize(header.size()));

    ckpt.params.for_each([&](const std::string& name, const Tensor& t, bool) {
        write_u64(f, name.size());
        f.write(name.data(), std::streamsize(name.size()));
        write_u64(f, t.rank());
        for (std::size_t d : t.shape()) write_u64(f, d);
        std::vector<float> data(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) data[i] = float(t[i]);
        f.write(reinterpret_cast<const char*>(data.data()),
                std::streamsize(data.size() * sizeof(float)));
    });
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "PQVT")
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    std::uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(ver));

    const std::uint64_t hlen = read_u64(f);
    std::string header(hlen, '\0');
    f.read(header.data(), std::streamsize(hlen));
    ordered_json j = ordered_json::parse(header);

    Checkpoint c;
    const auto& v = j.at("vit");
    ViTConfig cfg;
    cfg.image_h = v.at("image_h").get<std::size_t>();
    cfg.image_w = v.at("image_w").get<std::size_t>();
    cfg.channels = v.at("channels").get<std::size_t>();
    cfg.patch = v.at("patch").get<std::size_t>();
    cfg.dim = v.at("dim").get<std::size_t>();
    cfg.layers = v.at("layers").get<std::size_t>();
    cfg.heads = v.at("heads").get<std::size_t>();
    cfg.mlp_ratio = v.at("mlp_ratio").get<std::size_t>();
    cfg.classes = v.at("classes").get<std::size_t>();
    cfg.final_ln = v.at("final_ln").get<bool>();
    cfg.init_seed = v.at("init_seed").get<std::uint64_t>();

    const auto& im = j.at("image");
    c.image_spec.height = im.at("height").get<std::size_t>();
    c.image_spec.width = im.at("width").get<std::size_t>();
    c.image_spec.channels = im.at("channels").get<std::size_t>();
    c.image_spec.y_min = im.at("y_min").get<double>();
    c.image_spec.y_max = im.at("y_max").get<double>();
    c.image_spec.line_value = im.at("line_value").get<double>();
    c.image_spec.bg_value = im.at("bg_value").get<double>();

    const auto& g = j.at("grid");
    c.grid.fs = g.at("fs").get<double>();
    c.grid.f0 = g.at("f0").get<double>();
    c.grid.n_samples = g.at("n_samples").get<std::size_t>();

    const auto& t = j.at("train");
    c.train.epochs = t.at("epochs").get<std::size_t>();
    c.train.train_batch = t.at("train_batch").get<std::size_t>();
    c.train.eval_batch = t.at("eval_batch").get<std::size_t>();
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.weight_decay = t.at("weight_decay").get<double>();
    c.train.beta1 = t.at("beta1").get<double>();
    c.train.beta2 = t.at("beta2").get<double>();
    c.train.adam_eps = t.at("adam_eps").get<double>();
    c.train.seed = t.at("seed").get<std::uint64_t>();

    for (const auto& e : j.at("history")) {
        EpochRecord r;
        r.epoch = e.at("epoch").get<std::size_t>();
        r.train_loss = e.at("train_loss").get<double>();
        r.train_acc = e.at("train_acc").get<double>();
        r.eval_acc = e.at("eval_acc").get<double>();
        r.seconds = e.at("seconds").get<double>();
        c.history.epochs.push_back(r);
    }

    // Read tensor records into a name map, then pour them into the params
    // structure built from the config.
    std::map<std::string, Tensor> tensors;
    for (;;) {
        const std::uint64_t nlen = read_u64(f);
        if (!f || f.eof()) break;
        std::string name(nlen, '\0');
        f.read(name.data(), std::streamsize(nlen));
        const std::uint64_t rank = read_u64(f);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = read_u64(f);
        std::vector<float> data(Tensor::count(shape));
        f.read(reinterpret_cast<char*>(data.data()),
               std::streamsize(data.size() * sizeof(float)));
        if (!f) throw std::runtime_error("load_checkpoint: truncated tensor " + name);
        Tensor tens(shape);
        for (std::size_t i = 0; i < data.size(); ++i) tens[i] = double(data[i]);
        tensors.emplace(std::move(name), std::move(tens));
    }

    c.params = init_model(cfg, cfg.init_seed);
    c.params.for_each([&](const std::string& name, Tensor& dst, bool) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("load_checkpoint: missing tensor " + name);
        if (it->second.shape() != dst.shape())
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
        dst = std::move(it->second);
    });
    return c;
}

}  // namespace pqvit
