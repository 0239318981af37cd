#include "pqvit/dataset.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "pqvit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "signal file format is little-endian");

namespace pqvit {

using ordered_json = nlohmann::ordered_json;

std::vector<int> DatasetSpec::effective_classes() const {
    if (!class_ids.empty()) return class_ids;
    std::vector<int> all(kNumClasses);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

void DatasetSpec::validate() const {
    grid.validate();
    if (per_class == 0) throw std::invalid_argument("DatasetSpec: per_class must be > 0");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw std::invalid_argument("DatasetSpec: train_fraction must be in [0, 1]");
    for (int id : class_ids) class_from_id(id);
}

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& name) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == name) out.push_back(&e);
    return out;
}

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;  // "noise"

ordered_json params_to_json(const DisturbanceParams& p) {
    const ClassTraits tr = class_traits(p.cls);
    ordered_json j;
    j["phase0"] = p.phase0;
    if (tr.windowed()) {
        j["t1"] = p.t1;
        j["t2"] = p.t2;
    }
    if (tr.sag) j["alpha"] = p.alpha;
    if (tr.swell) j["beta"] = p.beta;
    if (tr.harmonics) {
        j["harmonic_amps"] = p.harmonic_amps;
        j["harmonic_phases"] = p.harmonic_phases;
    }
    if (tr.flicker) {
        j["lambda"] = p.lambda;
        j["f_flicker"] = p.f_flicker;
    }
    if (tr.transient) {
        j["k_tr"] = p.k_tr;
        j["f_tr"] = p.f_tr;
        j["tau_tr"] = p.tau_tr;
    }
    if (tr.spike) {
        j["k_tr"] = p.k_tr;
        j["spike_width"] = p.spike_width;
        j["spike_starts"] = p.spike_starts;
    }
    if (tr.notch) {
        j["k_notch"] = p.k_notch;
        j["notch_width"] = p.notch_width;
        j["notch_phase"] = p.notch_phase;
    }
    return j;
}

DisturbanceParams params_from_json(DisturbanceClass cls, const ordered_json& j) {
    DisturbanceParams p;
    p.cls = cls;
    p.phase0 = j.at("phase0").get<double>();
    auto opt = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j.at(key).get<double>();
    };
    opt("t1", p.t1);
    opt("t2", p.t2);
    opt("alpha", p.alpha);
    opt("beta", p.beta);
    opt("lambda", p.lambda);
    opt("f_flicker", p.f_flicker);
    opt("k_tr", p.k_tr);
    opt("f_tr", p.f_tr);
    opt("tau_tr", p.tau_tr);
    opt("k_notch", p.k_notch);
    opt("notch_width", p.notch_width);
    opt("notch_phase", p.notch_phase);
    opt("spike_width", p.spike_width);
    if (j.contains("harmonic_amps")) {
        j.at("harmonic_amps").get_to(p.harmonic_amps);
        j.at("harmonic_phases").get_to(p.harmonic_phases);
    }
    if (j.contains("spike_starts")) j.at("spike_starts").get_to(p.spike_starts);
    return p;
}

}  // namespace

Signal generate_sample(const DatasetSpec& spec, int class_id, std::size_t index) {
    const std::uint64_t seed =
        Rng::derive_seed(spec.master_seed, std::uint64_t(class_id), index);
    const DisturbanceClass cls = class_from_id(class_id);
    const DisturbanceParams params = sample_params(cls, seed, spec.grid);
    Signal clean = synthesize_clean(cls, params, spec.grid);
    Signal noisy = add_awgn(clean, spec.snr_db, Rng::mix(seed ^ kNoiseSalt));
    noisy.seed = seed;
    return noisy;
}

DatasetManifest generate_dataset(const DatasetSpec& spec,
                                 const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    const std::vector<int> classes = spec.effective_classes();
    const std::size_t total = classes.size() * spec.per_class;

    // Deterministic shuffle decides only the split assignment; file layout
    // stays in canonical (class-major) order so per-sample content is
    // independent of generation order.
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    {
        Rng rng(Rng::mix(spec.master_seed ^ 0x73706c6974ULL));  // "split"
        for (std::size_t i = total; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    const std::size_t n_train =
        std::size_t(std::llround(spec.train_fraction * double(total)));
    std::vector<std::string> split(total);
    for (std::size_t r = 0; r < total; ++r)
        split[order[r]] = r < n_train ? "train" : "test";

    DatasetManifest manifest;
    manifest.dir = out_dir;
    manifest.spec = spec;

    std::ofstream sig(out_dir / kSignalFileName, std::ios::binary | std::ios::trunc);
    std::ofstream man(out_dir / kManifestFileName, std::ios::binary | std::ios::trunc);
    if (!sig || !man)
        throw std::runtime_error("generate_dataset: cannot write to " + out_dir.string());

    const std::size_t record_bytes = spec.grid.n_samples * sizeof(float);
    std::vector<float> rec(spec.grid.n_samples);
    std::size_t global = 0;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        for (std::size_t i = 0; i < spec.per_class; ++i, ++global) {
            Signal s = generate_sample(spec, classes[ci], i);
            for (std::size_t k = 0; k < rec.size(); ++k) rec[k] = float(s.samples[k]);
            sig.write(reinterpret_cast<const char*>(rec.data()),
                      std::streamsize(record_bytes));

            ManifestEntry e;
            e.index = global;
            e.class_id = classes[ci];
            e.split = split[global];
            e.seed = s.seed;
            e.byte_offset = global * record_bytes;
            e.params = s.params;

            ordered_json j;
            j["index"] = e.index;
            j["class_id"] = e.class_id;
            j["split"] = e.split;
            j["seed"] = e.seed;
            j["byte_offset"] = e.byte_offset;
            j["params"] = params_to_json(e.params);
            man << j.dump() << '\n';
            manifest.entries.push_back(std::move(e));
        }
    }
    sig.close();
    man.close();
    if (!sig || !man)
        throw std::runtime_error("generate_dataset: write failed in " + out_dir.string());

    ordered_json meta;
    meta["rng"] = Rng::kAlgorithm;
    meta["fs"] = spec.grid.fs;
    meta["f0"] = spec.grid.f0;
    meta["n_samples"] = spec.grid.n_samples;
    meta["snr_db"] = spec.snr_db;
    meta["per_class"] = spec.per_class;
    meta["master_seed"] = spec.master_seed;
    meta["train_fraction"] = spec.train_fraction;
    meta["class_ids"] = classes;
    std::ofstream mf(out_dir / kMetaFileName, std::ios::binary | std::ios::trunc);
    mf << meta.dump(2) << '\n';
    if (!mf) throw std::runtime_error("generate_dataset: cannot write meta.json");
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
    std::ifstream mf(dir / kMetaFileName);
    if (!mf) throw std::runtime_error("load_manifest: missing " +
                                      (dir / kMetaFileName).string());
    ordered_json meta = ordered_json::parse(mf);

    DatasetManifest manifest;
    manifest.dir = dir;
    manifest.spec.grid.fs = meta.at("fs").get<double>();
    manifest.spec.grid.f0 = meta.at("f0").get<double>();
    manifest.spec.grid.n_samples = meta.at("n_samples").get<std::size_t>();
    manifest.spec.snr_db = meta.at("snr_db").get<double>();
    manifest.spec.per_class = meta.at("per_class").get<std::size_t>();
    manifest.spec.master_seed = meta.at("master_seed").get<std::uint64_t>();
    manifest.spec.train_fraction = meta.at("train_fraction").get<double>();
    meta.at("class_ids").get_to(manifest.spec.class_ids);

    std::ifstream man(dir / kManifestFileName);
    if (!man) throw std::runtime_error("load_manifest: missing " +
                                       (dir / kManifestFileName).string());
    std::string line;
    while (std::getline(man, line)) {
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line);
        ManifestEntry e;
        e.index = j.at("index").get<std::size_t>();
        e.class_id = j.at("class_id").get<int>();
        e.split = j.at("split").get<std::string>();
        e.seed = j.at("seed").get<std::uint64_t>();
        e.byte_offset = j.at("byte_offset").get<std::uint64_t>();
        e.params = params_from_json(class_from_id(e.class_id), j.at("params"));
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

std::vector<double> read_signal(const DatasetManifest& manifest,
                                const ManifestEntry& entry) {
    std::ifstream sig(manifest.dir / kSignalFileName, std::ios::binary);
    if (!sig)
        throw std::runtime_error("read_signal: missing " +
                                 (manifest.dir / kSignalFileName).string());
    sig.seekg(std::streamoff(entry.byte_offset));
    std::vector<float> rec(manifest.spec.grid.n_samples);
    sig.read(reinterpret_cast<char*>(rec.data()),
             std::streamsize(rec.size() * sizeof(float)));
    if (!sig)
        throw std::runtime_error("read_signal: truncated record at index " +
                                 std::to_string(entry.index));
    return std::vector<double>(rec.begin(), rec.end());
}

}  // namespace pqvit
