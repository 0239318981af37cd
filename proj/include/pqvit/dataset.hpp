#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pqvit/signal.hpp"

namespace pqvit {

struct DatasetSpec {
    std::size_t per_class = 2;
    double snr_db = 30.0;
    std::uint64_t master_seed = 0;
    double train_fraction = 0.8;
    TimeGrid grid;
    std::vector<int> class_ids;  // empty means all 17

    std::vector<int> effective_classes() const;
    void validate() const;
};

struct ManifestEntry {
    std::size_t index = 0;
    int class_id = 0;
    std::string split;  // "train" or "test"
    std::uint64_t seed = 0;
    std::uint64_t byte_offset = 0;
    DisturbanceParams params;
};

struct DatasetManifest {
    std::filesystem::path dir;
    DatasetSpec spec;
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split(const std::string& name) const;
};

inline constexpr const char* kSignalFileName = "signals.f32";
inline constexpr const char* kManifestFileName = "manifest.jsonl";
inline constexpr const char* kMetaFileName = "meta.json";

// Synthesizes per_class noisy signals for every class, writes the packed
// float32 signal file plus JSONL manifest, and returns the manifest.
// Everything is a pure function of the spec, so reruns are byte-identical.
DatasetManifest generate_dataset(const DatasetSpec& spec,
                                 const std::filesystem::path& out_dir);

DatasetManifest load_manifest(const std::filesystem::path& dir);

std::vector<double> read_signal(const DatasetManifest& manifest,
                                const ManifestEntry& entry);

// The deterministic per-sample generation, exposed for tests: params seed and
// noise seed both derive from (master_seed, class, index).
Signal generate_sample(const DatasetSpec& spec, int class_id, std::size_t index);

}  // namespace pqvit
