#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pqvit/raster.hpp"
#include "pqvit/signal.hpp"
#include "pqvit/vit.hpp"

namespace pqvit {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t train_batch = 32;
    std::size_t eval_batch = 8;
    double learning_rate = 1e-4;
    double weight_decay = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // epochs between cadence checkpoints, 0 = final only

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double eval_acc = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    void write_csv(const std::filesystem::path& path) const;
};

struct Checkpoint {
    ModelParams params;
    ImageSpec image_spec;
    TimeGrid grid;
    TrainConfig train;
    TrainHistory history;
};

// Layout: "PQVT" magic, u32 version, u64 length-prefixed JSON header with the
// config fields and history, then one record per named tensor:
// u64 name length + bytes, u64 rank, u64 dims, row-major f32 data (all LE).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pqvit
