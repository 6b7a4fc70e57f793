#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "segt/model_config.hpp"
#include "segt/optimizer.hpp"
#include "segt/params.hpp"

namespace segt {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ModelParams<float> params;
    std::optional<AdamWState> optimizer;
    std::size_t epoch = 0;
    nlohmann::json metrics;       // validation metrics at `epoch`, null if none
    nlohmann::json train_config;  // settings that produced it, null if unknown

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Layout: "SEGC", u32 version, u64 header length, UTF-8 JSON header, then
/// float32 blobs; all little-endian. The header holds the model config, epoch,
/// metrics and a tensor directory of {name, dims, offset} with offsets
/// relative to the first blob. Optimizer moments are stored as
/// "adam.m.<name>" / "adam.v.<name>".
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// FormatError on a bad magic, malformed header, or out-of-range or truncated
/// blobs; ConfigMismatch when tensor shapes disagree with the stored config.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace segt
