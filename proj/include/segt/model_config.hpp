#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace segt {

/// Sampling, segmentation and segment-convolution settings.
struct ConversionConfig {
    std::size_t steps = 1;                       // downsampling steps; scales = steps + 1
    std::vector<std::size_t> segment_lengths{16, 8};
    std::size_t kernel = 3;                      // neighbouring segments seen by the segment conv (odd)
    std::size_t d_model = 128;

    friend bool operator==(const ConversionConfig&, const ConversionConfig&) = default;
};

struct DgsaConfig {
    std::vector<std::size_t> group_sizes{8, 8};  // short-group size per scale
    std::size_t num_blocks = 2;

    friend bool operator==(const DgsaConfig&, const DgsaConfig&) = default;
};

/// Everything needed to rebuild the network's parameter shapes.
struct ModelConfig {
    std::size_t embed_dim = 320;
    ConversionConfig conversion;
    DgsaConfig dgsa;
    std::size_t pool_hidden = 64;
    // Per-scale outputs are target_scale * head + target_mean (°C).
    double target_mean = 0.0;
    double target_scale = 1.0;

    std::size_t scales() const noexcept { return conversion.steps + 1; }
    /// Residues covered by one segment at `scale` (l_i * 2^i).
    std::size_t residue_span(std::size_t scale) const;
    /// Shortest sequence giving every scale at least one segment.
    std::size_t min_length() const;
    /// Throws ConfigMismatch describing the first violated constraint.
    void validate() const;

    /// Small configuration used across tests.
    static ModelConfig toy(std::size_t embed_dim = 16);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

} // namespace segt
