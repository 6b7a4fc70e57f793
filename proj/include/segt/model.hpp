#pragma once

#include <string>
#include <vector>

#include "segt/conversion.hpp"
#include "segt/dgsa.hpp"
#include "segt/embedding_io.hpp"
#include "segt/params.hpp"
#include "segt/prediction_head.hpp"

namespace segt {

/// Handles to every intermediate of one forward pass.
struct ForwardGraph {
    std::vector<ScaleGeometry> geometry;
    std::vector<Var> segments;   // Y_i   [B, N_i, D]
    std::vector<Var> attended;   // Ŷ_i   [B, N_i, D]
    std::vector<Var> pooled;     // z_i   [B, D]
    std::vector<Var> alphas;     // α_i   [B, N_i]
    std::vector<Var> per_scale;  // ŷ_i   [B, 1], °C
    Var y_hat;                   // mean of per_scale, [B, 1]
};

/// Conversion -> DGSA stack -> pooling and per-scale readout for x [B, L, D].
template <typename T>
ForwardGraph build_forward(Tape<T>& tape, Var x, const ModelConfig& config, const ParamVars& params);

/// Reads sample `b` of a finished graph into a Prediction.
template <typename T>
Prediction read_prediction(const Tape<T>& tape, const ForwardGraph& graph, std::size_t b);

enum class FeatureStage { segments, dgsa, pooled };

/// Parses "segments" | "dgsa" | "pooled"; throws Error otherwise.
FeatureStage parse_feature_stage(const std::string& name);

/// Configuration plus float parameters; inference is const and thread safe.
class Model {
public:
    Model(ModelConfig config, ModelParams<float> params);

    const ModelConfig& config() const noexcept { return config_; }
    const ModelParams<float>& params() const noexcept { return params_; }

    /// Throws ConfigMismatch on a D mismatch, SequenceTooShort if L is too small.
    Prediction predict(const ResidueEmbedding& embedding) const;

    /// Same-length embeddings run as one batch.
    std::vector<Prediction> predict_batch(const std::vector<ResidueEmbedding>& batch) const;

    /// Per-scale feature vectors concatenated: z_i for `pooled`, the segment
    /// mean of Y_i / Ŷ_i for `segments` / `dgsa`. Width d_model * scales.
    std::vector<double> features(const ResidueEmbedding& embedding, FeatureStage stage) const;

private:
    void check_input(const ResidueEmbedding& embedding) const;

    ModelConfig config_;
    ModelParams<float> params_;
};

} // namespace segt
