#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "segt/checkpoint.hpp"
#include "segt/dataset.hpp"
#include "segt/embedding_io.hpp"
#include "segt/metrics.hpp"
#include "segt/model_config.hpp"
#include "segt/optimizer.hpp"

namespace segt {

struct TrainConfig {
    AdamWConfig optimizer;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 64;
    std::size_t eval_every = 8;
    std::uint64_t seed = 0;
    /// Interval weights for the loss; built from the training labels when absent.
    std::optional<WeightTable> weight_table;
    /// Set the model's target_mean / target_scale from the training labels.
    bool normalize_targets = true;

    /// Throws Error on an invalid setting.
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LabeledEmbedding {
    ResidueEmbedding embedding;
    double temperature = 0.0;
};

using EmbeddingLookup = std::function<std::optional<ResidueEmbedding>(const std::string& accession)>;

/// Embeddings for the records assigned to `subset`, in dataset order.
/// Throws MissingInput for the first record without an embedding.
std::vector<LabeledEmbedding> gather_examples(const std::vector<DatasetRecord>& records,
                                              const std::vector<SplitEntry>& split, Subset subset,
                                              const EmbeddingLookup& lookup);

/// Lookup reading files listed in an embedding manifest on demand.
EmbeddingLookup manifest_lookup(const std::vector<ManifestEntry>& manifest);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::optional<EvalReport> validation;
};

/// One JSON object {epoch, train_loss, val_rmse, val_mae, val_pearson, val_spearman};
/// validation fields are null on epochs without evaluation.
nlohmann::json to_json(const EpochLog& log);

struct TrainResult {
    Checkpoint best;   // lowest validation RMSE, earliest epoch on ties
    Checkpoint last;   // state after the final epoch
    std::vector<EpochLog> history;
};

/// Seeded mini-batch training. Each batch runs one forward per sample on a
/// shared tape and minimizes the weighted RMSE of the batch. Validation runs
/// every `eval_every` epochs and after the final epoch. When `log` is given,
/// every epoch appends one JSON line.
TrainResult train(const std::vector<LabeledEmbedding>& train_set, const std::vector<LabeledEmbedding>& validation_set,
                  ModelConfig model_config, const TrainConfig& train_config, std::ostream* log = nullptr);

/// Predictions of `params` on `examples` scored against their labels.
EvalReport evaluate_examples(const ModelConfig& config, const ModelParams<float>& params,
                             const std::vector<LabeledEmbedding>& examples);

} // namespace segt
