#include "segt/training.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "segt/error.hpp"
#include "segt/model.hpp"
#include "segt/ops.hpp"
#include "segt/parallel.hpp"
#include "segt/rng.hpp"

namespace segt {

void TrainConfig::validate() const {
    optimizer.validate();
    if (batch_size == 0) throw Error("batch_size must be >= 1");
    if (max_epochs == 0) throw Error("max_epochs must be >= 1");
    if (eval_every == 0) throw Error("eval_every must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"optimizer", to_json(c.optimizer)},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"eval_every", c.eval_every},
            {"seed", c.seed},
            {"weight_table", c.weight_table ? to_json(*c.weight_table) : nlohmann::json(nullptr)},
            {"normalize_targets", c.normalize_targets}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"optimizer", "batch_size", "max_epochs", "eval_every",
                                             "seed",      "weight_table", "normalize_targets"};
    if (!j.is_object()) throw ConfigMismatch("train config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigMismatch("unknown train config key: " + key);
    }
    TrainConfig c;
    try {
        if (j.contains("optimizer")) c.optimizer = adamw_config_from_json(j.at("optimizer"));
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.eval_every = j.value("eval_every", c.eval_every);
        c.seed = j.value("seed", c.seed);
        c.normalize_targets = j.value("normalize_targets", c.normalize_targets);
        if (j.contains("weight_table") && !j.at("weight_table").is_null()) {
            c.weight_table = weight_table_from_json(j.at("weight_table"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigMismatch(std::string("bad train config value: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<LabeledEmbedding> gather_examples(const std::vector<DatasetRecord>& records,
                                              const std::vector<SplitEntry>& split, Subset subset,
                                              const EmbeddingLookup& lookup) {
    std::unordered_map<std::string, Subset> assigned;
    for (const auto& e : split) assigned.emplace(e.accession, e.subset);
    std::vector<LabeledEmbedding> out;
    for (const auto& r : records) {
        const auto it = assigned.find(r.accession);
        if (it == assigned.end() || it->second != subset) continue;
        auto embedding = lookup(r.accession);
        if (!embedding) throw MissingInput(r.accession);
        if (embedding->length != r.sequence.size()) {
            throw ConfigMismatch("embedding for " + r.accession + " has " + std::to_string(embedding->length) +
                                 " rows but the sequence has " + std::to_string(r.sequence.size()) + " residues");
        }
        out.push_back({std::move(*embedding), r.temperature});
    }
    return out;
}

EmbeddingLookup manifest_lookup(const std::vector<ManifestEntry>& manifest) {
    auto paths = std::make_shared<std::unordered_map<std::string, std::filesystem::path>>();
    for (const auto& e : manifest) paths->emplace(e.accession, e.path);
    return [paths](const std::string& accession) -> std::optional<ResidueEmbedding> {
        const auto it = paths->find(accession);
        if (it == paths->end()) return std::nullopt;
        if (!std::filesystem::exists(it->second)) return std::nullopt;
        return read_embedding(it->second);
    };
}

nlohmann::json to_json(const EpochLog& log) {
    nlohmann::json j{{"epoch", log.epoch}, {"train_loss", log.train_loss}};
    const auto corr = [](const Correlation& c) { return c.defined ? nlohmann::json(c.value) : nlohmann::json(); };
    if (log.validation) {
        j["val_rmse"] = log.validation->rmse;
        j["val_mae"] = log.validation->mae;
        j["val_pearson"] = corr(log.validation->pearson);
        j["val_spearman"] = corr(log.validation->spearman);
    } else {
        j["val_rmse"] = nullptr;
        j["val_mae"] = nullptr;
        j["val_pearson"] = nullptr;
        j["val_spearman"] = nullptr;
    }
    return j;
}

EvalReport evaluate_examples(const ModelConfig& config, const ModelParams<float>& params,
                             const std::vector<LabeledEmbedding>& examples) {
    const Model model(config, params);
    std::vector<double> pred(examples.size());
    std::vector<double> truth(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) {
        pred[i] = model.predict(examples[i].embedding).y_hat;
        truth[i] = examples[i].temperature;
    });
    return evaluate(pred, truth);
}

namespace {

void check_examples(const std::vector<LabeledEmbedding>& examples, const ModelConfig& config, const char* which) {
    if (examples.empty()) throw Error(std::string(which) + " set is empty");
    for (const auto& ex : examples) {
        ex.embedding.validate();
        if (ex.embedding.dim != config.embed_dim) {
            throw ConfigMismatch("embedding " + ex.embedding.accession + " has D=" + std::to_string(ex.embedding.dim) +
                                 ", model expects " + std::to_string(config.embed_dim));
        }
        if (ex.embedding.length < config.min_length()) {
            throw SequenceTooShort(std::string(which) + " sequence " + ex.embedding.accession + " has " +
                                   std::to_string(ex.embedding.length) + " residues, model needs at least " +
                                   std::to_string(config.min_length()));
        }
        if (!std::isfinite(ex.temperature)) throw Error("non-finite label for " + ex.embedding.accession);
    }
}

Checkpoint snapshot(const ModelConfig& config, const ModelParams<float>& params, const AdamWState& state,
                    std::size_t epoch, const std::optional<EvalReport>& report, const nlohmann::json& train_json) {
    Checkpoint c;
    c.config = config;
    c.params = params;
    c.optimizer = state;
    c.epoch = epoch;
    c.metrics = report ? to_json(*report) : nlohmann::json();
    c.train_config = train_json;
    return c;
}

} // namespace

TrainResult train(const std::vector<LabeledEmbedding>& train_set, const std::vector<LabeledEmbedding>& validation_set,
                  ModelConfig model_config, const TrainConfig& train_config, std::ostream* log) {
    train_config.validate();
    model_config.validate();
    check_examples(train_set, model_config, "training");
    check_examples(validation_set, model_config, "validation");

    std::vector<double> labels(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) labels[i] = train_set[i].temperature;

    TrainConfig effective = train_config;
    if (!effective.weight_table) effective.weight_table = build_weight_table(labels);
    const WeightTable& table = *effective.weight_table;

    if (effective.normalize_targets) {
        const double n = static_cast<double>(labels.size());
        const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
        double var = 0.0;
        for (double t : labels) var += (t - mean) * (t - mean);
        model_config.target_mean = mean;
        model_config.target_scale = std::max(1.0, std::sqrt(var / n));
    }
    const nlohmann::json train_json = to_json(effective);

    ModelParams<float> params = init_params(model_config, effective.seed);
    AdamWState state = AdamWState::zeros_like(params);
    Rng rng(effective.seed ^ 0xD1B54A32D192ED03ULL);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    double best_rmse = std::numeric_limits<double>::infinity();
    bool have_best = false;

    for (std::size_t epoch = 1; epoch <= effective.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += effective.batch_size) {
            const std::size_t stop = std::min(order.size(), start + effective.batch_size);
            std::vector<double> truth;
            std::vector<double> weights;
            std::vector<Tensor<float>> grads;
            double loss_value = 0.0;
            try {
                Tape<float> tape;
                const ParamVars vars = bind_params(tape, params, true);
                std::vector<Var> preds;
                for (std::size_t k = start; k < stop; ++k) {
                    const auto& ex = train_set[order[k]];
                    const Var x = tape.constant(ex.embedding.as_batch<float>());
                    preds.push_back(build_forward(tape, x, model_config, vars).y_hat);
                    truth.push_back(ex.temperature);
                    weights.push_back(table.weight_for(ex.temperature));
                }
                const Var loss = ops::weighted_rmse(tape, ops::concat(tape, preds), truth, weights);
                loss_value = tape.value(loss)[0];
                tape.backward(loss);
                grads.reserve(params.size());
                for (std::size_t i = 0; i < params.size(); ++i) grads.push_back(tape.grad(vars.at(params.name(i))));
            } catch (const NumericError& e) {
                throw StepRejected("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches + 1) + ": " + e.what());
            }
            adamw_step(params, grads, state, effective.optimizer);
            loss_sum += loss_value;
            ++batches;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(batches);
        if (epoch % effective.eval_every == 0 || epoch == effective.max_epochs) {
            entry.validation = evaluate_examples(model_config, params, validation_set);
            if (!have_best || entry.validation->rmse < best_rmse) {
                best_rmse = entry.validation->rmse;
                have_best = true;
                result.best = snapshot(model_config, params, state, epoch, entry.validation, train_json);
            }
        }
        if (log) *log << to_json(entry).dump() << '\n';
        result.history.push_back(std::move(entry));
    }

    result.last = snapshot(model_config, params, state, effective.max_epochs, result.history.back().validation,
                           train_json);
    return result;
}

} // namespace segt
