#include "segt/model.hpp"

namespace segt {

template <typename T>
ForwardGraph build_forward(Tape<T>& tape, Var x, const ModelConfig& config, const ParamVars& params) {
    ForwardGraph g;
    g.geometry = scale_geometry(tape.value(x).dim(1), config);
    g.segments = convert(tape, x, config, params);
    g.attended = apply_dgsa_stack(tape, g.segments, config, params);
    for (std::size_t i = 0; i < config.scales(); ++i) {
        const std::string p = "scale" + std::to_string(i) + ".";
        const PooledScale pooled = attention_pool(tape, g.attended[i], params.at(p + "pool.w1"), params.at(p + "pool.w2"));
        g.pooled.push_back(pooled.z);
        g.alphas.push_back(pooled.alpha);
        Var head = predict_scale(tape, pooled.z, params.at(p + "reg.weight"), params.at(p + "reg.bias"));
        g.per_scale.push_back(ops::scale_shift(tape, head, config.target_scale, config.target_mean));
    }
    g.y_hat = ops::mean_of(tape, g.per_scale);
    return g;
}

template <typename T>
Prediction read_prediction(const Tape<T>& tape, const ForwardGraph& graph, std::size_t b) {
    std::vector<double> per_scale;
    std::vector<std::vector<double>> alphas;
    for (std::size_t i = 0; i < graph.per_scale.size(); ++i) {
        per_scale.push_back(static_cast<double>(tape.value(graph.per_scale[i])[b]));
        const Tensor<T>& a = tape.value(graph.alphas[i]);
        const std::size_t n = a.dim(1);
        alphas.emplace_back(a.data().begin() + static_cast<std::ptrdiff_t>(b * n),
                            a.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
    }
    return aggregate(per_scale, alphas, graph.geometry);
}

FeatureStage parse_feature_stage(const std::string& name) {
    if (name == "segments") return FeatureStage::segments;
    if (name == "dgsa") return FeatureStage::dgsa;
    if (name == "pooled") return FeatureStage::pooled;
    throw Error("unknown feature stage: " + name + " (expected segments, dgsa or pooled)");
}

Model::Model(ModelConfig config, ModelParams<float> params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    params_.check_against(config_);
}

void Model::check_input(const ResidueEmbedding& embedding) const {
    embedding.validate();
    if (embedding.dim != config_.embed_dim) {
        throw ConfigMismatch("embedding " + embedding.accession + " has D=" + std::to_string(embedding.dim) +
                             ", model expects " + std::to_string(config_.embed_dim));
    }
}

Prediction Model::predict(const ResidueEmbedding& embedding) const {
    return predict_batch({embedding}).front();
}

std::vector<Prediction> Model::predict_batch(const std::vector<ResidueEmbedding>& batch) const {
    if (batch.empty()) return {};
    const std::size_t length = batch.front().length;
    std::vector<float> data;
    for (const auto& e : batch) {
        check_input(e);
        if (e.length != length) throw ShapeError("predict_batch: all sequences in a batch must share a length");
        data.insert(data.end(), e.values.begin(), e.values.end());
    }
    Tape<float> tape(false);
    const ParamVars params = bind_params(tape, params_, false);
    Var x = tape.constant(Tensor<float>(Dims{batch.size(), length, config_.embed_dim}, std::move(data)));
    const ForwardGraph graph = build_forward(tape, x, config_, params);
    std::vector<Prediction> out;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        out.push_back(read_prediction(tape, graph, b));
        out.back().accession = batch[b].accession;
    }
    return out;
}

std::vector<double> Model::features(const ResidueEmbedding& embedding, FeatureStage stage) const {
    check_input(embedding);
    Tape<float> tape(false);
    const ParamVars params = bind_params(tape, params_, false);
    Var x = tape.constant(embedding.as_batch<float>());
    const ForwardGraph graph = build_forward(tape, x, config_, params);
    std::vector<double> out;
    for (std::size_t i = 0; i < config_.scales(); ++i) {
        if (stage == FeatureStage::pooled) {
            for (float v : tape.value(graph.pooled[i]).data()) out.push_back(v);
            continue;
        }
        const Tensor<float>& y = tape.value(stage == FeatureStage::segments ? graph.segments[i] : graph.attended[i]);
        const std::size_t n = y.dim(1);
        const std::size_t d = y.dim(2);
        for (std::size_t c = 0; c < d; ++c) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += y[j * d + c];
            out.push_back(sum / static_cast<double>(n));
        }
    }
    return out;
}

template ForwardGraph build_forward<float>(Tape<float>&, Var, const ModelConfig&, const ParamVars&);
template ForwardGraph build_forward<double>(Tape<double>&, Var, const ModelConfig&, const ParamVars&);
template Prediction read_prediction<float>(const Tape<float>&, const ForwardGraph&, std::size_t);
template Prediction read_prediction<double>(const Tape<double>&, const ForwardGraph&, std::size_t);

} // namespace segt
