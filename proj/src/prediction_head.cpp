#include "segt/prediction_head.hpp"

#include <algorithm>
#include <numeric>

namespace segt {

template <typename T>
PooledScale attention_pool(Tape<T>& tape, Var y, Var w1, Var w2) {
    const Tensor<T>& v = tape.value(y);
    if (v.rank() != 3) throw ShapeError("attention_pool: input must be [B, N, D]");
    const std::size_t batch = v.dim(0);
    const std::size_t n = v.dim(1);
    Var hidden = ops::tanh(tape, ops::linear(tape, y, w1, Var{}));
    Var scores = ops::reshape(tape, ops::linear(tape, hidden, w2, Var{}), Dims{batch, n});
    Var alpha = ops::softmax(tape, scores);
    return PooledScale{ops::weighted_sum(tape, alpha, y), alpha};
}

template <typename T>
Var predict_scale(Tape<T>& tape, Var z, Var w_reg, Var b_reg) {
    return ops::linear(tape, z, w_reg, b_reg);
}

std::vector<SegmentImportance> importance_profile(const std::vector<std::vector<double>>& alphas,
                                                  const std::vector<ScaleGeometry>& geometry) {
    if (alphas.empty() || alphas.size() != geometry.size()) {
        throw ShapeError("importance_profile: one alpha vector per scale expected");
    }
    const ScaleGeometry& base = geometry.front();
    std::vector<double> total(base.segments, 0.0);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const ScaleGeometry& g = geometry[i];
        if (alphas[i].size() != g.segments) throw ShapeError("importance_profile: alpha length != segment count");
        std::vector<double> spread(base.segments, 0.0);
        for (std::size_t j = 0; j < g.segments; ++j) {
            const std::size_t lo = g.first_residue(j);
            const std::size_t hi = g.end_residue(j);
            const std::size_t first = lo / base.residue_span;
            for (std::size_t m = first; m < base.segments && base.first_residue(m) < hi; ++m) {
                const std::size_t overlap =
                    std::min(hi, base.end_residue(m)) - std::max(lo, base.first_residue(m));
                spread[m] += alphas[i][j] * static_cast<double>(overlap) / static_cast<double>(g.residue_span);
            }
        }
        const double mass = std::accumulate(spread.begin(), spread.end(), 0.0);
        if (!(mass > 0.0)) continue;
        for (std::size_t m = 0; m < base.segments; ++m) total[m] += spread[m] / mass;
    }
    const double mass = std::accumulate(total.begin(), total.end(), 0.0);
    std::vector<SegmentImportance> out(base.segments);
    for (std::size_t m = 0; m < base.segments; ++m) {
        out[m].start_residue = base.first_residue(m);
        out[m].end_residue = base.end_residue(m);
        out[m].weight = mass > 0.0 ? total[m] / mass : 1.0 / static_cast<double>(base.segments);
    }
    return out;
}

Prediction aggregate(const std::vector<double>& per_scale, const std::vector<std::vector<double>>& alphas,
                     const std::vector<ScaleGeometry>& geometry) {
    if (per_scale.empty()) throw ShapeError("aggregate: need at least one scale");
    Prediction p;
    p.per_scale = per_scale;
    p.y_hat = std::accumulate(per_scale.begin(), per_scale.end(), 0.0) / static_cast<double>(per_scale.size());
    const auto [lo, hi] = std::minmax_element(per_scale.begin(), per_scale.end());
    p.y_min = *lo;
    p.y_max = *hi;
    // Guard the band against the last-bit rounding of the mean.
    p.y_hat = std::clamp(p.y_hat, p.y_min, p.y_max);
    p.importance = importance_profile(alphas, geometry);
    return p;
}

nlohmann::json to_json(const Prediction& p) {
    nlohmann::json importance = nlohmann::json::array();
    for (const auto& s : p.importance) {
        importance.push_back({{"start_residue", s.start_residue}, {"end_residue", s.end_residue}, {"score", s.score()}});
    }
    return nlohmann::json{{"accession", p.accession}, {"y_hat", p.y_hat},       {"y_min", p.y_min},
                          {"y_max", p.y_max},         {"per_scale", p.per_scale}, {"importance", importance}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
    Prediction p;
    p.accession = j.at("accession").get<std::string>();
    p.y_hat = j.at("y_hat").get<double>();
    p.y_min = j.at("y_min").get<double>();
    p.y_max = j.at("y_max").get<double>();
    p.per_scale = j.at("per_scale").get<std::vector<double>>();
    for (const auto& s : j.at("importance")) {
        p.importance.push_back({s.at("start_residue").get<std::size_t>(), s.at("end_residue").get<std::size_t>(),
                                s.at("score").get<double>() / 100.0});
    }
    return p;
}

template PooledScale attention_pool<float>(Tape<float>&, Var, Var, Var);
template PooledScale attention_pool<double>(Tape<double>&, Var, Var, Var);
template Var predict_scale<float>(Tape<float>&, Var, Var, Var);
template Var predict_scale<double>(Tape<double>&, Var, Var, Var);

} // namespace segt
