#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "segt/conversion.hpp"
#include "segt/ops.hpp"

namespace segt {

/// Weight of one scale-0 segment in the importance profile.
struct SegmentImportance {
    std::size_t start_residue = 0;  // inclusive, 0-based
    std::size_t end_residue = 0;    // exclusive
    double weight = 0.0;            // fraction of the total, sums to 1 over the profile

    /// Percentage form reported to users.
    double score() const noexcept { return weight * 100.0; }
};

struct Prediction {
    std::string accession;
    double y_hat = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    std::vector<double> per_scale;
    std::vector<SegmentImportance> importance;
};

struct PooledScale {
    Var z;      // [B, D]
    Var alpha;  // [B, N]
};

/// A = tanh(W1 Y), alpha = softmax over segments of W2 A, z = sum_j alpha_j Y_j.
template <typename T>
PooledScale attention_pool(Tape<T>& tape, Var y, Var w1, Var w2);

/// Affine readout of a pooled vector: [B, D] -> [B, 1].
template <typename T>
Var predict_scale(Tape<T>& tape, Var z, Var w_reg, Var b_reg);

/// Spreads each scale's pooling weights onto the scale-0 segment grid in
/// proportion to residue overlap, renormalizes each scale, averages.
std::vector<SegmentImportance> importance_profile(const std::vector<std::vector<double>>& alphas,
                                                  const std::vector<ScaleGeometry>& geometry);

/// Mean, min and max of the per-scale values plus the importance profile.
Prediction aggregate(const std::vector<double>& per_scale, const std::vector<std::vector<double>>& alphas,
                     const std::vector<ScaleGeometry>& geometry);

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

} // namespace segt
