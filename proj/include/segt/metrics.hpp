#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace segt {

/// Human-readable label for interval k of the partition defined by ascending
/// cut points, e.g. {45, 70} -> "<45", "45-70", ">=70".
std::string interval_label(const std::vector<double>& boundaries, std::size_t k);
/// Index of the interval [b_{k-1}, b_k) holding `t`; the first interval is unbounded below.
std::size_t interval_index(const std::vector<double>& boundaries, double t);

/// Per-interval loss weights over the temperature axis.
struct WeightTable {
    std::vector<double> boundaries;  // K-1 ascending cut points
    std::vector<double> weights;     // K positive weights
    std::vector<std::size_t> counts; // labels per interval when built from data

    std::size_t intervals() const noexcept { return weights.size(); }
    double weight_for(double temperature) const { return weights[interval_index(boundaries, temperature)]; }
    /// Weight per sample, keyed on the true temperature.
    std::vector<double> weights_for(std::span<const double> truth) const;

    /// A single interval with weight 1.
    static WeightTable uniform();
};

inline const std::vector<double> kDefaultWeightBoundaries{45.0, 70.0, 100.0};
inline const std::vector<double> kDefaultGroupBoundaries{45.0, 70.0};

/// Inverse-frequency weights w_k = N / (K * count_k). An empty interval takes
/// the largest weight among the non-empty ones and adds a line to `warnings`.
WeightTable build_weight_table(std::span<const double> labels,
                               const std::vector<double>& boundaries = kDefaultWeightBoundaries,
                               std::vector<std::string>* warnings = nullptr);
WeightTable weight_table_from_counts(const std::vector<std::size_t>& counts, const std::vector<double>& boundaries,
                                     std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const WeightTable& table);
WeightTable weight_table_from_json(const nlohmann::json& j);

double weighted_rmse(std::span<const double> pred, std::span<const double> truth, const WeightTable& table);
double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

/// A correlation that may be undefined (constant input or fewer than 2 points).
/// `value` is NaN exactly when `defined` is false.
struct Correlation {
    double value = 0.0;
    bool defined = false;
};

Correlation pearson(std::span<const double> pred, std::span<const double> truth);
/// Pearson on ranks; ties share their average rank.
Correlation spearman(std::span<const double> pred, std::span<const double> truth);
/// 1-based ranks with ties averaged.
std::vector<double> average_ranks(std::span<const double> values);

struct BucketMae {
    std::string label;
    std::size_t count = 0;
    std::optional<double> mae;  // absent when count == 0
};

/// MAE per bucket of the true temperature.
std::vector<BucketMae> grouped_mae(std::span<const double> pred, std::span<const double> truth,
                                   const std::vector<double>& boundaries = kDefaultGroupBoundaries);

struct EvalReport {
    std::size_t count = 0;
    double rmse = 0.0;
    double mae = 0.0;
    Correlation pearson;
    Correlation spearman;
    std::vector<BucketMae> grouped_mae;
};

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth,
                    const std::vector<double>& group_boundaries = kDefaultGroupBoundaries);

nlohmann::json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);

} // namespace segt
