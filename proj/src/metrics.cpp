#include "segt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "segt/error.hpp"

namespace segt {

namespace {

void require_pair(std::span<const double> pred, std::span<const double> truth, const char* what) {
    if (pred.size() != truth.size()) {
        throw ShapeError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw ShapeError(std::string(what) + ": empty input");
}

void check_boundaries(const std::vector<double>& boundaries) {
    if (!std::is_sorted(boundaries.begin(), boundaries.end()) ||
        std::adjacent_find(boundaries.begin(), boundaries.end()) != boundaries.end()) {
        throw Error("interval boundaries must be strictly ascending");
    }
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

std::string interval_label(const std::vector<double>& boundaries, std::size_t k) {
    if (boundaries.empty()) return "all";
    if (k == 0) return "<" + format_number(boundaries.front());
    if (k == boundaries.size()) return ">=" + format_number(boundaries.back());
    return format_number(boundaries[k - 1]) + "-" + format_number(boundaries[k]);
}

std::size_t interval_index(const std::vector<double>& boundaries, double t) {
    return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), t) - boundaries.begin());
}

std::vector<double> WeightTable::weights_for(std::span<const double> truth) const {
    std::vector<double> out;
    out.reserve(truth.size());
    for (double t : truth) out.push_back(weight_for(t));
    return out;
}

WeightTable WeightTable::uniform() { return WeightTable{{}, {1.0}, {}}; }

WeightTable weight_table_from_counts(const std::vector<std::size_t>& counts, const std::vector<double>& boundaries,
                                     std::vector<std::string>* warnings) {
    check_boundaries(boundaries);
    if (counts.size() != boundaries.size() + 1) throw ShapeError("weight table: need one count per interval");
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total == 0) throw Error("weight table: no labels");
    const double k = static_cast<double>(counts.size());
    WeightTable table{boundaries, std::vector<double>(counts.size(), 0.0), counts};
    double largest = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        table.weights[i] = static_cast<double>(total) / (k * static_cast<double>(counts[i]));
        largest = std::max(largest, table.weights[i]);
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] != 0) continue;
        table.weights[i] = largest;
        if (warnings) {
            warnings->push_back("temperature interval " + interval_label(boundaries, i) +
                                " has no labels; using the largest weight " + format_number(largest));
        }
    }
    return table;
}

WeightTable build_weight_table(std::span<const double> labels, const std::vector<double>& boundaries,
                               std::vector<std::string>* warnings) {
    check_boundaries(boundaries);
    std::vector<std::size_t> counts(boundaries.size() + 1, 0);
    for (double t : labels) ++counts[interval_index(boundaries, t)];
    return weight_table_from_counts(counts, boundaries, warnings);
}

nlohmann::json to_json(const WeightTable& table) {
    return nlohmann::json{{"boundaries", table.boundaries}, {"weights", table.weights}, {"counts", table.counts}};
}

WeightTable weight_table_from_json(const nlohmann::json& j) {
    WeightTable t;
    t.boundaries = j.at("boundaries").get<std::vector<double>>();
    t.weights = j.at("weights").get<std::vector<double>>();
    t.counts = j.value("counts", std::vector<std::size_t>{});
    check_boundaries(t.boundaries);
    if (t.weights.size() != t.boundaries.size() + 1) throw ShapeError("weight table: need one weight per interval");
    for (double w : t.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw Error("weight table: weights must be positive and finite");
    }
    return t;
}

double weighted_rmse(std::span<const double> pred, std::span<const double> truth, const WeightTable& table) {
    require_pair(pred, truth, "weighted_rmse");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        sum += table.weight_for(truth[i]) * e * e;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    return weighted_rmse(pred, truth, WeightTable::uniform());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    require_pair(pred, truth, "mae");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

Correlation pearson(std::span<const double> pred, std::span<const double> truth) {
    require_pair(pred, truth, "pearson");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (pred.size() < 2) return {nan, false};
    const double n = static_cast<double>(pred.size());
    const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
    const double mt = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
    double cov = 0.0, vp = 0.0, vt = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double a = pred[i] - mp;
        const double b = truth[i] - mt;
        cov += a * b;
        vp += a * a;
        vt += b * b;
    }
    if (vp == 0.0 || vt == 0.0) return {nan, false};
    return {std::clamp(cov / (std::sqrt(vp) * std::sqrt(vt)), -1.0, 1.0), true};
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

Correlation spearman(std::span<const double> pred, std::span<const double> truth) {
    require_pair(pred, truth, "spearman");
    const auto rp = average_ranks(pred);
    const auto rt = average_ranks(truth);
    return pearson(rp, rt);
}

std::vector<BucketMae> grouped_mae(std::span<const double> pred, std::span<const double> truth,
                                   const std::vector<double>& boundaries) {
    require_pair(pred, truth, "grouped_mae");
    check_boundaries(boundaries);
    std::vector<double> sums(boundaries.size() + 1, 0.0);
    std::vector<BucketMae> out(boundaries.size() + 1);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::size_t k = interval_index(boundaries, truth[i]);
        sums[k] += std::abs(pred[i] - truth[i]);
        ++out[k].count;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].label = interval_label(boundaries, k);
        if (out[k].count) out[k].mae = sums[k] / static_cast<double>(out[k].count);
    }
    return out;
}

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth,
                    const std::vector<double>& group_boundaries) {
    EvalReport r;
    r.count = pred.size();
    r.rmse = rmse(pred, truth);
    r.mae = mae(pred, truth);
    r.pearson = pearson(pred, truth);
    r.spearman = spearman(pred, truth);
    r.grouped_mae = grouped_mae(pred, truth, group_boundaries);
    return r;
}

nlohmann::json to_json(const EvalReport& r) {
    auto corr = [](const Correlation& c) { return c.defined ? nlohmann::json(c.value) : nlohmann::json(nullptr); };
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& b : r.grouped_mae) {
        groups.push_back({{"range", b.label}, {"count", b.count}, {"mae", b.mae ? nlohmann::json(*b.mae) : nullptr}});
    }
    return nlohmann::json{{"count", r.count},
                          {"rmse", r.rmse},
                          {"mae", r.mae},
                          {"pearson", corr(r.pearson)},
                          {"pearson_defined", r.pearson.defined},
                          {"spearman", corr(r.spearman)},
                          {"spearman_defined", r.spearman.defined},
                          {"grouped_mae", groups}};
}

std::string format_table(const EvalReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    auto corr = [&](const Correlation& c) {
        if (c.defined) {
            os << c.value;
        } else {
            os << "undefined";
        }
    };
    os << "metric      value\n";
    os << "n           " << r.count << "\n";
    os << "RMSE        " << r.rmse << "\n";
    os << "MAE         " << r.mae << "\n";
    os << "Pearson     ";
    corr(r.pearson);
    os << "\nSpearman    ";
    corr(r.spearman);
    os << "\n\nrange       count   MAE\n";
    for (const auto& b : r.grouped_mae) {
        os << std::left << std::setw(12) << b.label << std::right << std::setw(5) << b.count << "   ";
        if (b.mae) {
            os << *b.mae;
        } else {
            os << "-";
        }
        os << "\n";
    }
    return os.str();
}

} // namespace segt
