#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "segt/params.hpp"

namespace segt {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    /// Throws Error unless lr > 0, 0 <= beta < 1, eps > 0 and weight_decay >= 0.
    void validate() const;

    friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

/// First and second moments per parameter plus the number of steps taken.
struct AdamWState {
    std::uint64_t step = 0;
    ModelParams<float> m;
    ModelParams<float> v;

    /// Zero moments shaped like `params`.
    static AdamWState zeros_like(const ModelParams<float>& params);

    friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

/// One AdamW update on a single tensor at step t >= 1:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta).
/// Arithmetic is done in double and stored back as T.
template <typename T>
void adamw_update(Tensor<T>& theta, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v, const AdamWConfig& config,
                  std::uint64_t t);

/// Updates every parameter with its gradient (same order as `params`).
/// A non-finite gradient raises StepRejected before anything is modified.
void adamw_step(ModelParams<float>& params, const std::vector<Tensor<float>>& grads, AdamWState& state,
                const AdamWConfig& config);

nlohmann::json to_json(const AdamWConfig& config);
AdamWConfig adamw_config_from_json(const nlohmann::json& j);

} // namespace segt
