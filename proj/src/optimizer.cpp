#include "segt/optimizer.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "segt/error.hpp"

namespace segt {

void AdamWConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("optimizer lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error("optimizer betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw Error("optimizer eps must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw Error("weight_decay must be >= 0");
}

AdamWState AdamWState::zeros_like(const ModelParams<float>& params) {
    AdamWState state;
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m.add(params.name(i), Tensor<float>(params.tensor(i).dims(), 0.0f));
        state.v.add(params.name(i), Tensor<float>(params.tensor(i).dims(), 0.0f));
    }
    return state;
}

template <typename T>
void adamw_update(Tensor<T>& theta, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v, const AdamWConfig& config,
                  std::uint64_t t) {
    if (t == 0) throw Error("optimizer step index starts at 1");
    if (grad.dims() != theta.dims() || m.dims() != theta.dims() || v.dims() != theta.dims()) {
        throw ShapeError("adamw: parameter " + dims_to_string(theta.dims()) + " vs gradient " +
                         dims_to_string(grad.dims()));
    }
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * g;
        const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * g * g;
        const double m_hat = mi / c1;
        const double v_hat = vi / c2;
        const double p = theta[i];
        theta[i] = static_cast<T>(p - config.lr * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * p));
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
    }
}

template void adamw_update<float>(Tensor<float>&, const Tensor<float>&, Tensor<float>&, Tensor<float>&,
                                  const AdamWConfig&, std::uint64_t);
template void adamw_update<double>(Tensor<double>&, const Tensor<double>&, Tensor<double>&, Tensor<double>&,
                                   const AdamWConfig&, std::uint64_t);

void adamw_step(ModelParams<float>& params, const std::vector<Tensor<float>>& grads, AdamWState& state,
                const AdamWConfig& config) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adamw: parameter, gradient and moment counts differ");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const auto& g = grads[i];
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!std::isfinite(g[k])) {
                std::ostringstream msg;
                msg << "non-finite gradient " << g[k] << " in " << params.name(i) << " at flat index " << k
                    << " (step " << state.step + 1 << ")";
                throw StepRejected(msg.str());
            }
        }
    }
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
        adamw_update(params.tensor(i), grads[i], state.m.tensor(i), state.v.tensor(i), config, state.step);
    }
}

nlohmann::json to_json(const AdamWConfig& c) {
    return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

AdamWConfig adamw_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"lr", "beta1", "beta2", "eps", "weight_decay"};
    if (!j.is_object()) throw ConfigMismatch("optimizer config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigMismatch("unknown optimizer config key: " + key);
    }
    AdamWConfig c;
    try {
        c.lr = j.value("lr", c.lr);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.eps = j.value("eps", c.eps);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigMismatch(std::string("bad optimizer config value: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace segt
