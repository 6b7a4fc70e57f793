#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "segt/autograd.hpp"
#include "segt/model_config.hpp"

namespace segt {

struct ParamSpec {
    std::string name;
    Dims dims;
};

/// Every learnable tensor the configuration implies, in a fixed order.
std::vector<ParamSpec> param_specs(const ModelConfig& config);

/// Named learnable tensors, kept in `param_specs` order.
template <typename T>
class ModelParams {
public:
    ModelParams() = default;

    void add(std::string name, Tensor<T> value);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor<T>& at(const std::string& name) const;
    Tensor<T>& at(const std::string& name);

    std::size_t size() const noexcept { return tensors_.size(); }
    std::size_t element_count() const noexcept;
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const Tensor<T>& tensor(std::size_t i) const { return tensors_.at(i); }
    Tensor<T>& tensor(std::size_t i) { return tensors_.at(i); }

    /// Throws ConfigMismatch unless names and shapes equal `param_specs(config)`.
    void check_against(const ModelConfig& config) const;

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensor_cast<U>(tensors_[i]));
        return out;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.names_ == b.names_ && a.tensors_ == b.tensors_;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor<T>> tensors_;
    std::map<std::string, std::size_t> index_;
};

/// Xavier-uniform weights, zero biases, unit layer-norm gains.
ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed);

/// Parameters placed on a tape, looked up by name while building the graph.
class ParamVars {
public:
    Var at(const std::string& name) const;
    void set(const std::string& name, Var v) { vars_[name] = v; }
    const std::map<std::string, Var>& all() const noexcept { return vars_; }

private:
    std::map<std::string, Var> vars_;
};

/// Records every tensor of `params` as a tape leaf. `trainable` leaves receive gradients.
template <typename T>
ParamVars bind_params(Tape<T>& tape, const ModelParams<T>& params, bool trainable);

} // namespace segt
