#include "segt/params.hpp"

#include <cmath>

#include "segt/rng.hpp"

namespace segt {

namespace {

std::string scale_prefix(std::size_t i) { return "scale" + std::to_string(i) + "."; }

} // namespace

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
    c.validate();
    const std::size_t dm = c.conversion.d_model;
    std::vector<ParamSpec> out;
    auto affine = [&](const std::string& base, std::size_t out_dim, Dims weight) {
        out.push_back({base + ".weight", std::move(weight)});
        out.push_back({base + ".bias", Dims{out_dim}});
    };
    affine("scale0.input_proj", dm, Dims{dm, c.embed_dim});
    for (std::size_t i = 1; i < c.scales(); ++i) {
        const std::size_t in = i == 1 ? c.embed_dim : dm;
        affine("sample" + std::to_string(i), dm, Dims{dm, 2, in});
    }
    for (std::size_t i = 0; i < c.scales(); ++i) {
        const std::string p = scale_prefix(i);
        affine(p + "segconv", dm, Dims{dm, c.conversion.kernel, c.conversion.segment_lengths[i], dm});
        for (std::size_t b = 0; b < c.dgsa.num_blocks; ++b) {
            const std::string bp = p + "block" + std::to_string(b) + ".";
            for (const char* branch : {"short", "long"}) {
                affine(bp + branch + ".q", dm, Dims{dm, dm});
                // Key bias omitted: it shifts every score of a query equally, so softmax ignores it.
                out.push_back({bp + branch + ".k.weight", Dims{dm, dm}});
                affine(bp + branch + ".v", dm, Dims{dm, dm});
            }
            out.push_back({bp + "norm.gamma", Dims{dm}});
            out.push_back({bp + "norm.beta", Dims{dm}});
        }
        out.push_back({p + "pool.w1", Dims{c.pool_hidden, dm}});
        out.push_back({p + "pool.w2", Dims{1, c.pool_hidden}});
        affine(p + "reg", 1, Dims{1, dm});
    }
    return out;
}

template <typename T>
void ModelParams<T>::add(std::string name, Tensor<T> value) {
    if (index_.count(name)) throw ConfigMismatch("duplicate parameter name: " + name);
    index_[name] = names_.size();
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
}

template <typename T>
const Tensor<T>& ModelParams<T>::at(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ConfigMismatch("missing parameter: " + name);
    return tensors_[it->second];
}

template <typename T>
Tensor<T>& ModelParams<T>::at(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ConfigMismatch("missing parameter: " + name);
    return tensors_[it->second];
}

template <typename T>
std::size_t ModelParams<T>::element_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

template <typename T>
void ModelParams<T>::check_against(const ModelConfig& config) const {
    const auto specs = param_specs(config);
    if (specs.size() != size()) {
        throw ConfigMismatch("parameter count " + std::to_string(size()) + " does not match config (" +
                             std::to_string(specs.size()) + ")");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].name != names_[i]) {
            throw ConfigMismatch("parameter " + std::to_string(i) + " is " + names_[i] + ", config expects " +
                                 specs[i].name);
        }
        if (specs[i].dims != tensors_[i].dims()) {
            throw ConfigMismatch("parameter " + names_[i] + " has dims " + dims_to_string(tensors_[i].dims()) +
                                 ", config expects " + dims_to_string(specs[i].dims));
        }
    }
}

ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    ModelParams<float> params;
    for (const auto& spec : param_specs(config)) {
        Tensor<float> t(spec.dims);
        const auto& n = spec.name;
        if (n.ends_with(".gamma")) {
            t = Tensor<float>(spec.dims, 1.0f);
        } else if (n.ends_with(".bias") || n.ends_with(".beta")) {
            // zeros
        } else {
            const std::size_t fan_out = spec.dims.front();
            const std::size_t fan_in = t.size() / fan_out;
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-bound, bound));
        }
        params.add(spec.name, std::move(t));
    }
    return params;
}

Var ParamVars::at(const std::string& name) const {
    const auto it = vars_.find(name);
    if (it == vars_.end()) throw ConfigMismatch("parameter not bound: " + name);
    return it->second;
}

template <typename T>
ParamVars bind_params(Tape<T>& tape, const ModelParams<T>& params, bool trainable) {
    ParamVars vars;
    for (std::size_t i = 0; i < params.size(); ++i) {
        vars.set(params.name(i), trainable ? tape.parameter(params.tensor(i)) : tape.constant(params.tensor(i)));
    }
    return vars;
}

template class ModelParams<float>;
template class ModelParams<double>;
template ParamVars bind_params<float>(Tape<float>&, const ModelParams<float>&, bool);
template ParamVars bind_params<double>(Tape<double>&, const ModelParams<double>&, bool);

} // namespace segt
