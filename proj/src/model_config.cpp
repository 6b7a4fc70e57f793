#include "segt/model_config.hpp"

#include <algorithm>
#include <set>

#include "segt/error.hpp"

namespace segt {

std::size_t ModelConfig::residue_span(std::size_t scale) const {
    return conversion.segment_lengths.at(scale) << scale;
}

std::size_t ModelConfig::min_length() const {
    std::size_t need = 0;
    for (std::size_t i = 0; i < scales(); ++i) need = std::max(need, residue_span(i));
    return need;
}

void ModelConfig::validate() const {
    if (embed_dim == 0) throw ConfigMismatch("embed_dim must be >= 1");
    if (conversion.d_model == 0) throw ConfigMismatch("d_model must be >= 1");
    if (conversion.steps > 16) throw ConfigMismatch("steps must be <= 16");
    if (conversion.segment_lengths.size() != scales()) {
        throw ConfigMismatch("segment_lengths needs one entry per scale (" + std::to_string(scales()) + ")");
    }
    if (std::any_of(conversion.segment_lengths.begin(), conversion.segment_lengths.end(),
                    [](std::size_t l) { return l == 0; })) {
        throw ConfigMismatch("segment lengths must be >= 1");
    }
    if (conversion.kernel % 2 == 0) throw ConfigMismatch("segment kernel must be odd");
    if (dgsa.group_sizes.size() != scales()) {
        throw ConfigMismatch("group_sizes needs one entry per scale (" + std::to_string(scales()) + ")");
    }
    if (std::any_of(dgsa.group_sizes.begin(), dgsa.group_sizes.end(), [](std::size_t g) { return g == 0; })) {
        throw ConfigMismatch("group sizes must be >= 1");
    }
    if (dgsa.num_blocks == 0) throw ConfigMismatch("num_blocks must be >= 1");
    if (pool_hidden == 0) throw ConfigMismatch("pool_hidden must be >= 1");
    if (!(target_scale > 0.0)) throw ConfigMismatch("target_scale must be > 0");
}

ModelConfig ModelConfig::toy(std::size_t embed_dim) {
    ModelConfig c;
    c.embed_dim = embed_dim;
    c.conversion.steps = 1;
    c.conversion.segment_lengths = {4, 2};
    c.conversion.kernel = 3;
    c.conversion.d_model = 32;
    c.dgsa.group_sizes = {2, 2};
    c.dgsa.num_blocks = 2;
    c.pool_hidden = 16;
    return c;
}

nlohmann::json to_json(const ModelConfig& c) {
    return nlohmann::json{
        {"embed_dim", c.embed_dim},
        {"steps", c.conversion.steps},
        {"segment_lengths", c.conversion.segment_lengths},
        {"kernel", c.conversion.kernel},
        {"d_model", c.conversion.d_model},
        {"group_sizes", c.dgsa.group_sizes},
        {"num_blocks", c.dgsa.num_blocks},
        {"pool_hidden", c.pool_hidden},
        {"target_mean", c.target_mean},
        {"target_scale", c.target_scale},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"embed_dim", "steps", "segment_lengths", "kernel", "d_model",
                                             "group_sizes", "num_blocks", "pool_hidden", "target_mean",
                                             "target_scale"};
    if (!j.is_object()) throw ConfigMismatch("model config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigMismatch("unknown model config key: " + key);
    }
    ModelConfig c;
    try {
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.conversion.steps = j.value("steps", c.conversion.steps);
        c.conversion.kernel = j.value("kernel", c.conversion.kernel);
        c.conversion.d_model = j.value("d_model", c.conversion.d_model);
        c.dgsa.num_blocks = j.value("num_blocks", c.dgsa.num_blocks);
        c.pool_hidden = j.value("pool_hidden", c.conversion.d_model / 2 ? c.conversion.d_model / 2 : 1);
        c.target_mean = j.value("target_mean", c.target_mean);
        c.target_scale = j.value("target_scale", c.target_scale);
        const std::size_t scales = c.conversion.steps + 1;
        c.conversion.segment_lengths =
            j.value("segment_lengths", scales == 2 ? c.conversion.segment_lengths : std::vector<std::size_t>(scales, 8));
        c.dgsa.group_sizes = j.value("group_sizes", std::vector<std::size_t>(scales, 8));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigMismatch(std::string("bad model config value: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace segt
