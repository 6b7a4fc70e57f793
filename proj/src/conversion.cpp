#include "segt/conversion.hpp"

#include <string>

namespace segt {

std::vector<ScaleGeometry> scale_geometry(std::size_t length, const ModelConfig& config) {
    std::vector<ScaleGeometry> out;
    std::size_t len = length;
    for (std::size_t i = 0; i < config.scales(); ++i) {
        if (i > 0) {
            if (len < 2) {
                throw SequenceTooShort("sequence of length " + std::to_string(length) + " cannot be sampled to scale " +
                                           std::to_string(i),
                                       static_cast<int>(i));
            }
            len /= 2;
        }
        ScaleGeometry g;
        g.length = len;
        g.segment_length = config.conversion.segment_lengths.at(i);
        g.segments = len / g.segment_length;
        g.residue_span = config.residue_span(i);
        if (g.segments == 0) {
            throw SequenceTooShort("scale " + std::to_string(i) + ": length " + std::to_string(len) +
                                       " is shorter than segment length " + std::to_string(g.segment_length) +
                                       " (sequence length " + std::to_string(length) + ")",
                                   static_cast<int>(i));
        }
        out.push_back(g);
    }
    return out;
}

template <typename T>
std::vector<Var> sample(Tape<T>& tape, Var x, std::size_t steps, const ParamVars& params) {
    const std::size_t length = tape.value(x).dim(1);
    if (steps >= 64 || length < (std::size_t{1} << steps)) {
        throw SequenceTooShort("sequence of length " + std::to_string(length) + " cannot be sampled " +
                               std::to_string(steps) + " times");
    }
    std::vector<Var> out{x};
    for (std::size_t i = 1; i <= steps; ++i) {
        const std::string p = "sample" + std::to_string(i);
        try {
            out.push_back(ops::conv1d_strided(tape, out.back(), params.at(p + ".weight"), params.at(p + ".bias")));
        } catch (const SequenceTooShort& e) {
            throw SequenceTooShort(e.what(), static_cast<int>(i));
        }
    }
    return out;
}

template <typename T>
Var segment(Tape<T>& tape, Var x, std::size_t segment_length) {
    const Tensor<T>& v = tape.value(x);
    if (v.rank() != 3) throw ShapeError("segment: input must be [B, L, D]");
    const std::size_t batch = v.dim(0);
    const std::size_t length = v.dim(1);
    const std::size_t d = v.dim(2);
    if (segment_length == 0 || length < segment_length) {
        throw SequenceTooShort("segment: length " + std::to_string(length) + " < segment length " +
                               std::to_string(segment_length));
    }
    const std::size_t n = length / segment_length;
    std::vector<std::int64_t> rows;
    rows.reserve(batch * n * segment_length);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t r = 0; r < n * segment_length; ++r) rows.push_back(static_cast<std::int64_t>(b * length + r));
    }
    return ops::gather_rows(tape, x, d, std::move(rows), Dims{batch, n, segment_length, d});
}

template <typename T>
std::vector<Var> convert(Tape<T>& tape, Var x, const ModelConfig& config, const ParamVars& params) {
    const Tensor<T>& v = tape.value(x);
    if (v.rank() != 3 || v.dim(2) != config.embed_dim) {
        throw ShapeError("convert: input " + dims_to_string(v.dims()) + " does not match embed_dim " +
                         std::to_string(config.embed_dim));
    }
    scale_geometry(v.dim(1), config);
    const std::vector<Var> sampled = sample(tape, x, config.conversion.steps, params);
    std::vector<Var> features;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const std::string p = "scale" + std::to_string(i) + ".";
        Var xi = sampled[i];
        if (i == 0) xi = ops::linear(tape, xi, params.at(p + "input_proj.weight"), params.at(p + "input_proj.bias"));
        Var segs;
        try {
            segs = segment(tape, xi, config.conversion.segment_lengths[i]);
        } catch (const SequenceTooShort& e) {
            throw SequenceTooShort(e.what(), static_cast<int>(i));
        }
        features.push_back(ops::conv2d_segments(tape, segs, params.at(p + "segconv.weight"),
                                                params.at(p + "segconv.bias")));
    }
    return features;
}

template std::vector<Var> sample<float>(Tape<float>&, Var, std::size_t, const ParamVars&);
template std::vector<Var> sample<double>(Tape<double>&, Var, std::size_t, const ParamVars&);
template Var segment<float>(Tape<float>&, Var, std::size_t);
template Var segment<double>(Tape<double>&, Var, std::size_t);
template std::vector<Var> convert<float>(Tape<float>&, Var, const ModelConfig&, const ParamVars&);
template std::vector<Var> convert<double>(Tape<double>&, Var, const ModelConfig&, const ParamVars&);

} // namespace segt
