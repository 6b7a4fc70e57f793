#include "segt/dgsa.hpp"

namespace segt {

GroupLayout group_layout(std::size_t segments, std::size_t group_size) {
    if (segments == 0) throw ShapeError("group_layout: need at least one segment");
    if (group_size == 0) throw ShapeError("group_layout: group size must be >= 1");
    return GroupLayout{segments, group_size, (segments + group_size - 1) / group_size};
}

AttentionParams AttentionParams::bind(const ParamVars& params, const std::string& prefix) {
    return AttentionParams{params.at(prefix + ".q.weight"), params.at(prefix + ".q.bias"),
                           params.at(prefix + ".k.weight"), Var{},
                           params.at(prefix + ".v.weight"), params.at(prefix + ".v.bias")};
}

namespace {

template <typename T>
Var attend(Tape<T>& tape, Var tokens, const AttentionParams& p, const ops::Mask& mask) {
    Var q = ops::linear(tape, tokens, p.wq, p.bq);
    Var k = ops::linear(tape, tokens, p.wk, p.bk);
    Var v = ops::linear(tape, tokens, p.wv, p.bv);
    return ops::scaled_dot_attention(tape, q, k, v, mask);
}

// Row index of grid slot (b, gl, gs) when the grid is read column-major, i.e. [B, G_S, G_L].
std::vector<std::int64_t> transpose_rows(const GroupedView& view) {
    const auto& lay = view.layout;
    std::vector<std::int64_t> rows;
    rows.reserve(view.batch * lay.slots());
    for (std::size_t b = 0; b < view.batch; ++b) {
        for (std::size_t s = 0; s < lay.group_size; ++s) {
            for (std::size_t g = 0; g < lay.groups; ++g) {
                rows.push_back(static_cast<std::int64_t>((b * lay.groups + g) * lay.group_size + s));
            }
        }
    }
    return rows;
}

} // namespace

template <typename T>
GroupedView group_reshape(Tape<T>& tape, Var y, std::size_t group_size) {
    const Tensor<T>& v = tape.value(y);
    if (v.rank() != 3) throw ShapeError("group_reshape: input must be [B, N, D]");
    GroupedView view;
    view.batch = v.dim(0);
    view.width = v.dim(2);
    view.layout = group_layout(v.dim(1), group_size);
    const auto& lay = view.layout;
    std::vector<std::int64_t> rows;
    rows.reserve(view.batch * lay.slots());
    view.pad_mask.reserve(view.batch * lay.slots());
    for (std::size_t b = 0; b < view.batch; ++b) {
        for (std::size_t slot = 0; slot < lay.slots(); ++slot) {
            const bool pad = slot >= lay.segments;
            rows.push_back(pad ? -1 : static_cast<std::int64_t>(b * lay.segments + slot));
            view.pad_mask.push_back(pad ? 1 : 0);
        }
    }
    view.grid = ops::gather_rows(tape, y, view.width, std::move(rows),
                                 Dims{view.batch, lay.groups, lay.group_size, view.width});
    return view;
}

template <typename T>
Var attend_short(Tape<T>& tape, const GroupedView& view, const AttentionParams& params) {
    const auto& lay = view.layout;
    Var tokens = ops::reshape(tape, view.grid, Dims{view.batch * lay.groups, lay.group_size, view.width});
    return attend(tape, tokens, params, view.pad_mask);
}

template <typename T>
Var attend_long(Tape<T>& tape, const GroupedView& view, const AttentionParams& params) {
    const auto& lay = view.layout;
    const auto rows = transpose_rows(view);
    ops::Mask mask(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) mask[i] = view.pad_mask[static_cast<std::size_t>(rows[i])];
    Var tokens = ops::gather_rows(tape, view.grid, view.width, rows,
                                  Dims{view.batch * lay.group_size, lay.groups, view.width});
    return attend(tape, tokens, params, mask);
}

template <typename T>
Var merge_flatten(Tape<T>& tape, Var z_short, Var z_long, const GroupedView& view) {
    const auto& lay = view.layout;
    const Dims grid{view.batch, lay.groups, lay.group_size, view.width};
    Var short_grid = ops::reshape(tape, z_short, grid);
    // Invert the column-major read used by the long branch.
    const auto forward = transpose_rows(view);
    std::vector<std::int64_t> inverse(forward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) inverse[static_cast<std::size_t>(forward[i])] = static_cast<std::int64_t>(i);
    Var long_grid = ops::gather_rows(tape, z_long, view.width, std::move(inverse), grid);
    Var merged = ops::add(tape, short_grid, long_grid);
    std::vector<std::int64_t> keep;
    keep.reserve(view.batch * lay.segments);
    for (std::size_t b = 0; b < view.batch; ++b) {
        for (std::size_t j = 0; j < lay.segments; ++j) keep.push_back(static_cast<std::int64_t>(b * lay.slots() + j));
    }
    return ops::gather_rows(tape, merged, view.width, std::move(keep), Dims{view.batch, lay.segments, view.width});
}

template <typename T>
Var dgsa_block(Tape<T>& tape, Var y, std::size_t group_size, const ParamVars& params, const std::string& prefix) {
    const GroupedView view = group_reshape(tape, y, group_size);
    Var zs = attend_short(tape, view, AttentionParams::bind(params, prefix + ".short"));
    Var zl = attend_long(tape, view, AttentionParams::bind(params, prefix + ".long"));
    Var merged = merge_flatten(tape, zs, zl, view);
    return ops::layer_norm(tape, ops::add(tape, y, merged), params.at(prefix + ".norm.gamma"),
                           params.at(prefix + ".norm.beta"));
}

template <typename T>
std::vector<Var> apply_dgsa_stack(Tape<T>& tape, const std::vector<Var>& features, const ModelConfig& config,
                                  const ParamVars& params) {
    if (features.size() != config.scales()) throw ShapeError("apply_dgsa_stack: one feature tensor per scale expected");
    std::vector<Var> out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        Var y = features[i];
        for (std::size_t b = 0; b < config.dgsa.num_blocks; ++b) {
            y = dgsa_block(tape, y, config.dgsa.group_sizes[i], params,
                           "scale" + std::to_string(i) + ".block" + std::to_string(b));
        }
        out.push_back(y);
    }
    return out;
}

#define SEGT_INSTANTIATE_DGSA(T)                                                                             \
    template GroupedView group_reshape<T>(Tape<T>&, Var, std::size_t);                                       \
    template Var attend_short<T>(Tape<T>&, const GroupedView&, const AttentionParams&);                      \
    template Var attend_long<T>(Tape<T>&, const GroupedView&, const AttentionParams&);                       \
    template Var merge_flatten<T>(Tape<T>&, Var, Var, const GroupedView&);                                   \
    template Var dgsa_block<T>(Tape<T>&, Var, std::size_t, const ParamVars&, const std::string&);            \
    template std::vector<Var> apply_dgsa_stack<T>(Tape<T>&, const std::vector<Var>&, const ModelConfig&,     \
                                                  const ParamVars&);

SEGT_INSTANTIATE_DGSA(float)
SEGT_INSTANTIATE_DGSA(double)

#undef SEGT_INSTANTIATE_DGSA

} // namespace segt
