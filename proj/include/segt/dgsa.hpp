#pragma once

// Dual grouped segment attention. Segments of one scale are laid out
// row-major on a [G_L, G_S] grid; the short branch attends within each row
// (group), the long branch attends down each column, and the two results are
// summed. When N is not a multiple of G_S the last row is padded with masked
// zero slots, so the block always returns exactly N segments.

#include <cstddef>
#include <string>
#include <vector>

#include "segt/model_config.hpp"
#include "segt/ops.hpp"
#include "segt/params.hpp"

namespace segt {

struct GroupLayout {
    std::size_t segments = 0;    // N
    std::size_t group_size = 0;  // G_S
    std::size_t groups = 0;      // G_L = ceil(N / G_S)

    std::size_t slots() const noexcept { return groups * group_size; }
    std::size_t padding() const noexcept { return slots() - segments; }
};

GroupLayout group_layout(std::size_t segments, std::size_t group_size);

/// Segments on the padded grid: `grid` is [B, G_L, G_S, D]; `pad_mask` has one
/// entry per slot in grid order, nonzero for padding.
struct GroupedView {
    Var grid;
    ops::Mask pad_mask;
    GroupLayout layout;
    std::size_t batch = 0;
    std::size_t width = 0;
};

/// Q/K/V projections of one attention branch (`bk` is unset).
struct AttentionParams {
    Var wq, bq, wk, bk, wv, bv;

    static AttentionParams bind(const ParamVars& params, const std::string& prefix);
};

template <typename T>
GroupedView group_reshape(Tape<T>& tape, Var y, std::size_t group_size);

/// Attention inside each short group: [B*G_L, G_S, D].
template <typename T>
Var attend_short(Tape<T>& tape, const GroupedView& view, const AttentionParams& params);

/// Attention across groups at a fixed in-group index: [B*G_S, G_L, D].
template <typename T>
Var attend_long(Tape<T>& tape, const GroupedView& view, const AttentionParams& params);

/// Sums both branches on the grid and drops padding: [B, N, D].
template <typename T>
Var merge_flatten(Tape<T>& tape, Var z_short, Var z_long, const GroupedView& view);

/// One block: LayerNorm(Y + merge(short, long)).
template <typename T>
Var dgsa_block(Tape<T>& tape, Var y, std::size_t group_size, const ParamVars& params, const std::string& prefix);

/// `num_blocks` blocks per scale, each scale with its own parameters.
template <typename T>
std::vector<Var> apply_dgsa_stack(Tape<T>& tape, const std::vector<Var>& features, const ModelConfig& config,
                                  const ParamVars& params);

} // namespace segt
