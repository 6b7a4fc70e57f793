#pragma once

#include <cstddef>
#include <vector>

#include "segt/model_config.hpp"
#include "segt/ops.hpp"
#include "segt/params.hpp"

namespace segt {

/// Lengths and segment counts for one scale of a sequence.
struct ScaleGeometry {
    std::size_t length = 0;          // L_i = floor(L / 2^i)
    std::size_t segment_length = 0;  // l_i
    std::size_t segments = 0;        // N_i = floor(L_i / l_i)
    std::size_t residue_span = 0;    // residues per segment, l_i * 2^i

    /// Original-sequence residues [first, last) covered by segment j.
    std::size_t first_residue(std::size_t j) const { return j * residue_span; }
    std::size_t end_residue(std::size_t j) const { return (j + 1) * residue_span; }
};

/// Per-scale geometry for a length-L sequence. Throws SequenceTooShort
/// carrying the first scale that cannot hold one segment.
std::vector<ScaleGeometry> scale_geometry(std::size_t length, const ModelConfig& config);

/// X_0 = x, X_i = C_i(X_{i-1}) for i = 1..steps, each halving the length.
/// x is [B, L, D]; X_i for i >= 1 has the model width.
template <typename T>
std::vector<Var> sample(Tape<T>& tape, Var x, std::size_t steps, const ParamVars& params);

/// [B, L_i, D] -> [B, N_i, l, D]; the trailing L_i - N_i*l rows are dropped.
template <typename T>
Var segment(Tape<T>& tape, Var x, std::size_t segment_length);

/// Segment-level features Y_i [B, N_i, d_model] for every scale.
template <typename T>
std::vector<Var> convert(Tape<T>& tape, Var x, const ModelConfig& config, const ParamVars& params);

} // namespace segt
