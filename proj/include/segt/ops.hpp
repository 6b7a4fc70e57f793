#pragma once

// Differentiable operations recorded on a Tape. Every op checks its input
// shapes, throws ShapeError on mismatch, and rejects non-finite outputs.

#include <cstdint>
#include <span>
#include <vector>

#include "segt/autograd.hpp"

namespace segt::ops {

/// Boolean mask, one byte per slot; nonzero marks a padded (excluded) slot.
using Mask = std::vector<std::uint8_t>;

template <typename T> Var add(Tape<T>& tape, Var a, Var b);
/// y = scale * x + shift (scale and shift are constants).
template <typename T> Var scale_shift(Tape<T>& tape, Var x, double scale, double shift);
template <typename T> Var tanh(Tape<T>& tape, Var x);

/// Affine map over the last axis: x[..., in] -> [..., out]. `b` may be an invalid Var.
template <typename T> Var linear(Tape<T>& tape, Var x, Var w, Var b);

/// Copies rows of `row_len` elements: output row r is input row `rows[r]`, or zeros for -1.
template <typename T>
Var gather_rows(Tape<T>& tape, Var x, std::size_t row_len, std::vector<std::int64_t> rows, Dims out_dims);

template <typename T> Var reshape(Tape<T>& tape, Var x, Dims dims);

/// Kernel-2 stride-2 convolution over the length axis of x[B,L,in] with
/// w[out,2,in] (tap-major) and b[out]. Output [B, floor(L/2), out].
template <typename T> Var conv1d_strided(Tape<T>& tape, Var x, Var w, Var b);

/// Segment-wise convolution of x[B,N,l,in] with w[out,k,l,in], b[out]; k odd.
/// The segment axis is zero padded by (k-1)/2 on each side so N is preserved.
template <typename T> Var conv2d_segments(Tape<T>& tape, Var x, Var w, Var b);

/// Softmax over the last axis, with max subtraction. Masked slots get weight 0;
/// a fully masked row is all zeros. `mask` is empty or has one entry per element.
template <typename T> Var softmax(Tape<T>& tape, Var x, const Mask& mask = {});

/// Single-head scaled dot-product attention over q,k,v[B,T,D]. `key_mask`
/// is empty or [B,T]; masked keys are skipped. A query with no unmasked key
/// yields a zero row.
template <typename T> Var scaled_dot_attention(Tape<T>& tape, Var q, Var k, Var v, const Mask& key_mask = {});

/// Layer normalization over the last axis with affine gamma/beta.
template <typename T> Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, double eps = 1e-5);

/// z[b] = sum_n alpha[b,n] * y[b,n,:] for alpha[B,N], y[B,N,D].
template <typename T> Var weighted_sum(Tape<T>& tape, Var alpha, Var y);

/// Elementwise mean of same-shaped inputs.
template <typename T> Var mean_of(Tape<T>& tape, const std::vector<Var>& xs);

/// Flattens and concatenates inputs into one 1-D tensor.
template <typename T> Var concat(Tape<T>& tape, const std::vector<Var>& xs);

/// Sum of squared elements, shape [1].
template <typename T> Var sum_squares(Tape<T>& tape, Var x);

/// sqrt(mean(w_i * (pred_i - truth_i)^2)), shape [1]. Gradient is taken as 0 at a zero loss.
template <typename T>
Var weighted_rmse(Tape<T>& tape, Var pred, std::span<const double> truth, std::span<const double> weights);

} // namespace segt::ops
