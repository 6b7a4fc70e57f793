#include "segt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segt/kernels.hpp"

namespace segt::ops {

namespace {

template <typename T>
void require_same_dims(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.dims() != b.dims()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + dims_to_string(a.dims()) + " vs " +
                         dims_to_string(b.dims()));
    }
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         dims_to_string(t.dims()));
    }
}

template <typename T>
void accumulate(Tensor<T>& dst, std::span<const T> src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

} // namespace

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
    const Tensor<T>& va = tape.value(a);
    const Tensor<T>& vb = tape.value(b);
    require_same_dims(va, vb, "add");
    Tensor<T> out(va.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
    return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        if (t.requires_grad(a)) accumulate(t.grad_buffer(a), g.data());
        if (t.requires_grad(b)) accumulate(t.grad_buffer(b), g.data());
    });
}

template <typename T>
Var scale_shift(Tape<T>& tape, Var x, double scale, double shift) {
    const Tensor<T>& vx = tape.value(x);
    Tensor<T> out(vx.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<T>(scale * static_cast<double>(vx[i]) + shift);
    }
    return tape.record(std::move(out), {x}, [x, scale](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        Tensor<T>& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += static_cast<T>(scale * static_cast<double>(g[i]));
    });
}

template <typename T>
Var tanh(Tape<T>& tape, Var x) {
    const Tensor<T>& vx = tape.value(x);
    Tensor<T> out(vx.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(vx[i]);
    return tape.record(std::move(out), {x}, [x](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        const Tensor<T>& y = t.value(self);
        Tensor<T>& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T{1} - y[i] * y[i]);
    });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b) {
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vw = tape.value(w);
    require_rank(vw, 2, "linear", "weight");
    const std::size_t in = vw.dim(1);
    const std::size_t out_dim = vw.dim(0);
    if (vx.rank() == 0 || vx.inner() != in) {
        throw ShapeError("linear: input " + dims_to_string(vx.dims()) + " does not match weight " +
                         dims_to_string(vw.dims()));
    }
    if (b.valid() && tape.value(b).dims() != Dims{out_dim}) {
        throw ShapeError("linear: bias must be [" + std::to_string(out_dim) + "]");
    }
    const std::size_t rows = vx.outer();
    Dims out_dims = vx.dims();
    out_dims.back() = out_dim;
    Tensor<T> out(out_dims);
    const T* xp = vx.data().data();
    const T* wp = vw.data().data();
    const T* bp = b.valid() ? tape.value(b).data().data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double bias = bp ? static_cast<double>(bp[o]) : 0.0;
            out[r * out_dim + o] = static_cast<T>(bias + kernels::dot(wp + o * in, xp + r * in, in));
        }
    }
    return tape.record(std::move(out), {x, w, b}, [x, w, b, rows, in, out_dim](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        const T* gp = g.data().data();
        std::vector<double> acc(in);
        if (t.requires_grad(x)) {
            const T* wp = t.value(w).data().data();
            Tensor<T>& gx = t.grad_buffer(x);
            for (std::size_t r = 0; r < rows; ++r) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::size_t o = 0; o < out_dim; ++o) {
                    kernels::axpy_acc(static_cast<double>(gp[r * out_dim + o]), wp + o * in, acc.data(), in);
                }
                for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += static_cast<T>(acc[i]);
            }
        }
        if (t.requires_grad(w)) {
            const T* xp = t.value(x).data().data();
            Tensor<T>& gw = t.grad_buffer(w);
            for (std::size_t o = 0; o < out_dim; ++o) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                    kernels::axpy_acc(static_cast<double>(gp[r * out_dim + o]), xp + r * in, acc.data(), in);
                }
                for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += static_cast<T>(acc[i]);
            }
        }
        if (t.requires_grad(b)) {
            Tensor<T>& gb = t.grad_buffer(b);
            for (std::size_t o = 0; o < out_dim; ++o) {
                double sum = 0.0;
                for (std::size_t r = 0; r < rows; ++r) sum += static_cast<double>(gp[r * out_dim + o]);
                gb[o] += static_cast<T>(sum);
            }
        }
    });
}

template <typename T>
Var gather_rows(Tape<T>& tape, Var x, std::size_t row_len, std::vector<std::int64_t> rows, Dims out_dims) {
    const Tensor<T>& vx = tape.value(x);
    if (row_len == 0 || vx.size() % row_len != 0) {
        throw ShapeError("gather_rows: row length " + std::to_string(row_len) + " does not divide " +
                         dims_to_string(vx.dims()));
    }
    if (dims_product(out_dims) != rows.size() * row_len) {
        throw ShapeError("gather_rows: output dims " + dims_to_string(out_dims) + " do not hold " +
                         std::to_string(rows.size()) + " rows");
    }
    const auto in_rows = static_cast<std::int64_t>(vx.size() / row_len);
    Tensor<T> out(std::move(out_dims));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::int64_t src = rows[r];
        if (src < 0) continue;
        if (src >= in_rows) throw ShapeError("gather_rows: row index out of range");
        std::copy_n(vx.data().begin() + src * static_cast<std::int64_t>(row_len), row_len,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * row_len));
    }
    return tape.record(std::move(out), {x}, [x, row_len, rows = std::move(rows)](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        Tensor<T>& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] < 0) continue;
            const std::size_t base = static_cast<std::size_t>(rows[r]) * row_len;
            for (std::size_t i = 0; i < row_len; ++i) gx[base + i] += g[r * row_len + i];
        }
    });
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Dims dims) {
    Tensor<T> out = tape.value(x).reshaped(std::move(dims));
    return tape.record(std::move(out), {x}, [x](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        accumulate(t.grad_buffer(x), g.data());
    });
}

template <typename T>
Var conv1d_strided(Tape<T>& tape, Var x, Var w, Var b) {
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vw = tape.value(w);
    require_rank(vx, 3, "conv1d_strided", "input");
    require_rank(vw, 3, "conv1d_strided", "weight");
    const std::size_t batch = vx.dim(0);
    const std::size_t len = vx.dim(1);
    const std::size_t in = vx.dim(2);
    if (len < 2) {
        throw SequenceTooShort("conv1d_strided: length " + std::to_string(len) + " < 2");
    }
    if (vw.dim(1) != 2 || vw.dim(2) != in) {
        throw ShapeError("conv1d_strided: weight " + dims_to_string(vw.dims()) + " does not match input channels " +
                         std::to_string(in));
    }
    const std::size_t out_len = len / 2;
    std::vector<std::int64_t> rows;
    rows.reserve(batch * out_len * 2);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t i = 0; i < out_len * 2; ++i) rows.push_back(static_cast<std::int64_t>(bi * len + i));
    }
    // Pairs of adjacent rows become one row of 2*in, matched by the tap-major weight.
    Var pairs = gather_rows(tape, x, in, std::move(rows), Dims{batch, out_len, 2 * in});
    Var flat_w = reshape(tape, w, Dims{vw.dim(0), 2 * in});
    return linear(tape, pairs, flat_w, b);
}

template <typename T>
Var conv2d_segments(Tape<T>& tape, Var x, Var w, Var b) {
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vw = tape.value(w);
    require_rank(vx, 4, "conv2d_segments", "input");
    require_rank(vw, 4, "conv2d_segments", "weight");
    const std::size_t k = vw.dim(1);
    if (k % 2 == 0) throw InvalidKernel("conv2d_segments: kernel size k must be odd, got " + std::to_string(k));
    const std::size_t batch = vx.dim(0);
    const std::size_t n = vx.dim(1);
    const std::size_t seg = vx.dim(2) * vx.dim(3);
    if (vw.dim(2) != vx.dim(2) || vw.dim(3) != vx.dim(3)) {
        throw ShapeError("conv2d_segments: weight " + dims_to_string(vw.dims()) + " does not match segments " +
                         dims_to_string(vx.dims()));
    }
    const auto half = static_cast<std::int64_t>(k / 2);
    std::vector<std::int64_t> rows;
    rows.reserve(batch * n * k);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t tap = 0; tap < k; ++tap) {
                const std::int64_t src = static_cast<std::int64_t>(j + tap) - half;
                rows.push_back(src < 0 || src >= static_cast<std::int64_t>(n)
                                   ? -1
                                   : static_cast<std::int64_t>(bi * n) + src);
            }
        }
    }
    Var windows = gather_rows(tape, x, seg, std::move(rows), Dims{batch, n, k * seg});
    Var flat_w = reshape(tape, w, Dims{vw.dim(0), k * seg});
    return linear(tape, windows, flat_w, b);
}

template <typename T>
Var softmax(Tape<T>& tape, Var x, const Mask& mask) {
    const Tensor<T>& vx = tape.value(x);
    if (!mask.empty() && mask.size() != vx.size()) throw ShapeError("softmax: mask size mismatch");
    const std::size_t width = vx.inner();
    const std::size_t rows = vx.outer();
    Tensor<T> out(vx.dims());
    std::vector<double> e(width);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * width;
        auto masked = [&](std::size_t i) { return !mask.empty() && mask[base + i] != 0; };
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < width; ++i) {
            if (!masked(i)) m = std::max(m, static_cast<double>(vx[base + i]));
        }
        if (!std::isfinite(m)) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            e[i] = masked(i) ? 0.0 : std::exp(static_cast<double>(vx[base + i]) - m);
            sum += e[i];
        }
        for (std::size_t i = 0; i < width; ++i) out[base + i] = static_cast<T>(e[i] / sum);
    }
    return tape.record(std::move(out), {x}, [x, rows, width](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        const Tensor<T>& y = t.value(self);
        Tensor<T>& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * width;
            double inner = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                inner += static_cast<double>(y[base + i]) * static_cast<double>(g[base + i]);
            }
            for (std::size_t i = 0; i < width; ++i) {
                gx[base + i] += static_cast<T>(static_cast<double>(y[base + i]) *
                                               (static_cast<double>(g[base + i]) - inner));
            }
        }
    });
}

template <typename T>
Var scaled_dot_attention(Tape<T>& tape, Var q, Var k, Var v, const Mask& key_mask) {
    const Tensor<T>& vq = tape.value(q);
    const Tensor<T>& vk = tape.value(k);
    const Tensor<T>& vv = tape.value(v);
    require_rank(vq, 3, "scaled_dot_attention", "q");
    require_same_dims(vq, vk, "scaled_dot_attention");
    require_same_dims(vq, vv, "scaled_dot_attention");
    const std::size_t batch = vq.dim(0);
    const std::size_t steps = vq.dim(1);
    const std::size_t d = vq.dim(2);
    if (!key_mask.empty() && key_mask.size() != batch * steps) {
        throw ShapeError("scaled_dot_attention: key mask must be [B,T]");
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor<T> out(vq.dims());
    std::vector<double> probs(batch * steps * steps, 0.0);
    std::vector<double> acc(d);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const std::size_t blk = bi * steps * d;
        auto masked = [&](std::size_t s) { return !key_mask.empty() && key_mask[bi * steps + s] != 0; };
        for (std::size_t tq = 0; tq < steps; ++tq) {
            double* p = probs.data() + (bi * steps + tq) * steps;
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < steps; ++s) {
                if (masked(s)) continue;
                p[s] = kernels::dot(vq.data().data() + blk + tq * d, vk.data().data() + blk + s * d, d) * inv_sqrt;
                m = std::max(m, p[s]);
            }
            if (!std::isfinite(m)) continue;
            double sum = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                if (masked(s)) continue;
                p[s] = std::exp(p[s] - m);
                sum += p[s];
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t s = 0; s < steps; ++s) {
                if (masked(s)) continue;
                p[s] /= sum;
                kernels::axpy_acc(p[s], vv.data().data() + blk + s * d, acc.data(), d);
            }
            for (std::size_t j = 0; j < d; ++j) out[blk + tq * d + j] = static_cast<T>(acc[j]);
        }
    }
    return tape.record(
        std::move(out), {q, k, v},
        [q, k, v, batch, steps, d, inv_sqrt, probs = std::move(probs)](Tape<T>& t, Var self) {
            const Tensor<T> g = t.grad(self);
            const T* qp = t.value(q).data().data();
            const T* kp = t.value(k).data().data();
            const T* vp = t.value(v).data().data();
            const T* gp = g.data().data();
            std::vector<double> gq(steps * d), gk(steps * d), gv(steps * d), dp(steps);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const std::size_t blk = bi * steps * d;
                std::fill(gq.begin(), gq.end(), 0.0);
                std::fill(gk.begin(), gk.end(), 0.0);
                std::fill(gv.begin(), gv.end(), 0.0);
                for (std::size_t tq = 0; tq < steps; ++tq) {
                    const double* p = probs.data() + (bi * steps + tq) * steps;
                    const T* gt = gp + blk + tq * d;
                    double inner = 0.0;
                    for (std::size_t s = 0; s < steps; ++s) {
                        if (p[s] == 0.0) {
                            dp[s] = 0.0;
                            continue;
                        }
                        dp[s] = kernels::dot(gt, vp + blk + s * d, d);
                        inner += p[s] * dp[s];
                        kernels::axpy_acc(p[s], gt, gv.data() + s * d, d);
                    }
                    for (std::size_t s = 0; s < steps; ++s) {
                        if (p[s] == 0.0) continue;
                        const double ds = p[s] * (dp[s] - inner) * inv_sqrt;
                        kernels::axpy_acc(ds, kp + blk + s * d, gq.data() + tq * d, d);
                        kernels::axpy_acc(ds, qp + blk + tq * d, gk.data() + s * d, d);
                    }
                }
                auto flush = [&](Var target, const std::vector<double>& src) {
                    if (!t.requires_grad(target)) return;
                    Tensor<T>& dst = t.grad_buffer(target);
                    for (std::size_t i = 0; i < steps * d; ++i) dst[blk + i] += static_cast<T>(src[i]);
                };
                flush(q, gq);
                flush(k, gk);
                flush(v, gv);
            }
        });
}

template <typename T>
Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, double eps) {
    const Tensor<T>& vx = tape.value(x);
    const std::size_t width = vx.inner();
    const std::size_t rows = vx.outer();
    if (tape.value(gamma).dims() != Dims{width} || tape.value(beta).dims() != Dims{width}) {
        throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(width) + "]");
    }
    const T* gam = tape.value(gamma).data().data();
    const T* bet = tape.value(beta).data().data();
    Tensor<T> out(vx.dims());
    std::vector<double> xhat(vx.size());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * width;
        double mean = 0.0;
        for (std::size_t i = 0; i < width; ++i) mean += static_cast<double>(vx[base + i]);
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double c = static_cast<double>(vx[base + i]) - mean;
            var += c * c;
        }
        var /= static_cast<double>(width);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < width; ++i) {
            xhat[base + i] = (static_cast<double>(vx[base + i]) - mean) * inv_std[r];
            out[base + i] = static_cast<T>(static_cast<double>(gam[i]) * xhat[base + i] + static_cast<double>(bet[i]));
        }
    }
    return tape.record(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, Var self) {
            const Tensor<T> g = t.grad(self);
            const T* gam = t.value(gamma).data().data();
            std::vector<double> ggam(width, 0.0), gbet(width, 0.0);
            const bool want_x = t.requires_grad(x);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t base = r * width;
                double mean_g = 0.0;
                double mean_gx = 0.0;
                for (std::size_t i = 0; i < width; ++i) {
                    const double gi = static_cast<double>(g[base + i]);
                    ggam[i] += gi * xhat[base + i];
                    gbet[i] += gi;
                    const double gh = gi * static_cast<double>(gam[i]);
                    mean_g += gh;
                    mean_gx += gh * xhat[base + i];
                }
                if (!want_x) continue;
                mean_g /= static_cast<double>(width);
                mean_gx /= static_cast<double>(width);
                Tensor<T>& gx = t.grad_buffer(x);
                for (std::size_t i = 0; i < width; ++i) {
                    const double gh = static_cast<double>(g[base + i]) * static_cast<double>(gam[i]);
                    gx[base + i] += static_cast<T>(inv_std[r] * (gh - mean_g - xhat[base + i] * mean_gx));
                }
            }
            if (t.requires_grad(gamma)) {
                Tensor<T>& gg = t.grad_buffer(gamma);
                for (std::size_t i = 0; i < width; ++i) gg[i] += static_cast<T>(ggam[i]);
            }
            if (t.requires_grad(beta)) {
                Tensor<T>& gb = t.grad_buffer(beta);
                for (std::size_t i = 0; i < width; ++i) gb[i] += static_cast<T>(gbet[i]);
            }
        });
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var alpha, Var y) {
    const Tensor<T>& va = tape.value(alpha);
    const Tensor<T>& vy = tape.value(y);
    require_rank(va, 2, "weighted_sum", "alpha");
    require_rank(vy, 3, "weighted_sum", "values");
    const std::size_t batch = vy.dim(0);
    const std::size_t n = vy.dim(1);
    const std::size_t d = vy.dim(2);
    if (va.dim(0) != batch || va.dim(1) != n) {
        throw ShapeError("weighted_sum: alpha " + dims_to_string(va.dims()) + " vs values " + dims_to_string(vy.dims()));
    }
    Tensor<T> out(Dims{batch, d});
    std::vector<double> acc(d);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            kernels::axpy_acc(static_cast<double>(va[bi * n + j]), vy.data().data() + (bi * n + j) * d, acc.data(), d);
        }
        for (std::size_t i = 0; i < d; ++i) out[bi * d + i] = static_cast<T>(acc[i]);
    }
    return tape.record(std::move(out), {alpha, y}, [alpha, y, batch, n, d](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        if (t.requires_grad(alpha)) {
            const T* yp = t.value(y).data().data();
            Tensor<T>& ga = t.grad_buffer(alpha);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                for (std::size_t j = 0; j < n; ++j) {
                    ga[bi * n + j] += static_cast<T>(kernels::dot(g.data().data() + bi * d, yp + (bi * n + j) * d, d));
                }
            }
        }
        if (t.requires_grad(y)) {
            const Tensor<T>& va = t.value(alpha);
            Tensor<T>& gy = t.grad_buffer(y);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                for (std::size_t j = 0; j < n; ++j) {
                    kernels::axpy(va[bi * n + j], g.data().data() + bi * d, gy.data().data() + (bi * n + j) * d, d);
                }
            }
        }
    });
}

template <typename T>
Var mean_of(Tape<T>& tape, const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("mean_of: no inputs");
    const Dims dims = tape.value(xs.front()).dims();
    for (Var x : xs) require_same_dims(tape.value(xs.front()), tape.value(x), "mean_of");
    const std::size_t size = dims_product(dims);
    const double inv = 1.0 / static_cast<double>(xs.size());
    Tensor<T> out(dims);
    for (std::size_t i = 0; i < size; ++i) {
        double sum = 0.0;
        for (Var x : xs) sum += static_cast<double>(tape.value(x)[i]);
        out[i] = static_cast<T>(sum * inv);
    }
    return tape.record(std::move(out), xs, [xs, inv](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        for (Var x : xs) {
            if (!t.requires_grad(x)) continue;
            Tensor<T>& gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += static_cast<T>(static_cast<double>(g[i]) * inv);
        }
    });
}

template <typename T>
Var concat(Tape<T>& tape, const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    std::vector<T> data;
    for (Var x : xs) {
        const auto src = tape.value(x).data();
        data.insert(data.end(), src.begin(), src.end());
    }
    const std::size_t total = data.size();
    return tape.record(Tensor<T>(Dims{total}, std::move(data)), xs, [xs](Tape<T>& t, Var self) {
        const Tensor<T> g = t.grad(self);
        std::size_t offset = 0;
        for (Var x : xs) {
            const std::size_t n = t.value(x).size();
            if (t.requires_grad(x)) accumulate(t.grad_buffer(x), g.data().subspan(offset, n));
            offset += n;
        }
    });
}

template <typename T>
Var sum_squares(Tape<T>& tape, Var x) {
    const Tensor<T>& vx = tape.value(x);
    const double sum = kernels::dot(vx.data().data(), vx.data().data(), vx.size());
    return tape.record(Tensor<T>(Dims{1}, {static_cast<T>(sum)}), {x}, [x](Tape<T>& t, Var self) {
        const double g = static_cast<double>(t.grad(self)[0]);
        const Tensor<T>& vx = t.value(x);
        Tensor<T>& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < vx.size(); ++i) gx[i] += static_cast<T>(2.0 * g * static_cast<double>(vx[i]));
    });
}

template <typename T>
Var weighted_rmse(Tape<T>& tape, Var pred, std::span<const double> truth, std::span<const double> weights) {
    const Tensor<T>& vp = tape.value(pred);
    if (vp.size() != truth.size() || truth.size() != weights.size() || truth.empty()) {
        throw ShapeError("weighted_rmse: prediction, truth and weight lengths differ or are empty");
    }
    const double n = static_cast<double>(truth.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = static_cast<double>(vp[i]) - truth[i];
        sum += weights[i] * e * e;
    }
    const double loss = std::sqrt(sum / n);
    std::vector<double> coef(truth.size(), 0.0);
    if (loss > 0.0) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            coef[i] = weights[i] * (static_cast<double>(vp[i]) - truth[i]) / (n * loss);
        }
    }
    return tape.record(Tensor<T>(Dims{1}, {static_cast<T>(loss)}), {pred},
                       [pred, coef = std::move(coef)](Tape<T>& t, Var self) {
                           const double g = static_cast<double>(t.grad(self)[0]);
                           Tensor<T>& gp = t.grad_buffer(pred);
                           for (std::size_t i = 0; i < coef.size(); ++i) gp[i] += static_cast<T>(g * coef[i]);
                       });
}

#define SEGT_INSTANTIATE_OPS(T)                                                                          \
    template Var add<T>(Tape<T>&, Var, Var);                                                             \
    template Var scale_shift<T>(Tape<T>&, Var, double, double);                                          \
    template Var tanh<T>(Tape<T>&, Var);                                                                 \
    template Var linear<T>(Tape<T>&, Var, Var, Var);                                                     \
    template Var gather_rows<T>(Tape<T>&, Var, std::size_t, std::vector<std::int64_t>, Dims);            \
    template Var reshape<T>(Tape<T>&, Var, Dims);                                                        \
    template Var conv1d_strided<T>(Tape<T>&, Var, Var, Var);                                             \
    template Var conv2d_segments<T>(Tape<T>&, Var, Var, Var);                                            \
    template Var softmax<T>(Tape<T>&, Var, const Mask&);                                                 \
    template Var scaled_dot_attention<T>(Tape<T>&, Var, Var, Var, const Mask&);                          \
    template Var layer_norm<T>(Tape<T>&, Var, Var, Var, double);                                         \
    template Var weighted_sum<T>(Tape<T>&, Var, Var);                                                    \
    template Var mean_of<T>(Tape<T>&, const std::vector<Var>&);                                          \
    template Var concat<T>(Tape<T>&, const std::vector<Var>&);                                           \
    template Var sum_squares<T>(Tape<T>&, Var);                                                          \
    template Var weighted_rmse<T>(Tape<T>&, Var, std::span<const double>, std::span<const double>);

SEGT_INSTANTIATE_OPS(float)
SEGT_INSTANTIATE_OPS(double)

#undef SEGT_INSTANTIATE_OPS

} // namespace segt::ops
