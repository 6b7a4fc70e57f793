#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "segt/grad_check.hpp"
#include "segt/ops.hpp"
#include "test_support.hpp"

namespace segt {
namespace {

using testing::random_tensor;

template <typename T>
std::vector<T> values(const Tape<T>& tape, Var v) {
    const auto& t = tape.value(v);
    return {t.data().begin(), t.data().end()};
}

// ---------------------------------------------------------------------------
// Worked examples

TEST(Conv1dStrided, SumsAdjacentPairs) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 4, 1}, {1, 2, 3, 4}));
    Var w = tape.constant(Tensor<double>({1, 2, 1}, 1.0));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    EXPECT_EQ(values(tape, ops::conv1d_strided(tape, x, w, b)), (std::vector<double>{3, 7}));
}

TEST(Conv1dStrided, FirstTapSelectorPicksEvenIndices) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 4, 1}, {5, 9, 2, 8}));
    Var w = tape.constant(Tensor<double>({1, 2, 1}, {1, 0}));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    EXPECT_EQ(values(tape, ops::conv1d_strided(tape, x, w, b)), (std::vector<double>{5, 2}));
}

TEST(Conv1dStrided, OutputLengthIsFloorHalf) {
    Rng rng(1);
    for (std::size_t len : {2u, 3u, 10u, 11u}) {
        Tape<double> tape;
        Var x = tape.constant(random_tensor<double>({2, len, 3}, rng));
        Var w = tape.constant(random_tensor<double>({5, 2, 3}, rng));
        Var b = tape.constant(random_tensor<double>({5}, rng));
        EXPECT_EQ(tape.value(ops::conv1d_strided(tape, x, w, b)).dims(), (Dims{2, len / 2, 5}));
    }
}

TEST(Conv1dStrided, LengthOneIsTooShort) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 1, 2}, 1.0));
    Var w = tape.constant(Tensor<double>({2, 2, 2}, 1.0));
    Var b = tape.constant(Tensor<double>({2}, 0.0));
    EXPECT_THROW(ops::conv1d_strided(tape, x, w, b), SequenceTooShort);
}

TEST(Conv2dSegments, KernelOneSumsEachSegment) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4}));
    Var w = tape.constant(Tensor<double>({1, 1, 2, 1}, 1.0));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    EXPECT_EQ(values(tape, ops::conv2d_segments(tape, x, w, b)), (std::vector<double>{3, 7}));
}

TEST(Conv2dSegments, ZeroPaddedNeighboursContributeNothing) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 1, 2, 1}, {1, 2}));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    Var w1 = tape.constant(Tensor<double>({1, 1, 2, 1}, 1.0));
    Var w3 = tape.constant(Tensor<double>({1, 3, 2, 1}, 1.0));
    EXPECT_EQ(values(tape, ops::conv2d_segments(tape, x, w3, b)), values(tape, ops::conv2d_segments(tape, x, w1, b)));
}

TEST(Conv2dSegments, ShapeContract) {
    Rng rng(2);
    Tape<double> tape;
    Var x = tape.constant(random_tensor<double>({2, 5, 4, 8}, rng));
    Var w = tape.constant(random_tensor<double>({6, 3, 4, 8}, rng));
    Var b = tape.constant(random_tensor<double>({6}, rng));
    EXPECT_EQ(tape.value(ops::conv2d_segments(tape, x, w, b)).dims(), (Dims{2, 5, 6}));
}

TEST(Conv2dSegments, MatchesBruteForce) {
    Rng rng(3);
    const std::size_t B = 2, N = 4, l = 3, in = 2, out = 3, k = 3;
    Tape<double> tape;
    const auto xt = random_tensor<double>({B, N, l, in}, rng);
    const auto wt = random_tensor<double>({out, k, l, in}, rng);
    const auto bt = random_tensor<double>({out}, rng);
    const auto got = values(tape, ops::conv2d_segments(tape, tape.constant(xt), tape.constant(wt), tape.constant(bt)));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < N; ++j) {
            for (std::size_t o = 0; o < out; ++o) {
                double want = bt[o];
                for (std::size_t t = 0; t < k; ++t) {
                    const long src = static_cast<long>(j + t) - 1;
                    if (src < 0 || src >= static_cast<long>(N)) continue;
                    for (std::size_t p = 0; p < l; ++p) {
                        for (std::size_t c = 0; c < in; ++c) {
                            want += wt[((o * k + t) * l + p) * in + c] * xt[((b * N + src) * l + p) * in + c];
                        }
                    }
                }
                EXPECT_NEAR(got[(b * N + j) * out + o], want, 1e-12);
            }
        }
    }
}

TEST(Conv2dSegments, EvenKernelIsRejected) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1, 2, 2, 1}, 1.0));
    Var w = tape.constant(Tensor<double>({1, 2, 2, 1}, 1.0));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    EXPECT_THROW(ops::conv2d_segments(tape, x, w, b), InvalidKernel);
}

TEST(Linear, IdentityWeightsReturnInput) {
    Rng rng(4);
    Tape<double> tape;
    const auto xt = random_tensor<double>({2, 3, 4}, rng);
    Tensor<double> eye({4, 4}, 0.0);
    for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
    Var y = ops::linear(tape, tape.constant(xt), tape.constant(eye), tape.constant(Tensor<double>({4}, 0.0)));
    EXPECT_EQ(tape.value(y), xt);
}

TEST(Linear, ScalarAffine) {
    Tape<double> tape;
    Var y = ops::linear(tape, tape.constant(Tensor<double>({1}, 3.0)), tape.constant(Tensor<double>({1, 1}, 2.0)),
                        tape.constant(Tensor<double>({1}, 1.0)));
    EXPECT_EQ(values(tape, y), (std::vector<double>{7}));
}

TEST(Linear, LeadingDimsPreserved) {
    Rng rng(5);
    Tape<double> tape;
    Var y = ops::linear(tape, tape.constant(random_tensor<double>({2, 3, 5, 4}, rng)),
                        tape.constant(random_tensor<double>({7, 4}, rng)), Var{});
    EXPECT_EQ(tape.value(y).dims(), (Dims{2, 3, 5, 7}));
}

TEST(Linear, InnerDimMismatchIsShapeError) {
    Tape<double> tape;
    EXPECT_THROW(ops::linear(tape, tape.constant(Tensor<double>({2, 3}, 1.0)),
                             tape.constant(Tensor<double>({4, 5}, 1.0)), Var{}),
                 ShapeError);
}

TEST(Softmax, SymmetricInputIsUniform) {
    Tape<double> tape;
    EXPECT_EQ(values(tape, ops::softmax(tape, tape.constant(Tensor<double>({2}, {0, 0})))),
              (std::vector<double>{0.5, 0.5}));
}

TEST(Softmax, LargeLogitsStayFinite) {
    Tape<double> tape;
    const auto p = values(tape, ops::softmax(tape, tape.constant(Tensor<double>({2}, {1000, 0}))));
    EXPECT_NEAR(p[0], 1.0, 1e-12);
    EXPECT_NEAR(p[1], 0.0, 1e-12);
    EXPECT_FALSE(std::isnan(p[0]) || std::isnan(p[1]));
}

TEST(Softmax, RowsSumToOne) {
    Rng rng(6);
    Tape<float> tape;
    const auto p = values(tape, ops::softmax(tape, tape.constant(random_tensor<float>({20, 13}, rng, -30, 30))));
    for (std::size_t r = 0; r < 20; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 13; ++c) s += p[r * 13 + c];
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Softmax, MaskedSlotsGetZeroAndFullyMaskedRowIsZero) {
    Tape<double> tape;
    const ops::Mask mask{0, 1, 0, 1, 1, 1};
    const auto p = values(tape, ops::softmax(tape, tape.constant(Tensor<double>({2, 3}, {1, 5, 1, 2, 3, 4})), mask));
    EXPECT_EQ(p, (std::vector<double>{0.5, 0.0, 0.5, 0.0, 0.0, 0.0}));
}

TEST(Attention, SingleTokenReturnsValue) {
    Rng rng(7);
    Tape<double> tape;
    const auto v = random_tensor<double>({3, 1, 4}, rng);
    Var out = ops::scaled_dot_attention(tape, tape.constant(random_tensor<double>({3, 1, 4}, rng)),
                                        tape.constant(random_tensor<double>({3, 1, 4}, rng)), tape.constant(v));
    EXPECT_EQ(tape.value(out), v);
}

TEST(Attention, ZeroQueriesAverageUnmaskedValues) {
    Rng rng(8);
    Tape<double> tape;
    const auto v = random_tensor<double>({1, 4, 3}, rng);
    Var zeros = tape.constant(Tensor<double>({1, 4, 3}, 0.0));
    const ops::Mask mask{0, 0, 1, 0};
    const auto out = values(tape, ops::scaled_dot_attention(tape, zeros, zeros, tape.constant(v), mask));
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t d = 0; d < 3; ++d) {
            EXPECT_NEAR(out[t * 3 + d], (v[0 * 3 + d] + v[1 * 3 + d] + v[3 * 3 + d]) / 3.0, 1e-12);
        }
    }
}

TEST(Attention, MaskingLastTokenReturnsFirstValue) {
    Rng rng(9);
    Tape<double> tape;
    const auto v = random_tensor<double>({1, 2, 5}, rng);
    const auto out = values(tape, ops::scaled_dot_attention(tape, tape.constant(random_tensor<double>({1, 2, 5}, rng)),
                                                            tape.constant(random_tensor<double>({1, 2, 5}, rng)),
                                                            tape.constant(v), ops::Mask{0, 1}));
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t d = 0; d < 5; ++d) EXPECT_EQ(out[t * 5 + d], v[d]);
    }
}

TEST(Attention, MatchesBruteForce) {
    Rng rng(10);
    const std::size_t B = 2, T = 5, D = 4;
    const auto q = random_tensor<double>({B, T, D}, rng);
    const auto k = random_tensor<double>({B, T, D}, rng);
    const auto v = random_tensor<double>({B, T, D}, rng);
    Tape<double> tape;
    const auto got = values(tape, ops::scaled_dot_attention(tape, tape.constant(q), tape.constant(k), tape.constant(v)));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < T; ++i) {
            std::vector<double> s(T);
            double mx = -1e300;
            for (std::size_t j = 0; j < T; ++j) {
                double dot = 0.0;
                for (std::size_t d = 0; d < D; ++d) dot += q[(b * T + i) * D + d] * k[(b * T + j) * D + d];
                s[j] = dot / std::sqrt(static_cast<double>(D));
                mx = std::max(mx, s[j]);
            }
            double z = 0.0;
            for (auto& x : s) z += (x = std::exp(x - mx));
            for (std::size_t d = 0; d < D; ++d) {
                double want = 0.0;
                for (std::size_t j = 0; j < T; ++j) want += s[j] / z * v[(b * T + j) * D + d];
                EXPECT_NEAR(got[(b * T + i) * D + d], want, 1e-12);
            }
        }
    }
}

TEST(LayerNorm, NormalizesEachRow) {
    Rng rng(11);
    Tape<double> tape;
    const auto y = values(tape, ops::layer_norm(tape, tape.constant(random_tensor<double>({6, 9}, rng, -5, 5)),
                                                tape.constant(Tensor<double>({9}, 1.0)),
                                                tape.constant(Tensor<double>({9}, 0.0))));
    for (std::size_t r = 0; r < 6; ++r) {
        double mean = 0.0, var = 0.0;
        for (std::size_t c = 0; c < 9; ++c) mean += y[r * 9 + c] / 9.0;
        for (std::size_t c = 0; c < 9; ++c) var += (y[r * 9 + c] - mean) * (y[r * 9 + c] - mean) / 9.0;
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(var, 1.0, 1e-4);
    }
}

TEST(WeightedRmse, WorkedExample) {
    Tape<double> tape;
    const std::vector<double> truth{0.0, 0.0};
    const std::vector<double> w{1.0, 4.0};
    Var loss = ops::weighted_rmse(tape, tape.constant(Tensor<double>({2}, {1.0, 1.0})), truth, w);
    EXPECT_NEAR(tape.value(loss)[0], std::sqrt(2.5), 1e-15);
}

TEST(Ops, NonFiniteOutputIsRejected) {
    Tape<double> tape;
    Var x = tape.constant(Tensor<double>({1}, 1e300));
    EXPECT_THROW(ops::scale_shift(tape, x, 1e300, 0.0), NumericError);
}

TEST(Ops, ShapeMismatchIsRejected) {
    Tape<double> tape;
    EXPECT_THROW(ops::add(tape, tape.constant(Tensor<double>({2}, 1.0)), tape.constant(Tensor<double>({3}, 1.0))),
                 ShapeError);
    EXPECT_THROW(ops::reshape(tape, tape.constant(Tensor<double>({2, 3}, 1.0)), Dims{4}), ShapeError);
}

TEST(Ops, RepeatedForwardIsBitIdentical) {
    Rng rng(12);
    const auto x = random_tensor<float>({2, 6, 5}, rng);
    const auto w = random_tensor<float>({5, 5}, rng);
    auto run = [&] {
        Tape<float> tape;
        Var h = ops::linear(tape, tape.constant(x), tape.constant(w), Var{});
        Var a = ops::scaled_dot_attention(tape, h, h, h);
        return tape.value(ops::softmax(tape, a));
    };
    const auto a = run();
    const auto b = run();
    EXPECT_TRUE(bitwise_equal<float>(a.data(), b.data()));
}

// ---------------------------------------------------------------------------
// Gradients: every op against central differences through a random linear probe.

Var probe(Tape<double>& tape, Var out, std::uint64_t seed) {
    const std::size_t n = tape.value(out).size();
    Rng rng(seed);
    Var flat = ops::reshape(tape, out, Dims{1, n});
    return ops::linear(tape, flat, tape.constant(random_tensor<double>({1, n}, rng)), Var{});
}

void expect_gradients(const std::function<Var(Tape<double>&, const std::vector<Var>&)>& op,
                      const std::vector<Tensor<double>>& params) {
    const auto report = grad_check(
        [&](Tape<double>& t, const std::vector<Var>& p) { return probe(t, op(t, p), 99); }, params,
        GradCheckOptions{.eps = 1e-5});
    EXPECT_LT(report.max_rel_error, 1e-6) << "tensor " << report.worst_tensor << " index " << report.worst_index
                                          << " analytic " << report.worst_analytic << " numeric "
                                          << report.worst_numeric;
}

TEST(OpGradients, AddScaleShiftTanh) {
    Rng rng(20);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) {
            return ops::tanh(t, ops::scale_shift(t, ops::add(t, p[0], p[1]), 1.7, -0.3));
        },
        {random_tensor<double>({3, 4}, rng), random_tensor<double>({3, 4}, rng)});
}

TEST(OpGradients, Linear) {
    Rng rng(21);
    expect_gradients([](Tape<double>& t, const std::vector<Var>& p) { return ops::linear(t, p[0], p[1], p[2]); },
                     {random_tensor<double>({2, 3, 4}, rng), random_tensor<double>({5, 4}, rng),
                      random_tensor<double>({5}, rng)});
}

TEST(OpGradients, GatherRowsAndReshape) {
    Rng rng(22);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) {
            Var g = ops::gather_rows(t, p[0], 3, {2, -1, 0, 2, 1}, Dims{5, 3});
            return ops::reshape(t, g, Dims{15});
        },
        {random_tensor<double>({3, 3}, rng)});
}

TEST(OpGradients, Conv1dStrided) {
    Rng rng(23);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) { return ops::conv1d_strided(t, p[0], p[1], p[2]); },
        {random_tensor<double>({2, 7, 3}, rng), random_tensor<double>({4, 2, 3}, rng),
         random_tensor<double>({4}, rng)});
}

TEST(OpGradients, Conv2dSegments) {
    Rng rng(24);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) { return ops::conv2d_segments(t, p[0], p[1], p[2]); },
        {random_tensor<double>({2, 4, 3, 2}, rng), random_tensor<double>({3, 3, 3, 2}, rng),
         random_tensor<double>({3}, rng)});
}

TEST(OpGradients, MaskedSoftmax) {
    Rng rng(25);
    const ops::Mask mask{0, 0, 1, 0, 1, 0, 0, 0, 1, 1, 1, 1};
    expect_gradients([&](Tape<double>& t, const std::vector<Var>& p) { return ops::softmax(t, p[0], mask); },
                     {random_tensor<double>({3, 4}, rng, -3, 3)});
}

TEST(OpGradients, MaskedAttention) {
    Rng rng(26);
    const ops::Mask mask{0, 0, 1, 0, 0, 0, 0, 1};
    expect_gradients(
        [&](Tape<double>& t, const std::vector<Var>& p) { return ops::scaled_dot_attention(t, p[0], p[1], p[2], mask); },
        {random_tensor<double>({2, 4, 3}, rng), random_tensor<double>({2, 4, 3}, rng),
         random_tensor<double>({2, 4, 3}, rng)});
}

TEST(OpGradients, LayerNorm) {
    Rng rng(27);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) { return ops::layer_norm(t, p[0], p[1], p[2]); },
        {random_tensor<double>({3, 6}, rng, -2, 2), random_tensor<double>({6}, rng), random_tensor<double>({6}, rng)});
}

TEST(OpGradients, WeightedSum) {
    Rng rng(28);
    expect_gradients([](Tape<double>& t, const std::vector<Var>& p) { return ops::weighted_sum(t, p[0], p[1]); },
                     {random_tensor<double>({2, 5}, rng), random_tensor<double>({2, 5, 3}, rng)});
}

TEST(OpGradients, MeanConcatSumSquares) {
    Rng rng(29);
    expect_gradients(
        [](Tape<double>& t, const std::vector<Var>& p) {
            Var m = ops::mean_of(t, {p[0], p[1]});
            return ops::concat(t, {m, ops::sum_squares(t, p[1])});
        },
        {random_tensor<double>({2, 3}, rng), random_tensor<double>({2, 3}, rng)});
}

TEST(OpGradients, WeightedRmse) {
    Rng rng(30);
    const std::vector<double> truth{0.3, -1.2, 2.0, 0.7};
    const std::vector<double> w{0.6, 0.7, 1.2, 10.9};
    const auto report = grad_check(
        [&](Tape<double>& t, const std::vector<Var>& p) { return ops::weighted_rmse(t, p[0], truth, w); },
        {random_tensor<double>({4}, rng)}, GradCheckOptions{.eps = 1e-5});
    EXPECT_LT(report.max_rel_error, 1e-6);
}

} // namespace
} // namespace segt
