#include <gtest/gtest.h>

#include <numeric>

#include "segt/error.hpp"
#include "segt/prediction_head.hpp"
#include "test_support.hpp"

namespace segt {
namespace {

using testing::random_tensor;

struct PoolFixture {
    Tape<double> tape{false};
    Rng rng{1};
    std::size_t d = 6;
    std::size_t h = 4;

    PooledScale pool(const Tensor<double>& y, const Tensor<double>& w1, const Tensor<double>& w2) {
        return attention_pool(tape, tape.constant(y), tape.constant(w1), tape.constant(w2));
    }
};

TEST(AttentionPool, ZeroScoresGiveUniformWeights) {
    PoolFixture f;
    const auto y = random_tensor<double>({2, 5, f.d}, f.rng);
    const auto p = f.pool(y, random_tensor<double>({f.h, f.d}, f.rng), Tensor<double>({1, f.h}, 0.0));
    const auto& a = f.tape.value(p.alpha);
    const auto& z = f.tape.value(p.z);
    EXPECT_EQ(a.dims(), (Dims{2, 5}));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], 0.2, 1e-15);
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t k = 0; k < f.d; ++k) {
            double mean = 0;
            for (std::size_t j = 0; j < 5; ++j) mean += y[(b * 5 + j) * f.d + k] / 5.0;
            EXPECT_NEAR(z[b * f.d + k], mean, 1e-14);
        }
    }
}

TEST(AttentionPool, SingleSegmentPassesThrough) {
    PoolFixture f;
    const auto y = random_tensor<double>({3, 1, f.d}, f.rng);
    const auto p = f.pool(y, random_tensor<double>({f.h, f.d}, f.rng), random_tensor<double>({1, f.h}, f.rng));
    const auto& a = f.tape.value(p.alpha);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], 1.0);
    const auto& z = f.tape.value(p.z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], y[i], 1e-15);
}

TEST(AttentionPool, OutputInsideConvexHullOfSegments) {
    PoolFixture f;
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = random_tensor<double>({1, 7, f.d}, f.rng, -5, 5);
        const auto p = f.pool(y, random_tensor<double>({f.h, f.d}, f.rng, -3, 3), random_tensor<double>({1, f.h}, f.rng, -3, 3));
        const auto& a = f.tape.value(p.alpha);
        EXPECT_NEAR(std::accumulate(a.data().begin(), a.data().end(), 0.0), 1.0, 1e-14);
        const auto& z = f.tape.value(p.z);
        for (std::size_t k = 0; k < f.d; ++k) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t j = 0; j < 7; ++j) {
                lo = std::min(lo, y[j * f.d + k]);
                hi = std::max(hi, y[j * f.d + k]);
            }
            EXPECT_GE(z[k], lo - 1e-12);
            EXPECT_LE(z[k], hi + 1e-12);
        }
    }
}

TEST(PredictScale, ZeroWeightReturnsBias) {
    Tape<double> tape(false);
    Rng rng(2);
    Var z = tape.constant(random_tensor<double>({3, 4}, rng));
    Var out = predict_scale(tape, z, tape.constant(Tensor<double>({1, 4}, 0.0)), tape.constant(Tensor<double>({1}, 61.5)));
    EXPECT_EQ(tape.value(out).dims(), (Dims{3, 1}));
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(tape.value(out)[b], 61.5);
}

TEST(PredictScale, UnitVectorSelectsCoordinate) {
    Tape<double> tape(false);
    Rng rng(3);
    const auto zt = random_tensor<double>({2, 4}, rng);
    Var out = predict_scale(tape, tape.constant(zt), tape.constant(Tensor<double>({1, 4}, {0, 0, 1, 0})),
                            tape.constant(Tensor<double>({1}, 0.0)));
    EXPECT_EQ(tape.value(out)[0], zt[2]);
    EXPECT_EQ(tape.value(out)[1], zt[6]);
}

TEST(PredictScale, LinearInInput) {
    Tape<double> tape(false);
    Rng rng(4);
    const auto z1 = random_tensor<double>({1, 5}, rng);
    const auto z2 = random_tensor<double>({1, 5}, rng);
    Tensor<double> mix({1, 5});
    for (std::size_t i = 0; i < 5; ++i) mix[i] = 2.0 * z1[i] - 3.0 * z2[i];
    Var w = tape.constant(random_tensor<double>({1, 5}, rng));
    Var b = tape.constant(Tensor<double>({1}, 0.0));
    const double p1 = tape.value(predict_scale(tape, tape.constant(z1), w, b))[0];
    const double p2 = tape.value(predict_scale(tape, tape.constant(z2), w, b))[0];
    const double pm = tape.value(predict_scale(tape, tape.constant(mix), w, b))[0];
    EXPECT_NEAR(pm, 2.0 * p1 - 3.0 * p2, 1e-13);
}

ScaleGeometry geom(std::size_t segments, std::size_t span) {
    return ScaleGeometry{segments * span, span, segments, span};
}

TEST(Aggregate, MeanAndBand) {
    const auto p = aggregate({10.0, 20.0}, {{0.5, 0.5}, {1.0}}, {geom(2, 4), geom(1, 8)});
    EXPECT_EQ(p.y_hat, 15.0);
    EXPECT_EQ(p.y_min, 10.0);
    EXPECT_EQ(p.y_max, 20.0);
    EXPECT_EQ(p.per_scale, (std::vector<double>{10.0, 20.0}));
}

TEST(Aggregate, SingleScaleCollapsesBand) {
    const auto p = aggregate({42.25}, {{0.1, 0.9}}, {geom(2, 4)});
    EXPECT_EQ(p.y_hat, 42.25);
    EXPECT_EQ(p.y_min, 42.25);
    EXPECT_EQ(p.y_max, 42.25);
    EXPECT_NEAR(p.importance[0].weight, 0.1, 1e-15);
    EXPECT_NEAR(p.importance[1].score(), 90.0, 1e-12);
}

TEST(Aggregate, BandAlwaysContainsMean) {
    Rng rng(5);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> v(1 + rng.below(4));
        for (double& x : v) x = rng.uniform(-1e3, 1e3);
        std::vector<std::vector<double>> alphas;
        std::vector<ScaleGeometry> g;
        for (std::size_t i = 0; i < v.size(); ++i) {
            alphas.push_back({1.0});
            g.push_back(geom(1, 4));
        }
        const auto p = aggregate(v, alphas, g);
        EXPECT_LE(p.y_min, p.y_hat);
        EXPECT_LE(p.y_hat, p.y_max);
    }
}

TEST(Aggregate, EmptyThrows) {
    EXPECT_THROW(aggregate({}, {}, {}), ShapeError);
}

TEST(ImportanceProfile, SpreadsCoarseSegmentsByOverlap) {
    // Scale 0: 4 segments of 4 residues. Scale 1: 2 segments of 8 residues.
    const auto prof = importance_profile({{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0}}, {geom(4, 4), geom(2, 8)});
    ASSERT_EQ(prof.size(), 4u);
    EXPECT_NEAR(prof[0].weight, 0.5, 1e-15);
    EXPECT_NEAR(prof[1].weight, 0.0, 1e-15);
    EXPECT_NEAR(prof[2].weight, 0.25, 1e-15);
    EXPECT_NEAR(prof[3].weight, 0.25, 1e-15);
    EXPECT_EQ(prof[2].start_residue, 8u);
    EXPECT_EQ(prof[2].end_residue, 12u);
}

TEST(ImportanceProfile, CoarseSegmentPastRetainedSpanIsRenormalized) {
    // Scale 0 keeps 2 segments of 4 (8 residues); scale 1 has one 12-residue segment,
    // a third of which lies beyond the scale-0 grid.
    ScaleGeometry g1{6, 3, 2, 6};
    const auto prof = importance_profile({{0.5, 0.5}, {0.25, 0.75}}, {geom(2, 4), g1});
    double sum = 0;
    for (const auto& s : prof) sum += s.weight;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    // Scale 1: segment 0 (residues 0-5) puts 4/6 on seg 0, 2/6 on seg 1; segment 1 (6-11) puts 2/6 on seg 1.
    const double s0 = 0.25 * 4.0 / 6.0;
    const double s1 = 0.25 * 2.0 / 6.0 + 0.75 * 2.0 / 6.0;
    EXPECT_NEAR(prof[0].weight, (0.5 + s0 / (s0 + s1)) / 2.0, 1e-14);
}

TEST(ImportanceProfile, SumsToOne) {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a0(6), a1(3);
        for (double& x : a0) x = rng.uniform();
        for (double& x : a1) x = rng.uniform();
        const auto prof = importance_profile({a0, a1}, {geom(6, 4), geom(3, 8)});
        double sum = 0;
        for (const auto& s : prof) sum += s.weight;
        EXPECT_NEAR(sum, 1.0, 1e-14);
    }
}

TEST(ImportanceProfile, MismatchedShapesThrow) {
    EXPECT_THROW(importance_profile({{1.0}}, {geom(1, 4), geom(1, 8)}), ShapeError);
    EXPECT_THROW(importance_profile({{0.5, 0.5}}, {geom(3, 4)}), ShapeError);
}

TEST(Prediction, JsonRoundTrip) {
    Prediction p = aggregate({50.5, 61.25}, {{0.25, 0.75}, {1.0}}, {geom(2, 4), geom(1, 8)});
    p.accession = "P0A7V8";
    const auto back = prediction_from_json(to_json(p));
    EXPECT_EQ(back.accession, p.accession);
    EXPECT_EQ(back.y_hat, p.y_hat);
    EXPECT_EQ(back.per_scale, p.per_scale);
    ASSERT_EQ(back.importance.size(), 2u);
    EXPECT_NEAR(back.importance[1].weight, p.importance[1].weight, 1e-15);
    EXPECT_EQ(to_json(p)["importance"][0]["end_residue"], 4);
}

} // namespace
} // namespace segt
