#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lsparcom/image.hpp"
#include "lsparcom/unfolded.hpp"

namespace lsparcom {
namespace {

Image random_image(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0) {
    std::uniform_real_distribution<double> ud(lo, 1.0);
    Image out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = ud(rng);
    return out;
}

// Oracle percentile: sort, then interpolate at p/100 * (n - 1).
double sorted_percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Oracle forward pass from direct convolutions and the closed-form activation.
Image oracle_forward(const Image& g, const LsparcomWeights& w) {
    auto act = [&](const Image& pre, int k) {
        std::vector<double> v(pre.data(), pre.data() + pre.size());
        const double i1 = sorted_percentile(v, 1.0);
        const double i99 = sorted_percentile(v, 99.0);
        const double alpha = i1 + (i99 - i1) * w.alpha0[static_cast<std::size_t>(k)];
        const double beta = w.beta0[static_cast<std::size_t>(k)] / std::max(alpha, kThresholdEpsilon);
        Image out(pre.rows(), pre.cols());
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
            const double x = pre.data()[i];
            out.data()[i] = x > 0.0 ? x / (1.0 + std::exp(-beta * (x - alpha))) : 0.0;
        }
        return out;
    };
    const Image gi = conv2d_same(g, w.w_i);
    Image x = act(gi, 0);
    for (int k = 0; k < kFolds; ++k) x = act(gi - conv2d_same(x, w.w_p[static_cast<std::size_t>(k)]) + x, k + 1);
    return w.s * x;
}

TEST(RadialOrbits, Counts) {
    EXPECT_EQ(count_radial_orbits(1), 1);
    EXPECT_EQ(count_radial_orbits(3), 3);
    EXPECT_EQ(count_radial_orbits(kInputKernelSide), 83);
    EXPECT_EQ(count_radial_orbits(kFoldKernelSide), 106);
    const auto ids = radial_orbit_ids(5);
    ASSERT_EQ(ids.size(), 25u);
    EXPECT_EQ(ids[0], ids[4]);
    EXPECT_EQ(ids[0], ids[24]);
    EXPECT_EQ(ids[2], ids[10]);
    EXPECT_NE(ids[12], ids[0]);
}

TEST(Weights, ParameterCounts) {
    const LsparcomWeights w = init_weights();
    EXPECT_EQ(w.parameter_count(), 9058u);
    EXPECT_EQ(w.radial_parameter_count(), 1166u);
    EXPECT_EQ(w.trainable_parameter_count(), 1166u);
    LsparcomWeights free = w;
    free.radial_constrained = false;
    EXPECT_EQ(free.trainable_parameter_count(), 9058u);
}

TEST(Weights, InitialValues) {
    const LsparcomWeights w = init_weights();
    ASSERT_EQ(w.w_p.size(), static_cast<std::size_t>(kFolds));
    ASSERT_EQ(w.alpha0.size(), static_cast<std::size_t>(kFolds + 1));
    EXPECT_EQ(w.w_i.rows(), 25);
    EXPECT_EQ(w.w_p[0].rows(), 29);
    EXPECT_NEAR(w.w_i.sum(), 1.0, 1e-12);
    EXPECT_NEAR(w.w_i(12, 13) / w.w_i(12, 12), std::exp(-0.5), 1e-12);
    EXPECT_EQ(radial_project(w.w_p[3]).matrix(), w.w_p[3].matrix());
    for (double a : w.alpha0) EXPECT_EQ(a, 0.95);
    for (double b : w.beta0) EXPECT_EQ(b, 8.0);
    EXPECT_EQ(w.s, 0.01);
    EXPECT_NO_THROW(w.validate());
    LsparcomWeights bad = w;
    bad.alpha0[2] = 1.5;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = w;
    bad.w_p.pop_back();
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(RadialProject, CornerAverage) {
    Image k = Image::Zero(3, 3);
    k(0, 0) = 1;
    k(0, 2) = 2;
    k(2, 0) = 3;
    k(2, 2) = 4;
    const Image p = radial_project(k);
    EXPECT_DOUBLE_EQ(p(0, 0), 2.5);
    EXPECT_DOUBLE_EQ(p(2, 2), 2.5);
    EXPECT_DOUBLE_EQ(p(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(p(0, 1), 0.0);
}

TEST(RadialProject, IdempotentAndSumPreserving) {
    std::mt19937_64 rng(30);
    const Image k = random_image(rng, 29, 29, -1.0);
    const Image p = radial_project(k);
    EXPECT_EQ(radial_project(p).matrix(), p.matrix());
    EXPECT_NEAR(p.sum(), k.sum(), 1e-11);
    EXPECT_NEAR((rotate90(p, 1) - p).abs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR((p.transpose() - p).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Percentile, InterpolatesOrderStatistics) {
    const std::vector<double> v = {4, 1, 3, 2, 5};
    EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile(v, 100.0), 5.0);
    EXPECT_DOUBLE_EQ(percentile(v, 50.0), 3.0);
    EXPECT_DOUBLE_EQ(percentile(v, 1.0), 1.04);
    EXPECT_DOUBLE_EQ(percentile(v, 99.0), 4.96);
    const std::vector<double> one = {7.0};
    EXPECT_DOUBLE_EQ(percentile(one, 99.0), 7.0);
    EXPECT_THROW(percentile(std::vector<double>{}, 50.0), std::invalid_argument);
}

TEST(Percentile, MatchesSortOracle) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd;
    std::vector<double> v(4096);
    for (double& x : v) x = nd(rng);
    for (double p : {1.0, 13.7, 50.0, 99.0}) EXPECT_DOUBLE_EQ(percentile(v, p), sorted_percentile(v, p));
}

TEST(LocalThreshold, AlphaEndpoints) {
    Image ramp(1, 101);
    for (int i = 0; i <= 100; ++i) ramp(0, i) = i;
    // i1 = 1, i99 = 99 on 0..100.
    EXPECT_DOUBLE_EQ(local_threshold(ramp, {0.0, 8.0}).alpha, 1.0);
    EXPECT_DOUBLE_EQ(local_threshold(ramp, {0.5, 8.0}).alpha, 50.0);
    EXPECT_DOUBLE_EQ(local_threshold(ramp, {1.0, 8.0}).alpha, 99.0);
    EXPECT_DOUBLE_EQ(local_threshold(ramp, {0.5, 8.0}).beta, 8.0 / 50.0);
    const LocalThreshold z = local_threshold(Image::Zero(4, 4), {0.5, 8.0});
    EXPECT_TRUE(z.guarded);
    EXPECT_TRUE(std::isfinite(z.beta));
}

TEST(LocalThreshold, ScaleCovariant) {
    std::mt19937_64 rng(32);
    const Image x = random_image(rng, 16, 16);
    const LocalThreshold a = local_threshold(x, {0.3, 5.0});
    const LocalThreshold b = local_threshold(4.0 * x, {0.3, 5.0});
    EXPECT_DOUBLE_EQ(b.alpha, 4.0 * a.alpha);
    EXPECT_DOUBLE_EQ(b.beta, a.beta / 4.0);
}

TEST(SmoothActivation, KnownValuesAndBounds) {
    EXPECT_DOUBLE_EQ(smooth_activation(0.4, 0.4, 10.0), 0.2);
    EXPECT_EQ(smooth_activation(-3.0, 0.4, 10.0), 0.0);
    EXPECT_EQ(smooth_activation(0.0, 0.4, 10.0), 0.0);
    for (double x = -2.0; x <= 2.0; x += 0.01) {
        const double y = smooth_activation(x, 0.5, 7.0);
        EXPECT_GE(y, 0.0);
        EXPECT_LE(y, std::max(x, 0.0));
    }
    // Large slope approaches hard thresholding away from the cutoff.
    for (double x : {0.1, 0.3, 0.7, 1.5}) {
        const double hard = x > 0.5 ? x : 0.0;
        EXPECT_NEAR(smooth_activation(x, 0.5, 100.0), hard, 0.05);
    }
}

TEST(Network, ZeroInputGivesZeroOutput) {
    const Image out = forward(Image::Zero(32, 32), init_weights()).values;
    EXPECT_EQ(out.abs().maxCoeff(), 0.0);
}

TEST(Network, ZeroScaleGivesZeroOutput) {
    std::mt19937_64 rng(33);
    LsparcomWeights w = init_weights();
    w.s = 0.0;
    EXPECT_EQ(forward(random_image(rng, 32, 32), w).values.abs().maxCoeff(), 0.0);
}

TEST(Network, MatchesDirectOracle) {
    std::mt19937_64 rng(34);
    LsparcomWeights w = init_weights(5, 7);
    for (std::size_t k = 0; k < w.w_p.size(); ++k) {
        w.w_p[k] = radial_project(random_image(rng, 7, 7, -0.2)) * 0.2;
        w.alpha0[k] = 0.1 * static_cast<double>(k % 7);
    }
    w.s = 1.3;
    const Image g = random_image(rng, 20, 17);
    const Image fast = forward(g, w).values;
    const Image slow = oracle_forward(g, w);
    EXPECT_LT((fast - slow).abs().maxCoeff(), 1e-10 * std::max(1.0, slow.abs().maxCoeff()));
}

TEST(Network, RotationEquivariantWithRadialKernels) {
    std::mt19937_64 rng(35);
    const LsparcomWeights w = init_weights();
    const Image g = random_image(rng, 40, 40);
    const Image out = forward(g, w).values;
    for (int q = 1; q < 4; ++q) {
        const Image rot = forward(rotate90(g, q), w).values;
        EXPECT_LT((rot - rotate90(out, q)).abs().maxCoeff(), 1e-10 * out.abs().maxCoeff());
    }
}

TEST(Network, ScaleEquivariant) {
    std::mt19937_64 rng(36);
    const LsparcomWeights w = init_weights();
    const Image g = random_image(rng, 32, 32);
    const Image out = forward(g, w).values;
    const Image out4 = forward(4.0 * g, w).values;
    EXPECT_LT((out4 - 4.0 * out).abs().maxCoeff(), 1e-10 * out4.abs().maxCoeff());
}

TEST(Network, FrozenPercentilesReproduceFreeRun) {
    std::mt19937_64 rng(37);
    const LsparcomWeights w = init_weights();
    const LsparcomNetwork net(w, 24, 24);
    const Image g = random_image(rng, 24, 24);
    const ForwardPass free = net.run(g);
    const FrozenPercentiles frozen = free.percentiles();
    ASSERT_EQ(frozen.size(), static_cast<std::size_t>(kFolds + 1));
    EXPECT_EQ(net.run(g, &frozen).output.matrix(), free.output.matrix());
    EXPECT_THROW(net.run(Image::Zero(8, 8)), std::invalid_argument);
}

TEST(Network, DeterministicAcrossRuns) {
    std::mt19937_64 rng(38);
    const Image g = random_image(rng, 64, 64);
    const LsparcomWeights w = init_weights();
    EXPECT_EQ(forward(g, w).values.matrix(), forward(g, w).values.matrix());
}

}  // namespace
}  // namespace lsparcom
