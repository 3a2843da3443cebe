#include <gtest/gtest.h>

#include <random>

#include "lsparcom/fft_conv.hpp"
#include "lsparcom/image.hpp"

namespace lsparcom {
namespace {

Image random_image(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    Image out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = ud(rng);
    return out;
}

// Oracle: literal zero-padded sum out(p) = sum_q k(c + q) img(p - q).
Image naive_conv(const Image& img, const Image& k) {
    const Eigen::Index h = k.rows() / 2;
    Image out = Image::Zero(img.rows(), img.cols());
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
        for (Eigen::Index c = 0; c < img.cols(); ++c) {
            for (Eigen::Index a = -h; a <= h; ++a) {
                for (Eigen::Index b = -h; b <= h; ++b) {
                    const Eigen::Index rr = r - a;
                    const Eigen::Index cc = c - b;
                    if (rr < 0 || cc < 0 || rr >= img.rows() || cc >= img.cols()) continue;
                    out(r, c) += k(h + a, h + b) * img(rr, cc);
                }
            }
        }
    }
    return out;
}

TEST(Image, Rotate90CounterClockwise) {
    Image a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    Image expected(3, 2);
    expected << 3, 6, 2, 5, 1, 4;
    EXPECT_EQ((rotate90(a, 1)).matrix(), (expected).matrix());
    EXPECT_EQ((rotate90(a, 4)).matrix(), (a).matrix());
    EXPECT_EQ((rotate90(a, -1)).matrix(), (rotate90(a, 3)).matrix());
}

TEST(Image, CenterCropOrPad) {
    Image k = Image::Zero(3, 3);
    k(1, 1) = 2.0;
    const Image big = center_crop_or_pad(k, 7);
    EXPECT_EQ(big(3, 3), 2.0);
    EXPECT_EQ(big.sum(), 2.0);
    EXPECT_EQ((center_crop_or_pad(big, 3)).matrix(), (k).matrix());
}

TEST(Conv2d, DirectMatchesNaiveSum) {
    std::mt19937_64 rng(1);
    const Image img = random_image(rng, 9, 11);
    const Image k = random_image(rng, 5, 5);
    EXPECT_LT((conv2d_same(img, k) - naive_conv(img, k)).abs().maxCoeff(), 1e-13);
}

TEST(Conv2d, AdjointsSatisfyInnerProductIdentities) {
    std::mt19937_64 rng(2);
    const Image img = random_image(rng, 8, 8);
    const Image k = random_image(rng, 5, 5);
    const Image g = random_image(rng, 8, 8);
    const double lhs = (conv2d_same(img, k) * g).sum();
    EXPECT_NEAR(lhs, (img * conv2d_same_adjoint(g, k)).sum(), 1e-12);
    EXPECT_NEAR(lhs, (k * conv2d_same_kernel_grad(img, g, 5, 5)).sum(), 1e-12);
}

TEST(FftConvolver, FriendlyLengths) {
    EXPECT_EQ(fft_friendly_length(92), 96);
    EXPECT_EQ(fft_friendly_length(11), 12);
    EXPECT_EQ(fft_friendly_length(49), 49);
}

TEST(FftConvolver, MatchesDirectConvolutionAndAdjoints) {
    std::mt19937_64 rng(3);
    for (auto [rows, cols, side] : {std::tuple{16, 16, 5}, std::tuple{13, 20, 7}, std::tuple{64, 64, 29}}) {
        const FftConvolver conv(rows, cols, side);
        const Image img = random_image(rng, rows, cols);
        const Image k = random_image(rng, side, side);
        const Image g = random_image(rng, rows, cols);
        const Image direct = conv2d_same(img, k);
        EXPECT_LT((conv.conv_same(img, k) - direct).abs().maxCoeff(), 1e-11 * direct.abs().maxCoeff());
        const Spectrum gf = conv.gradient_spectrum(g);
        const Image adj = conv2d_same_adjoint(g, k);
        EXPECT_LT((conv.adjoint_image(gf, conv.kernel_spectrum(k)) - adj).abs().maxCoeff(), 1e-11 * adj.abs().maxCoeff());
        const Image kg = conv2d_same_kernel_grad(img, g, side, side);
        EXPECT_LT((conv.adjoint_kernel(gf, conv.image_spectrum(img)) - kg).abs().maxCoeff(), 1e-11 * kg.abs().maxCoeff());
    }
}

TEST(FftConvolver, RepeatedCallsAreBitIdentical) {
    std::mt19937_64 rng(4);
    const Image img = random_image(rng, 64, 64);
    const Image k = random_image(rng, 29, 29);
    const FftConvolver a(64, 64, 29);
    const FftConvolver b(64, 64, 29);
    EXPECT_EQ((a.conv_same(img, k)).matrix(), (b.conv_same(img, k)).matrix());
}

}  // namespace
}  // namespace lsparcom
