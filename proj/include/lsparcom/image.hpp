#pragma once

#include <Eigen/Core>

namespace lsparcom {

/// Row-major 2-D array of doubles. Every image, kernel and map in the library
/// uses this layout so that `data()` is the vector stacking used by the
/// measurement-matrix formulation (index = row * cols + col).
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Column view of an image in vector-stacked order.
inline Eigen::Map<const Eigen::VectorXd> as_vector(const Image& img) {
    return {img.data(), img.size()};
}

Image as_image(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

/// Rotates counter-clockwise by `quarter_turns` * 90 degrees (any integer).
Image rotate90(const Image& img, int quarter_turns);

/// Copies the centered `side`x`side` window of an odd-sided square kernel,
/// zero-padding when the kernel is smaller.
Image center_crop_or_pad(const Image& kernel, Eigen::Index side);

/// Direct "same" convolution with zero padding. `kernel` must have odd sides;
/// out(p) = sum_q kernel(c + q) * img(p - q).
Image conv2d_same(const Image& img, const Image& kernel);

/// Adjoint of `conv2d_same` with respect to the image argument (a correlation).
Image conv2d_same_adjoint(const Image& grad, const Image& kernel);

/// Gradient of <grad, conv2d_same(img, kernel)> with respect to the kernel,
/// returned with the kernel's shape.
Image conv2d_same_kernel_grad(const Image& img, const Image& grad, Eigen::Index kernel_rows,
                              Eigen::Index kernel_cols);

}  // namespace lsparcom
