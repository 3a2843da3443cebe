#include "lsparcom/image.hpp"

#include <stdexcept>

namespace lsparcom {

Image as_image(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw std::invalid_argument("as_image: vector length does not match shape");
    }
    Image out(rows, cols);
    std::copy(v.data(), v.data() + v.size(), out.data());
    return out;
}

Image rotate90(const Image& img, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    const Eigen::Index r = img.rows();
    const Eigen::Index c = img.cols();
    if (k == 0) {
        return img;
    }
    if (k == 2) {
        Image out(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) {
                out(r - 1 - i, c - 1 - j) = img(i, j);
            }
        }
        return out;
    }
    Image out(c, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            if (k == 1) {
                out(c - 1 - j, i) = img(i, j);
            } else {
                out(j, r - 1 - i) = img(i, j);
            }
        }
    }
    return out;
}

Image center_crop_or_pad(const Image& kernel, Eigen::Index side) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0 || side % 2 == 0) {
        throw std::invalid_argument("center_crop_or_pad: odd sizes required");
    }
    Image out = Image::Zero(side, side);
    const Eigen::Index cr = kernel.rows() / 2;
    const Eigen::Index cc = kernel.cols() / 2;
    const Eigen::Index h = side / 2;
    for (Eigen::Index i = -h; i <= h; ++i) {
        for (Eigen::Index j = -h; j <= h; ++j) {
            const Eigen::Index ki = cr + i;
            const Eigen::Index kj = cc + j;
            if (ki >= 0 && ki < kernel.rows() && kj >= 0 && kj < kernel.cols()) {
                out(h + i, h + j) = kernel(ki, kj);
            }
        }
    }
    return out;
}

namespace {

void require_odd(const Image& kernel) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0) {
        throw std::invalid_argument("convolution kernel must have odd side lengths");
    }
}

}  // namespace

Image conv2d_same(const Image& img, const Image& kernel) {
    require_odd(kernel);
    const Eigen::Index rows = img.rows();
    const Eigen::Index cols = img.cols();
    const Eigen::Index hr = kernel.rows() / 2;
    const Eigen::Index hc = kernel.cols() / 2;
    Image out = Image::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (Eigen::Index qi = -hr; qi <= hr; ++qi) {
                const Eigen::Index si = i - qi;
                if (si < 0 || si >= rows) continue;
                for (Eigen::Index qj = -hc; qj <= hc; ++qj) {
                    const Eigen::Index sj = j - qj;
                    if (sj < 0 || sj >= cols) continue;
                    acc += kernel(hr + qi, hc + qj) * img(si, sj);
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Image conv2d_same_adjoint(const Image& grad, const Image& kernel) {
    require_odd(kernel);
    const Eigen::Index rows = grad.rows();
    const Eigen::Index cols = grad.cols();
    const Eigen::Index hr = kernel.rows() / 2;
    const Eigen::Index hc = kernel.cols() / 2;
    Image out = Image::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (Eigen::Index qi = -hr; qi <= hr; ++qi) {
                const Eigen::Index si = i + qi;
                if (si < 0 || si >= rows) continue;
                for (Eigen::Index qj = -hc; qj <= hc; ++qj) {
                    const Eigen::Index sj = j + qj;
                    if (sj < 0 || sj >= cols) continue;
                    acc += kernel(hr + qi, hc + qj) * grad(si, sj);
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Image conv2d_same_kernel_grad(const Image& img, const Image& grad, Eigen::Index kernel_rows,
                              Eigen::Index kernel_cols) {
    if (kernel_rows % 2 == 0 || kernel_cols % 2 == 0) {
        throw std::invalid_argument("convolution kernel must have odd side lengths");
    }
    const Eigen::Index rows = img.rows();
    const Eigen::Index cols = img.cols();
    const Eigen::Index hr = kernel_rows / 2;
    const Eigen::Index hc = kernel_cols / 2;
    Image out = Image::Zero(kernel_rows, kernel_cols);
    for (Eigen::Index qi = -hr; qi <= hr; ++qi) {
        for (Eigen::Index qj = -hc; qj <= hc; ++qj) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < rows; ++i) {
                const Eigen::Index si = i - qi;
                if (si < 0 || si >= rows) continue;
                for (Eigen::Index j = 0; j < cols; ++j) {
                    const Eigen::Index sj = j - qj;
                    if (sj < 0 || sj >= cols) continue;
                    acc += grad(i, j) * img(si, sj);
                }
            }
            out(hr + qi, hc + qj) = acc;
        }
    }
    return out;
}

}  // namespace lsparcom
