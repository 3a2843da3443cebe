#include "lsparcom/fft_conv.hpp"

#include <fftw3.h>

#include <stdexcept>

namespace lsparcom {

Eigen::Index fft_friendly_length(Eigen::Index n) {
    for (Eigen::Index m = std::max<Eigen::Index>(n, 1);; ++m) {
        Eigen::Index r = m;
        for (Eigen::Index p : {2, 3, 5, 7}) {
            while (r % p == 0) r /= p;
        }
        if (r == 1) return m;
    }
}

struct FftConvolver::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    mutable std::vector<double> real;
    mutable Spectrum spec;

    ~Plans() {
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

FftConvolver::FftConvolver(Eigen::Index rows, Eigen::Index cols, Eigen::Index kernel_side)
    : rows_(rows), cols_(cols), ksize_(kernel_side), plans_(std::make_unique<Plans>()) {
    if (rows < 1 || cols < 1 || kernel_side < 1 || kernel_side % 2 == 0) {
        throw std::invalid_argument("FftConvolver: invalid image or kernel size");
    }
    len_r_ = fft_friendly_length(rows + kernel_side - 1);
    len_c_ = fft_friendly_length(cols + kernel_side - 1);
    const auto n_real = static_cast<std::size_t>(len_r_ * len_c_);
    const auto n_spec = static_cast<std::size_t>(len_r_ * (len_c_ / 2 + 1));
    plans_->real.assign(n_real, 0.0);
    plans_->spec.assign(n_spec, {});
    auto* cplx = reinterpret_cast<fftw_complex*>(plans_->spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->r2c = fftw_plan_dft_r2c_2d(static_cast<int>(len_r_), static_cast<int>(len_c_),
                                       plans_->real.data(), cplx, flags);
    plans_->c2r = fftw_plan_dft_c2r_2d(static_cast<int>(len_r_), static_cast<int>(len_c_), cplx,
                                       plans_->real.data(), flags);
    if (!plans_->r2c || !plans_->c2r) {
        throw std::runtime_error("FftConvolver: FFTW planning failed");
    }
}

FftConvolver::~FftConvolver() = default;
FftConvolver::FftConvolver(FftConvolver&&) noexcept = default;
FftConvolver& FftConvolver::operator=(FftConvolver&&) noexcept = default;

Spectrum FftConvolver::forward(const Image& src, Eigen::Index offset) const {
    auto& real = plans_->real;
    std::fill(real.begin(), real.end(), 0.0);
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
        for (Eigen::Index j = 0; j < src.cols(); ++j) {
            real[static_cast<std::size_t>((i + offset) * len_c_ + j + offset)] = src(i, j);
        }
    }
    Spectrum out(plans_->spec.size());
    fftw_execute_dft_r2c(plans_->r2c, real.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

void FftConvolver::inverse(const Spectrum& spec) const {
    // c2r destroys its input, so work on the scratch copy.
    plans_->spec = spec;
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(plans_->spec.data()),
                         plans_->real.data());
}

Spectrum FftConvolver::image_spectrum(const Image& img) const {
    if (img.rows() != rows_ || img.cols() != cols_) {
        throw std::invalid_argument("FftConvolver: image shape mismatch");
    }
    return forward(img, 0);
}

Spectrum FftConvolver::kernel_spectrum(const Image& kernel) const {
    if (kernel.rows() != ksize_ || kernel.cols() != ksize_) {
        throw std::invalid_argument("FftConvolver: kernel shape mismatch");
    }
    return forward(kernel, 0);
}

Spectrum FftConvolver::gradient_spectrum(const Image& grad) const {
    if (grad.rows() != rows_ || grad.cols() != cols_) {
        throw std::invalid_argument("FftConvolver: gradient shape mismatch");
    }
    return forward(grad, ksize_ / 2);
}

Image FftConvolver::conv_same(const Spectrum& img_f, const Spectrum& kernel_f) const {
    Spectrum prod(img_f.size());
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = img_f[k] * kernel_f[k];
    inverse(prod);
    const double scale = 1.0 / static_cast<double>(len_r_ * len_c_);
    const Eigen::Index c = ksize_ / 2;
    Image out(rows_, cols_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        for (Eigen::Index j = 0; j < cols_; ++j) {
            out(i, j) = plans_->real[static_cast<std::size_t>((i + c) * len_c_ + j + c)] * scale;
        }
    }
    return out;
}

Image FftConvolver::adjoint_image(const Spectrum& grad_f, const Spectrum& kernel_f) const {
    Spectrum prod(grad_f.size());
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = grad_f[k] * std::conj(kernel_f[k]);
    inverse(prod);
    const double scale = 1.0 / static_cast<double>(len_r_ * len_c_);
    Image out(rows_, cols_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        for (Eigen::Index j = 0; j < cols_; ++j) {
            out(i, j) = plans_->real[static_cast<std::size_t>(i * len_c_ + j)] * scale;
        }
    }
    return out;
}

Image FftConvolver::adjoint_kernel(const Spectrum& grad_f, const Spectrum& img_f) const {
    Spectrum prod(grad_f.size());
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = grad_f[k] * std::conj(img_f[k]);
    inverse(prod);
    const double scale = 1.0 / static_cast<double>(len_r_ * len_c_);
    Image out(ksize_, ksize_);
    for (Eigen::Index i = 0; i < ksize_; ++i) {
        for (Eigen::Index j = 0; j < ksize_; ++j) {
            out(i, j) = plans_->real[static_cast<std::size_t>(i * len_c_ + j)] * scale;
        }
    }
    return out;
}

}  // namespace lsparcom
