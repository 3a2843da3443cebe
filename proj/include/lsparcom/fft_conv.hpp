#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "lsparcom/image.hpp"

namespace lsparcom {

using Spectrum = std::vector<std::complex<double>>;

/// FFT realization of `conv2d_same` and its two adjoints for a fixed image
/// shape and kernel size. The transform length is chosen so that the circular
/// convolution equals the zero-padded linear one, so results match the direct
/// routines to round-off. Plans are created with FFTW_ESTIMATE, which keeps the
/// arithmetic identical from run to run.
///
/// Instances are not safe to use concurrently (the scratch buffers are shared).
class FftConvolver {
public:
    FftConvolver(Eigen::Index rows, Eigen::Index cols, Eigen::Index kernel_side);
    ~FftConvolver();
    FftConvolver(FftConvolver&&) noexcept;
    FftConvolver& operator=(FftConvolver&&) noexcept;
    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    Eigen::Index kernel_side() const { return ksize_; }

    /// Spectrum of an image of shape rows x cols, placed at the origin.
    Spectrum image_spectrum(const Image& img) const;
    /// Spectrum of a kernel_side x kernel_side kernel, placed at the origin.
    Spectrum kernel_spectrum(const Image& kernel) const;
    /// Spectrum of an output-gradient image, shifted by the kernel center so the
    /// two adjoint routines below reduce to a single product each.
    Spectrum gradient_spectrum(const Image& grad) const;

    Image conv_same(const Spectrum& img_f, const Spectrum& kernel_f) const;
    Image adjoint_image(const Spectrum& grad_f, const Spectrum& kernel_f) const;
    Image adjoint_kernel(const Spectrum& grad_f, const Spectrum& img_f) const;

    Image conv_same(const Image& img, const Image& kernel) const {
        return conv_same(image_spectrum(img), kernel_spectrum(kernel));
    }

private:
    Spectrum forward(const Image& src, Eigen::Index offset) const;
    void inverse(const Spectrum& spec) const;

    Eigen::Index rows_;
    Eigen::Index cols_;
    Eigen::Index ksize_;
    Eigen::Index len_r_;
    Eigen::Index len_c_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
Eigen::Index fft_friendly_length(Eigen::Index n);

}  // namespace lsparcom
