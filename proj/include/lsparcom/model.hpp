#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lsparcom/image.hpp"

namespace lsparcom {

/// Low/high resolution grid pair. The high-resolution side is an exact integer
/// multiple of the low-resolution side.
///
/// Geometry: low-res pixel m covers high-res pixels [m*P, (m+1)*P); pixel
/// centers sit at m + 0.5 (low-res units) and (i + 0.5) / P respectively.
struct GridSpec {
    int low_side = 1;        ///< M
    int factor = 1;          ///< P = N / M
    double low_pitch = 1.0;  ///< informational, length units per low-res pixel

    GridSpec() = default;
    GridSpec(int low_side_, int factor_, double low_pitch_ = 1.0);

    /// Builds a grid from both sides; throws unless N is a multiple of M.
    static GridSpec from_sides(int low_side, int high_side, double low_pitch = 1.0);

    int high_side() const { return low_side * factor; }
    double high_pitch() const { return low_pitch / factor; }
    Eigen::Index low_pixels() const { return Eigen::Index{low_side} * low_side; }
    Eigen::Index high_pixels() const { return Eigen::Index{high_side()} * high_side(); }
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

/// Point spread function, evaluated in low-resolution pixel units relative to
/// the emitter position and peak-normalized to 1.
class Psf {
public:
    enum class Kind { gaussian, delta, sampled };

    /// Isotropic Gaussian; support_radius <= 0 selects ceil(4 sigma).
    static Psf gaussian(double sigma, int support_radius = 0);
    /// Dirac delta on the low-resolution grid: an emitter only lights the
    /// camera pixel that contains it.
    static Psf delta();
    /// Tabulated PSF on the low-resolution grid (odd side, centered). Values
    /// between samples are bilinearly interpolated, zero outside the table.
    static Psf sampled(Image kernel);

    Kind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    /// Truncation half-width in low-res pixels (square window).
    double support_radius() const { return radius_; }
    const Image& table() const { return table_; }

    /// PSF value at offset (dy, dx) in low-res pixel units.
    double value(double dy, double dx) const;

private:
    Psf() = default;
    Kind kind_ = Kind::delta;
    double sigma_ = 0.0;
    double radius_ = 0.5;
    Image table_;
};

/// Samples the PSF at integer offsets of the requested grid, truncated at the
/// support radius, odd-sided and peak-normalized. A delta PSF gives [[1]] on
/// either grid.
Image build_psf_kernel(const Psf& psf, const GridSpec& grid, bool on_high_res);

/// Measurement operator A (or its element-wise square), mapping an N x N
/// high-resolution image to an M x M low-resolution frame. Column l of A is
/// the camera image of the PSF centered on high-res pixel l, clipped at the
/// frame border.
///
/// Two interchangeable realizations: an explicit dense M^2 x N^2 matrix for
/// small test grids, and a strided convolution (stride P) with a tap table.
class MeasurementOperator {
public:
    enum class Form { explicit_matrix, convolutional };

    /// Default cap on M for explicit matrices.
    static constexpr int kDefaultExplicitCap = 16;

    static MeasurementOperator convolutional(const Psf& psf, const GridSpec& grid, bool squared);
    static MeasurementOperator explicit_matrix(const Psf& psf, const GridSpec& grid, bool squared,
                                               int size_cap = kDefaultExplicitCap);

    Form form() const { return form_; }
    bool squared() const { return squared_; }
    const GridSpec& grid() const { return grid_; }
    /// Dense matrix; throws for the convolutional form.
    const Eigen::MatrixXd& matrix() const;
    /// Tap table of the strided convolution: entry (a, b) is the weight from
    /// high-res pixel i to low-res pixel m when m*P - i = (tap_origin + a, tap_origin + b).
    const Image& taps() const { return taps_; }
    int tap_origin() const { return tap_origin_; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Image forward(const Image& x) const;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const;
    Image adjoint(const Image& y) const;

    /// Column l as a low-res image (A e_l).
    Image column(Eigen::Index l) const;

private:
    MeasurementOperator(const Psf& psf, const GridSpec& grid, bool squared);

    void forward_conv(const double* x, double* y) const;
    void adjoint_conv(const double* y, double* x) const;

    GridSpec grid_;
    bool squared_ = false;
    Form form_ = Form::convolutional;
    Image taps_;
    int tap_origin_ = 0;
    std::optional<Eigen::MatrixXd> matrix_;
};

/// High-resolution emitter map X (nonnegative), with an optional point list
/// for ground truth.
struct EmitterPoint {
    int row = 0;
    int col = 0;
    double amplitude = 0.0;
};

struct EmitterMap {
    Image values;
    std::vector<EmitterPoint> points;

    EmitterMap() = default;
    explicit EmitterMap(Image v, std::vector<EmitterPoint> pts = {});
};

struct TheoreticalKernels {
    Image w_i;  ///< squared high-res PSF, 25 x 25 by default
    Image w_p;  ///< row of A~^T A~ for a pixel aligned with a camera pixel, 29 x 29 by default
};

/// Kernels that the learned filters approximate. `w_p` is evaluated for a
/// high-resolution location that coincides with a low-resolution pixel
/// center; for odd P that location exists on the grid and `w_p` equals the
/// corresponding row of A~^T A~ away from the borders.
TheoreticalKernels theoretical_kernels(const Psf& psf, const GridSpec& grid, int wi_side = 25,
                                       int wp_side = 29);

/// Full-support kernel of the A~^T A~ approximation used by `theoretical_kernels`.
Image gram_kernel(const Psf& psf, const GridSpec& grid);

}  // namespace lsparcom
