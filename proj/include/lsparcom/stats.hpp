#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsparcom/image.hpp"
#include "lsparcom/model.hpp"

namespace lsparcom {

/// T frames of M x M intensities.
struct FrameStack {
    std::vector<Image> frames;
    GridSpec grid;
    std::map<std::string, std::string> metadata;

    Eigen::Index rows() const { return frames.empty() ? 0 : frames.front().rows(); }
    Eigen::Index cols() const { return frames.empty() ? 0 : frames.front().cols(); }
    std::size_t size() const { return frames.size(); }
    /// Throws if frames differ in shape.
    void validate() const;
};

/// Symmetric M^2 x M^2 covariance R_y.
struct CovarianceMatrix {
    Eigen::MatrixXd values;
};

struct VarianceImage {
    enum class Provenance { raw, resized };
    Image values;
    Provenance provenance = Provenance::raw;
};

/// Scales the whole movie so its maximum is 1. Throws on a movie whose maximum
/// is not positive.
FrameStack normalize_stack(const FrameStack& stack);

/// Like normalize_stack, also reporting the divisor that was applied.
FrameStack normalize_stack(const FrameStack& stack, double& scale);

/// Subtracts the per-pixel temporal median (midpoint of the two central order
/// statistics for even T).
FrameStack remove_temporal_median(const FrameStack& stack);

/// normalize_stack followed by remove_temporal_median.
FrameStack preprocess(const FrameStack& stack);

/// Per-pixel variance about the temporal mean, normalized by 1/T.
VarianceImage temporal_variance(const FrameStack& stack);

/// Bilinear upsampling by an integer factor. Output pixel j samples input
/// coordinate (j + 0.5) / P - 0.5, clamped to the image; this puts every
/// low-res sample exactly on the camera pixel centre used by the measurement
/// operator.
Image resize_to_high_res(const Image& img, int factor);

/// Default cap on M for explicit M^2 x M^2 covariance matrices.
inline constexpr int kCovarianceCap = 16;

/// R_y = (1/T) Y Y^T with Y the mean-removed stack; diagonal equals
/// temporal_variance bit for bit.
CovarianceMatrix empirical_covariance(const FrameStack& stack, int size_cap = kCovarianceCap);

/// v_l = a_l^T R_y a_l (covariance formulation); requires an explicit A.
Eigen::VectorXd compute_v_cov(const MeasurementOperator& a, const CovarianceMatrix& r_y);

/// v = A~^T g_Y (variance formulation); `a_sq` must be squared.
Eigen::VectorXd compute_v_var(const MeasurementOperator& a_sq, const Image& g_y);

enum class Formulation { cov, var };

/// Symmetric positive semidefinite operator on N^2-vectors (the matrix M).
struct GramOperator {
    Eigen::Index dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return apply(x); }
};

/// Dense M: |A^T A|^2 element-wise (cov) or A~^T A~ (var). `a` must be
/// explicit; for the var formulation it must be squared, for cov unsquared.
Eigen::MatrixXd compute_M_matrix(const MeasurementOperator& a, Formulation formulation,
                                 int size_cap = MeasurementOperator::kDefaultExplicitCap);

/// Exact matrix-free M. var: x -> A~^T (A~ x) using either form of the operator.
/// cov: x -> [a_l^T (A diag(x) A^T) a_l]_l, which needs explicit A.
GramOperator gram_operator(const MeasurementOperator& a, Formulation formulation);

/// Wraps a dense symmetric matrix.
GramOperator gram_from_matrix(Eigen::MatrixXd m);

/// Shift-invariant approximation of M: "same" convolution of the N x N image
/// with `kernel`, directly or through the FFT.
GramOperator gram_from_kernel(const Image& kernel, int side, bool use_fft);

struct LipschitzEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    bool zero_operator = false;
};

/// Largest eigenvalue of a symmetric PSD operator by power iteration with a
/// Rayleigh-quotient estimate (never above the true value). Stops when the
/// relative change drops below `rel_tol` or after `max_iters`.
LipschitzEstimate lipschitz_constant(const GramOperator& m, double rel_tol = 1e-9,
                                     int max_iters = 10000);

}  // namespace lsparcom
