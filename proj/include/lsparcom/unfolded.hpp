#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lsparcom/fft_conv.hpp"
#include "lsparcom/image.hpp"
#include "lsparcom/model.hpp"

namespace lsparcom {

/// Number of unfolded iterations; activation parameter sets number kFolds + 1.
inline constexpr int kFolds = 10;
inline constexpr int kInputKernelSide = 25;
inline constexpr int kFoldKernelSide = 29;

/// Guard for the slope division when the cutoff is not positive.
inline constexpr double kThresholdEpsilon = 1e-12;

struct ActivationParams {
    double alpha0 = 0.95;  ///< relative cutoff in [0, 1]
    double beta0 = 8.0;    ///< relative slope
};

/// Local activation parameters for one patch, with the percentiles they came from.
struct LocalThreshold {
    double alpha = 0.0;
    double beta = 0.0;
    double i1 = 0.0;
    double i99 = 0.0;
    bool guarded = false;  ///< alpha <= epsilon, beta used epsilon instead
};

/// All trainable parameters of the network.
struct LsparcomWeights {
    Image w_i;                   ///< input filter (imitates A~^T)
    std::vector<Image> w_p;      ///< one filter per fold (imitates M)
    std::vector<double> alpha0;  ///< kFolds + 1 relative cutoffs
    std::vector<double> beta0;   ///< kFolds + 1 relative slopes
    double s = 0.01;             ///< output scale
    bool radial_constrained = true;

    /// Every scalar, kernels counted entry by entry (9058 for the default shapes).
    std::size_t parameter_count() const;
    /// Unique values under the radial constraint (1166 for the default shapes).
    std::size_t radial_parameter_count() const;
    std::size_t trainable_parameter_count() const {
        return radial_constrained ? radial_parameter_count() : parameter_count();
    }
    void validate() const;
};

/// Gaussian kernels with sigma = 1 high-res pixel, normalized to unit sum;
/// alpha0 = 0.95, beta0 = 8, s = 0.01.
LsparcomWeights init_weights(int wi_side = kInputKernelSide, int wp_side = kFoldKernelSide);

/// Replaces every set of entries at equal distance from the center by its mean.
/// Orbits that are already constant are left untouched, so the projection is
/// exactly idempotent.
Image radial_project(const Image& kernel);

/// Number of distinct i^2 + j^2 over |i|, |j| <= (side - 1) / 2.
int count_radial_orbits(int side);

/// Orbit id of every kernel entry (row-major), ids in [0, count_radial_orbits(side)).
std::vector<int> radial_orbit_ids(int side);

/// Linear interpolation between order statistics at rank p/100 * (n - 1).
double percentile(std::span<const double> values, double p);

/// alpha = i1 + (i99 - i1) alpha0, beta = beta0 / alpha.
LocalThreshold threshold_from_percentiles(double i1, double i99, const ActivationParams& params);
LocalThreshold local_threshold(const Image& patch, const ActivationParams& params);

/// ReLU(x) / (1 + exp(-beta (|x| - alpha))).
double smooth_activation(double x, double alpha, double beta);
Image smooth_activation(const Image& x, double alpha, double beta);

/// Percentile pairs (i1, i99) per activation, used to pin the data-dependent
/// thresholds (finite-difference checks evaluate the network this way).
using FrozenPercentiles = std::vector<std::pair<double, double>>;

struct FoldRecord {
    Image pre;        ///< input of the activation
    Image post;       ///< X^(k)
    Spectrum post_f;  ///< FFT of X^(k), reused by backprop
    LocalThreshold threshold;
};

struct ForwardPass {
    Image input_conv;  ///< G * W_i
    Spectrum input_f;  ///< FFT of G
    std::vector<FoldRecord> folds;  ///< kFolds + 1 entries, X^(0) .. X^(10)
    Image output;      ///< s * X^(10)

    FrozenPercentiles percentiles() const;
};

/// Network evaluator bound to one set of weights and one input shape. Kernel
/// spectra are computed once; every convolution is zero-padded "same" with
/// stride 1.
class LsparcomNetwork {
public:
    LsparcomNetwork(const LsparcomWeights& weights, Eigen::Index rows, Eigen::Index cols);

    ForwardPass run(const Image& g, const FrozenPercentiles* frozen = nullptr) const;

    const LsparcomWeights& weights() const { return weights_; }
    const FftConvolver& convolver() const { return conv_; }
    const Spectrum& input_kernel_spectrum() const { return wi_f_; }
    const Spectrum& fold_kernel_spectrum(int k) const { return wp_f_[static_cast<std::size_t>(k)]; }

private:
    LsparcomWeights weights_;
    FftConvolver conv_;
    Spectrum wi_f_;
    std::vector<Spectrum> wp_f_;
};

/// X_out = s * X^(10) for a single high-resolution input G.
EmitterMap forward(const Image& g, const LsparcomWeights& weights);

}  // namespace lsparcom
