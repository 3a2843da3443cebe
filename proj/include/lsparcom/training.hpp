#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lsparcom/image.hpp"
#include "lsparcom/stats.hpp"
#include "lsparcom/unfolded.hpp"

namespace lsparcom {

using Rng = std::mt19937_64;

/// One supervised patch: network input, ground-truth variances and the
/// support mask (b = 1 exactly where x_gt > 0).
struct TrainingExample {
    Image g;
    Image x_gt;
    Image mask;

    void validate() const;
};

/// Builds the mask by binarizing the ground truth at zero.
Image support_mask(const Image& x_gt);

struct TrainConfig {
    double lambda = 0.7;
    int epochs = 100;
    int batch_size = 16;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-7;
    /// Kernel step = learning_rate * kernel_lr_scale. Adam moves every entry by
    /// about the step, so a kernel's sum can shift by (entries x step) per update.
    double kernel_lr_scale = 1.0;
    std::uint64_t rng_seed = 0;
    double divergence_limit = 1e6;

    void validate() const;
};

/// Mean over pixels of b (x_gt - x_out)^2 + lambda (1 - b) |x_out|.
double loss(const Image& x_out, const Image& x_gt, const Image& mask, double lambda);

/// d loss / d x_out (sub-gradient 0 at x_out = 0 off support).
Image loss_gradient(const Image& x_out, const Image& x_gt, const Image& mask, double lambda);

/// Gradient with the same layout as LsparcomWeights.
struct Gradients {
    Image w_i;
    std::vector<Image> w_p;
    std::vector<double> alpha0;
    std::vector<double> beta0;
    double s = 0.0;

    static Gradients zeros_like(const LsparcomWeights& w);
    Gradients& operator+=(const Gradients& o);
    Gradients& operator*=(double f);
};

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

/// Exact gradient of `loss` through all folds. Percentiles i1 / i99 are held
/// fixed (they enter only through alpha = i1 + (i99 - i1) alpha0); alpha0 and
/// beta0 are differentiated exactly. With `orbit_average`, kernel gradients are
/// averaged over the radial orbits so a radial kernel stays radial.
BackwardResult backward(const TrainingExample& example, const LsparcomNetwork& net, double lambda,
                        bool orbit_average = true);
BackwardResult backward(const TrainingExample& example, const LsparcomWeights& weights,
                        double lambda, bool orbit_average = true);

/// Loss of the network with percentiles pinned to `frozen` (finite-difference
/// companion of `backward`).
double loss_with_frozen_percentiles(const TrainingExample& example, const LsparcomWeights& weights,
                                    double lambda, const FrozenPercentiles& frozen);

struct AdamState {
    Gradients m;
    Gradients v;
    long step = 0;

    static AdamState zeros_like(const LsparcomWeights& w);
};

/// Bias-corrected Adam update, then alpha0 clamped to [0, 1] and s to >= 0, then (when the
/// weights are radially constrained) every kernel projected onto the radial set.
void adam_step(LsparcomWeights& weights, const Gradients& grads, AdamState& state,
               const TrainConfig& config);

struct ExampleOptions {
    int window_low = 16;    ///< crop side on the low-res grid
    int factor = 4;         ///< upsampling factor
    int group_size = 1;     ///< frames summed into one (1 = no summing)
    bool random_rotation = true;
    /// Ground-truth multiplier. Normalized variances are O(0.1), which lets the
    /// off-support L1 term swamp the support term at the usual lambda.
    double target_gain = 1000.0;
};

/// Random frame grouping, shared rotation, variance of movie and ground truth,
/// x P resize of the input variance and an aligned random crop. `movie` is
/// preprocessed (normalized, median removed) here; the ground-truth movie is
/// scaled by the same normalization factor.
TrainingExample make_training_example(const FrameStack& movie, const FrameStack& gt_movie, Rng& rng,
                                      const ExampleOptions& options = {});

/// Sums frames in random disjoint groups of `group_size` (trailing remainder dropped).
/// Both stacks receive the same grouping.
void group_frames(const FrameStack& movie, const FrameStack& gt_movie, int group_size, Rng& rng,
                  FrameStack& movie_out, FrameStack& gt_out);

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    LsparcomWeights weights;
    std::vector<double> loss_curve;  ///< mean example loss per epoch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam over shuffled examples. Deterministic for a fixed seed.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config,
                  LsparcomWeights initial = init_weights(), const EpochCallback& on_epoch = {});

}  // namespace lsparcom
