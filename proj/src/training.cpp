#include "lsparcom/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lsparcom {

void TrainingExample::validate() const {
    if (g.rows() != x_gt.rows() || g.cols() != x_gt.cols() || mask.rows() != g.rows() ||
        mask.cols() != g.cols()) {
        throw std::invalid_argument("TrainingExample: shapes differ");
    }
}

Image support_mask(const Image& x_gt) {
    return (x_gt > 0.0).cast<double>();
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (epochs < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: counts must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
    if (!(kernel_lr_scale >= 0.0)) throw std::invalid_argument("TrainConfig: kernel_lr_scale must be >= 0");
}

double loss(const Image& x_out, const Image& x_gt, const Image& mask, double lambda) {
    if (x_out.rows() != x_gt.rows() || x_out.cols() != x_gt.cols() || mask.rows() != x_gt.rows() ||
        mask.cols() != x_gt.cols()) {
        throw std::invalid_argument("loss: shape mismatch");
    }
    const Image terms = mask * (x_gt - x_out).square() + lambda * (1.0 - mask) * x_out.abs();
    return terms.sum() / static_cast<double>(x_out.size());
}

Image loss_gradient(const Image& x_out, const Image& x_gt, const Image& mask, double lambda) {
    const double inv_n = 1.0 / static_cast<double>(x_out.size());
    const Image sign = x_out.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
    return inv_n * (mask * 2.0 * (x_out - x_gt) + lambda * (1.0 - mask) * sign);
}

// ---------------------------------------------------------------------------
// Gradients

Gradients Gradients::zeros_like(const LsparcomWeights& w) {
    Gradients g;
    g.w_i = Image::Zero(w.w_i.rows(), w.w_i.cols());
    for (const auto& k : w.w_p) g.w_p.push_back(Image::Zero(k.rows(), k.cols()));
    g.alpha0.assign(w.alpha0.size(), 0.0);
    g.beta0.assign(w.beta0.size(), 0.0);
    g.s = 0.0;
    return g;
}

Gradients& Gradients::operator+=(const Gradients& o) {
    w_i += o.w_i;
    for (std::size_t k = 0; k < w_p.size(); ++k) w_p[k] += o.w_p[k];
    for (std::size_t k = 0; k < alpha0.size(); ++k) alpha0[k] += o.alpha0[k];
    for (std::size_t k = 0; k < beta0.size(); ++k) beta0[k] += o.beta0[k];
    s += o.s;
    return *this;
}

Gradients& Gradients::operator*=(double f) {
    w_i *= f;
    for (auto& k : w_p) k *= f;
    for (auto& a : alpha0) a *= f;
    for (auto& b : beta0) b *= f;
    s *= f;
    return *this;
}

namespace {

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

Image orbit_mean(const Image& g) {
    const int side = static_cast<int>(g.rows());
    const auto ids = radial_orbit_ids(side);
    const int n = *std::max_element(ids.begin(), ids.end()) + 1;
    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (std::size_t e = 0; e < ids.size(); ++e) {
        sum[static_cast<std::size_t>(ids[e])] += g.data()[e];
        ++count[static_cast<std::size_t>(ids[e])];
    }
    Image out(g.rows(), g.cols());
    for (std::size_t e = 0; e < ids.size(); ++e) {
        const auto o = static_cast<std::size_t>(ids[e]);
        out.data()[e] = sum[o] / count[o];
    }
    return out;
}

struct ActivationGrad {
    Image d_pre;
    double d_alpha0 = 0.0;
    double d_beta0 = 0.0;
};

// Back through X = S+_{alpha, beta}(Z) with alpha = i1 + (i99 - i1) alpha0 and
// beta = beta0 / alpha; i1, i99 constant.
ActivationGrad activation_backward(const Image& d_post, const FoldRecord& rec, double beta0) {
    const LocalThreshold& t = rec.threshold;
    const double span = t.i99 - t.i1;
    const double alpha_div = t.guarded ? kThresholdEpsilon : t.alpha;
    const double dbeta_dalpha0 = t.guarded ? 0.0 : -(beta0 / (t.alpha * t.alpha)) * span;
    const double dbeta_dbeta0 = 1.0 / alpha_div;
    ActivationGrad out;
    out.d_pre = Image::Zero(d_post.rows(), d_post.cols());
    double da = 0.0;
    double db = 0.0;
    for (Eigen::Index e = 0; e < d_post.size(); ++e) {
        const double z = rec.pre.data()[e];
        if (!(z > 0.0)) continue;
        const double gx = d_post.data()[e];
        const double u = t.beta * (z - t.alpha);
        const double sg = sigmoid(u);
        const double slope = sg * sigmoid(-u);
        out.d_pre.data()[e] = gx * (sg + z * t.beta * slope);
        const double ds_dalpha = -z * t.beta * slope;
        const double ds_dbeta = z * (z - t.alpha) * slope;
        da += gx * (ds_dalpha * span + ds_dbeta * dbeta_dalpha0);
        db += gx * ds_dbeta * dbeta_dbeta0;
    }
    out.d_alpha0 = da;
    out.d_beta0 = db;
    return out;
}

void check_finite(const Image& g, const char* what, int fold) {
    if (!g.allFinite()) {
        std::ostringstream msg;
        msg << "backward: non-finite " << what << " gradient at fold " << fold;
        throw std::runtime_error(msg.str());
    }
}

}  // namespace

BackwardResult backward(const TrainingExample& example, const LsparcomNetwork& net, double lambda,
                        bool orbit_average) {
    example.validate();
    const LsparcomWeights& w = net.weights();
    const FftConvolver& conv = net.convolver();
    const ForwardPass fp = net.run(example.g);

    BackwardResult res;
    res.loss = loss(fp.output, example.x_gt, example.mask, lambda);
    Gradients& gr = res.grads;
    gr = Gradients::zeros_like(w);

    const Image d_out = loss_gradient(fp.output, example.x_gt, example.mask, lambda);
    gr.s = (d_out * fp.folds.back().post).sum();
    Image d_post = w.s * d_out;
    Image d_input_conv = Image::Zero(d_out.rows(), d_out.cols());

    for (int k = kFolds; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const ActivationGrad ag = activation_backward(d_post, fp.folds[ku], w.beta0[ku]);
        check_finite(ag.d_pre, "activation", k);
        gr.alpha0[ku] = ag.d_alpha0;
        gr.beta0[ku] = ag.d_beta0;
        d_input_conv += ag.d_pre;
        if (k == 0) break;
        // Z^(k) = U - X^(k-1) * W_p^(k-1) + X^(k-1)
        const Spectrum grad_f = conv.gradient_spectrum(ag.d_pre);
        d_post = ag.d_pre - conv.adjoint_image(grad_f, net.fold_kernel_spectrum(k - 1));
        const Image dk = -conv.adjoint_kernel(grad_f, fp.folds[ku - 1].post_f);
        gr.w_p[ku - 1] = center_crop_or_pad(dk, w.w_p[ku - 1].rows());
        check_finite(gr.w_p[ku - 1], "fold kernel", k - 1);
    }
    const Spectrum grad_f = conv.gradient_spectrum(d_input_conv);
    gr.w_i = center_crop_or_pad(conv.adjoint_kernel(grad_f, fp.input_f), w.w_i.rows());
    check_finite(gr.w_i, "input kernel", 0);

    if (orbit_average) {
        gr.w_i = orbit_mean(gr.w_i);
        for (auto& k : gr.w_p) k = orbit_mean(k);
    }
    return res;
}

BackwardResult backward(const TrainingExample& example, const LsparcomWeights& weights,
                        double lambda, bool orbit_average) {
    const LsparcomNetwork net(weights, example.g.rows(), example.g.cols());
    return backward(example, net, lambda, orbit_average);
}

double loss_with_frozen_percentiles(const TrainingExample& example, const LsparcomWeights& weights,
                                    double lambda, const FrozenPercentiles& frozen) {
    const LsparcomNetwork net(weights, example.g.rows(), example.g.cols());
    const ForwardPass fp = net.run(example.g, &frozen);
    return loss(fp.output, example.x_gt, example.mask, lambda);
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::zeros_like(const LsparcomWeights& w) {
    AdamState st;
    st.m = Gradients::zeros_like(w);
    st.v = Gradients::zeros_like(w);
    st.step = 0;
    return st;
}

namespace {

struct AdamCoefficients {
    double b1, b2, eps, lr, c1, c2;
};

void adam_update(double& p, double g, double& m, double& v, const AdamCoefficients& c) {
    m = c.b1 * m + (1.0 - c.b1) * g;
    v = c.b2 * v + (1.0 - c.b2) * g * g;
    const double m_hat = m / c.c1;
    const double v_hat = v / c.c2;
    p -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
}

void adam_update(Image& p, const Image& g, Image& m, Image& v, const AdamCoefficients& c) {
    for (Eigen::Index e = 0; e < p.size(); ++e) {
        adam_update(p.data()[e], g.data()[e], m.data()[e], v.data()[e], c);
    }
}

}  // namespace

void adam_step(LsparcomWeights& weights, const Gradients& grads, AdamState& state,
               const TrainConfig& config) {
    if (state.m.w_p.size() != weights.w_p.size() || state.m.w_i.rows() != weights.w_i.rows() ||
        state.m.alpha0.size() != weights.alpha0.size()) {
        throw std::invalid_argument("adam_step: optimizer state does not match the weights");
    }
    ++state.step;
    const auto t = static_cast<double>(state.step);
    const AdamCoefficients c{config.adam_beta1,
                             config.adam_beta2,
                             config.adam_eps,
                             config.learning_rate,
                             1.0 - std::pow(config.adam_beta1, t),
                             1.0 - std::pow(config.adam_beta2, t)};
    AdamCoefficients ck = c;
    ck.lr *= config.kernel_lr_scale;
    adam_update(weights.w_i, grads.w_i, state.m.w_i, state.v.w_i, ck);
    for (std::size_t k = 0; k < weights.w_p.size(); ++k) {
        adam_update(weights.w_p[k], grads.w_p[k], state.m.w_p[k], state.v.w_p[k], ck);
    }
    for (std::size_t k = 0; k < weights.alpha0.size(); ++k) {
        adam_update(weights.alpha0[k], grads.alpha0[k], state.m.alpha0[k], state.v.alpha0[k], c);
        adam_update(weights.beta0[k], grads.beta0[k], state.m.beta0[k], state.v.beta0[k], c);
        weights.alpha0[k] = std::clamp(weights.alpha0[k], 0.0, 1.0);
    }
    adam_update(weights.s, grads.s, state.m.s, state.v.s, c);
    weights.s = std::max(weights.s, 0.0);
    if (weights.radial_constrained) {
        weights.w_i = radial_project(weights.w_i);
        for (auto& k : weights.w_p) k = radial_project(k);
    }
}

// ---------------------------------------------------------------------------
// Example synthesis

void group_frames(const FrameStack& movie, const FrameStack& gt_movie, int group_size, Rng& rng,
                  FrameStack& movie_out, FrameStack& gt_out) {
    if (group_size < 1) throw std::invalid_argument("group_frames: group size must be >= 1");
    if (movie.size() != gt_movie.size()) {
        throw std::invalid_argument("group_frames: movie and ground truth differ in length");
    }
    const std::size_t groups = movie.size() / static_cast<std::size_t>(group_size);
    if (groups == 0) throw std::invalid_argument("group_frames: fewer frames than the group size");
    std::vector<std::size_t> order(movie.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    movie_out.grid = movie.grid;
    movie_out.metadata = movie.metadata;
    gt_out.grid = gt_movie.grid;
    gt_out.metadata = gt_movie.metadata;
    movie_out.frames.assign(groups, Image::Zero(movie.rows(), movie.cols()));
    gt_out.frames.assign(groups, Image::Zero(gt_movie.rows(), gt_movie.cols()));
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        for (int j = 0; j < group_size; ++j) {
            const std::size_t src = order[gidx * static_cast<std::size_t>(group_size) + static_cast<std::size_t>(j)];
            movie_out.frames[gidx] += movie.frames[src];
            gt_out.frames[gidx] += gt_movie.frames[src];
        }
    }
}

TrainingExample make_training_example(const FrameStack& movie, const FrameStack& gt_movie, Rng& rng,
                                      const ExampleOptions& options) {
    if (movie.size() != gt_movie.size() || movie.size() < 2) {
        throw std::invalid_argument("make_training_example: movies must be aligned and have T >= 2");
    }
    movie.validate();
    gt_movie.validate();
    const int p = options.factor;
    if (!(options.target_gain > 0.0)) throw std::invalid_argument("make_training_example: target_gain must be > 0");
    if (p < 1 || options.window_low < 1) throw std::invalid_argument("make_training_example: bad options");
    if (gt_movie.rows() != movie.rows() * p || gt_movie.cols() != movie.cols() * p) {
        throw std::invalid_argument("make_training_example: ground truth is not on the x P grid");
    }
    if (options.window_low > movie.rows() || options.window_low > movie.cols()) {
        throw std::out_of_range("make_training_example: window exceeds image bounds");
    }

    FrameStack in = movie;
    FrameStack gt = gt_movie;
    if (options.group_size > 1) group_frames(movie, gt_movie, options.group_size, rng, in, gt);

    double scale = 1.0;
    in = remove_temporal_median(normalize_stack(in, scale));
    for (auto& f : gt.frames) f /= scale;

    // Variance and resizing commute with the quarter-turn (a pixel permutation),
    // so rotating the per-pixel statistics equals rotating the movies.
    Image g_low = temporal_variance(in).values;
    Image x_full = temporal_variance(gt).values;
    int turns = 0;
    if (options.random_rotation) turns = static_cast<int>(std::uniform_int_distribution<int>(0, 3)(rng));
    g_low = rotate90(g_low, turns);
    x_full = rotate90(x_full, turns);
    const Image g_full = resize_to_high_res(g_low, p);

    const int w = options.window_low;
    const int oy = std::uniform_int_distribution<int>(0, static_cast<int>(g_low.rows()) - w)(rng);
    const int ox = std::uniform_int_distribution<int>(0, static_cast<int>(g_low.cols()) - w)(rng);
    TrainingExample ex;
    ex.g = g_full.block(Eigen::Index{oy} * p, Eigen::Index{ox} * p, Eigen::Index{w} * p, Eigen::Index{w} * p);
    ex.x_gt = x_full.block(Eigen::Index{oy} * p, Eigen::Index{ox} * p, Eigen::Index{w} * p, Eigen::Index{w} * p);
    ex.x_gt *= options.target_gain;
    ex.mask = support_mask(ex.x_gt);
    return ex;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config,
                  LsparcomWeights initial, const EpochCallback& on_epoch) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    config.validate();
    initial.validate();
    for (const auto& ex : dataset) ex.validate();

    Rng rng(config.rng_seed);
    TrainResult result;
    result.weights = std::move(initial);
    AdamState state = AdamState::zeros_like(result.weights);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            Gradients acc = Gradients::zeros_like(result.weights);
            const TrainingExample& first = dataset[order[start]];
            const LsparcomNetwork net(result.weights, first.g.rows(), first.g.cols());
            for (std::size_t i = start; i < stop; ++i) {
                const TrainingExample& ex = dataset[order[i]];
                BackwardResult br = (ex.g.rows() == first.g.rows() && ex.g.cols() == first.g.cols())
                                        ? backward(ex, net, config.lambda)
                                        : backward(ex, result.weights, config.lambda);
                loss_sum += br.loss;
                acc += br.grads;
            }
            acc *= 1.0 / static_cast<double>(stop - start);
            adam_step(result.weights, acc, state, config);
        }
        const double mean_loss = loss_sum / static_cast<double>(dataset.size());
        if (!std::isfinite(mean_loss) || mean_loss > config.divergence_limit) {
            std::ostringstream msg;
            msg << "train: diverged at epoch " << epoch << " (mean loss " << mean_loss << ")";
            throw std::runtime_error(msg.str());
        }
        result.loss_curve.push_back(mean_loss);
        if (on_epoch) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            on_epoch(EpochRecord{epoch, mean_loss, secs});
        }
    }
    return result;
}

}  // namespace lsparcom
