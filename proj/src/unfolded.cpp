#include "lsparcom/unfolded.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lsparcom {

namespace {

void require_odd_square(const Image& k, const char* what) {
    if (k.rows() != k.cols() || k.rows() % 2 == 0) {
        throw std::invalid_argument(std::string(what) + ": kernel must be square with an odd side");
    }
}

Eigen::Index common_kernel_side(const LsparcomWeights& w) {
    Eigen::Index side = w.w_i.rows();
    for (const auto& k : w.w_p) side = std::max(side, k.rows());
    return side;
}

Image normalized_gaussian(int side, double sigma) {
    const int h = side / 2;
    Image k(side, side);
    for (int i = -h; i <= h; ++i) {
        for (int j = -h; j <= h; ++j) {
            k(i + h, j + h) = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
        }
    }
    return k / k.sum();
}

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Weights

std::size_t LsparcomWeights::parameter_count() const {
    std::size_t n = static_cast<std::size_t>(w_i.size());
    for (const auto& k : w_p) n += static_cast<std::size_t>(k.size());
    return n + alpha0.size() + beta0.size() + 1;
}

std::size_t LsparcomWeights::radial_parameter_count() const {
    auto n = static_cast<std::size_t>(count_radial_orbits(static_cast<int>(w_i.rows())));
    for (const auto& k : w_p) n += static_cast<std::size_t>(count_radial_orbits(static_cast<int>(k.rows())));
    return n + alpha0.size() + beta0.size() + 1;
}

void LsparcomWeights::validate() const {
    require_odd_square(w_i, "LsparcomWeights.w_i");
    if (w_p.size() != static_cast<std::size_t>(kFolds)) {
        throw std::invalid_argument("LsparcomWeights: expected one fold kernel per fold");
    }
    for (const auto& k : w_p) require_odd_square(k, "LsparcomWeights.w_p");
    if (alpha0.size() != kFolds + 1 || beta0.size() != kFolds + 1) {
        throw std::invalid_argument("LsparcomWeights: expected kFolds + 1 activation parameter sets");
    }
    for (double a : alpha0) {
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("LsparcomWeights: alpha0 outside [0, 1]");
    }
    bool finite = w_i.allFinite() && std::isfinite(s);
    for (const auto& k : w_p) finite = finite && k.allFinite();
    for (double b : beta0) finite = finite && std::isfinite(b);
    if (!finite) throw std::invalid_argument("LsparcomWeights: non-finite parameter");
}

LsparcomWeights init_weights(int wi_side, int wp_side) {
    if (wi_side < 1 || wp_side < 1 || wi_side % 2 == 0 || wp_side % 2 == 0) {
        throw std::invalid_argument("init_weights: kernel sides must be odd");
    }
    LsparcomWeights w;
    w.w_i = radial_project(normalized_gaussian(wi_side, 1.0));
    const Image wp = radial_project(normalized_gaussian(wp_side, 1.0));
    w.w_p.assign(kFolds, wp);
    w.alpha0.assign(kFolds + 1, 0.95);
    w.beta0.assign(kFolds + 1, 8.0);
    w.s = 0.01;
    w.radial_constrained = true;
    return w;
}

// ---------------------------------------------------------------------------
// Radial constraint

std::vector<int> radial_orbit_ids(int side) {
    if (side < 1 || side % 2 == 0) throw std::invalid_argument("radial orbits: side must be odd");
    const int h = side / 2;
    std::map<int, int> id_of_radius;
    for (int i = 0; i <= h; ++i) {
        for (int j = 0; j <= h; ++j) id_of_radius.emplace(i * i + j * j, 0);
    }
    int next = 0;
    for (auto& [r2, id] : id_of_radius) id = next++;
    std::vector<int> ids(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
    for (int i = -h; i <= h; ++i) {
        for (int j = -h; j <= h; ++j) {
            ids[static_cast<std::size_t>((i + h) * side + (j + h))] = id_of_radius.at(i * i + j * j);
        }
    }
    return ids;
}

int count_radial_orbits(int side) {
    const auto ids = radial_orbit_ids(side);
    return *std::max_element(ids.begin(), ids.end()) + 1;
}

Image radial_project(const Image& kernel) {
    require_odd_square(kernel, "radial_project");
    const int side = static_cast<int>(kernel.rows());
    const auto ids = radial_orbit_ids(side);
    const int n_orbits = *std::max_element(ids.begin(), ids.end()) + 1;
    std::vector<double> sum(static_cast<std::size_t>(n_orbits), 0.0);
    std::vector<int> count(static_cast<std::size_t>(n_orbits), 0);
    std::vector<double> first(static_cast<std::size_t>(n_orbits), 0.0);
    std::vector<bool> constant(static_cast<std::size_t>(n_orbits), true);
    for (std::size_t e = 0; e < ids.size(); ++e) {
        const auto o = static_cast<std::size_t>(ids[e]);
        const double v = kernel.data()[e];
        if (count[o] == 0) {
            first[o] = v;
        } else if (v != first[o]) {
            constant[o] = false;
        }
        sum[o] += v;
        ++count[o];
    }
    Image out = kernel;
    for (std::size_t e = 0; e < ids.size(); ++e) {
        const auto o = static_cast<std::size_t>(ids[e]);
        if (!constant[o]) out.data()[e] = sum[o] / count[o];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Activation

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p outside [0, 100]");
    std::vector<double> v(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (frac == 0.0 || lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + frac * (b - a);
}

LocalThreshold threshold_from_percentiles(double i1, double i99, const ActivationParams& params) {
    LocalThreshold t;
    t.i1 = i1;
    t.i99 = i99;
    t.alpha = i1 + (i99 - i1) * params.alpha0;
    t.guarded = !(t.alpha > kThresholdEpsilon);
    t.beta = params.beta0 / (t.guarded ? kThresholdEpsilon : t.alpha);
    return t;
}

LocalThreshold local_threshold(const Image& patch, const ActivationParams& params) {
    const std::span<const double> v(patch.data(), static_cast<std::size_t>(patch.size()));
    return threshold_from_percentiles(percentile(v, 1.0), percentile(v, 99.0), params);
}

double smooth_activation(double x, double alpha, double beta) {
    if (!(x > 0.0)) return 0.0;
    return x * sigmoid(beta * (x - alpha));
}

Image smooth_activation(const Image& x, double alpha, double beta) {
    return x.unaryExpr([alpha, beta](double v) { return smooth_activation(v, alpha, beta); });
}

// ---------------------------------------------------------------------------
// Forward pass

FrozenPercentiles ForwardPass::percentiles() const {
    FrozenPercentiles out;
    out.reserve(folds.size());
    for (const auto& f : folds) out.emplace_back(f.threshold.i1, f.threshold.i99);
    return out;
}

LsparcomNetwork::LsparcomNetwork(const LsparcomWeights& weights, Eigen::Index rows, Eigen::Index cols)
    : weights_(weights), conv_(rows, cols, common_kernel_side(weights)) {
    weights_.validate();
    const Eigen::Index side = conv_.kernel_side();
    wi_f_ = conv_.kernel_spectrum(center_crop_or_pad(weights_.w_i, side));
    wp_f_.reserve(weights_.w_p.size());
    for (const auto& k : weights_.w_p) wp_f_.push_back(conv_.kernel_spectrum(center_crop_or_pad(k, side)));
}

ForwardPass LsparcomNetwork::run(const Image& g, const FrozenPercentiles* frozen) const {
    if (g.rows() != conv_.rows() || g.cols() != conv_.cols()) {
        throw std::invalid_argument("LsparcomNetwork: input shape does not match the network");
    }
    if (frozen && frozen->size() != static_cast<std::size_t>(kFolds + 1)) {
        throw std::invalid_argument("LsparcomNetwork: frozen percentiles need kFolds + 1 entries");
    }
    ForwardPass fp;
    fp.input_f = conv_.image_spectrum(g);
    fp.input_conv = conv_.conv_same(fp.input_f, wi_f_);
    fp.folds.reserve(kFolds + 1);

    auto activate = [&](Image pre, int k) {
        FoldRecord rec;
        const ActivationParams params{weights_.alpha0[static_cast<std::size_t>(k)],
                                      weights_.beta0[static_cast<std::size_t>(k)]};
        if (frozen) {
            const auto& [i1, i99] = (*frozen)[static_cast<std::size_t>(k)];
            rec.threshold = threshold_from_percentiles(i1, i99, params);
        } else {
            rec.threshold = local_threshold(pre, params);
        }
        rec.post = smooth_activation(pre, rec.threshold.alpha, rec.threshold.beta);
        rec.pre = std::move(pre);
        if (k < kFolds) rec.post_f = conv_.image_spectrum(rec.post);
        fp.folds.push_back(std::move(rec));
    };

    activate(fp.input_conv, 0);
    for (int k = 0; k < kFolds; ++k) {
        const FoldRecord& prev = fp.folds.back();
        Image pre = fp.input_conv - conv_.conv_same(prev.post_f, wp_f_[static_cast<std::size_t>(k)]) +
                    prev.post;
        activate(std::move(pre), k + 1);
    }
    fp.output = weights_.s * fp.folds.back().post;
    return fp;
}

EmitterMap forward(const Image& g, const LsparcomWeights& weights) {
    LsparcomNetwork net(weights, g.rows(), g.cols());
    ForwardPass fp = net.run(g);
    return EmitterMap(std::move(fp.output));
}

}  // namespace lsparcom
