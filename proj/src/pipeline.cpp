#include "lsparcom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lsparcom {

void PatchPlan::validate() const {
    if (patch_low < 1 || overlap_low < 0 || overlap_low >= patch_low) {
        throw std::invalid_argument("PatchPlan: need 0 <= overlap < patch");
    }
    if (!(tukey_r >= 0.0 && tukey_r <= 1.0)) throw std::invalid_argument("PatchPlan: tukey_r outside [0, 1]");
}

std::vector<int> patch_origins(int length, int patch, int stride) {
    if (patch < 1 || stride < 1) throw std::invalid_argument("patch_origins: patch and stride must be positive");
    if (length <= patch) return {0};
    std::vector<int> out;
    for (int o = 0; o + patch <= length; o += stride) out.push_back(o);
    if (out.back() + patch < length) out.push_back(length - patch);
    return out;
}

int padded_extent(int length, int patch) {
    return std::max(length, patch);
}

std::vector<Placement> plan_placements(int rows, int cols, int patch, int overlap) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("plan_placements: empty canvas");
    if (overlap < 0 || overlap >= patch) throw std::invalid_argument("plan_placements: need 0 <= overlap < patch");
    const auto ro = patch_origins(padded_extent(rows, patch), patch, patch - overlap);
    const auto co = patch_origins(padded_extent(cols, patch), patch, patch - overlap);
    std::vector<Placement> out;
    out.reserve(ro.size() * co.size());
    for (int r : ro) {
        for (int c : co) out.push_back({r, c, patch});
    }
    return out;
}

namespace {

Image crop_zero_padded(const Image& image, const Placement& p) {
    Image out = Image::Zero(p.side, p.side);
    const int r_end = std::min<int>(p.row + p.side, static_cast<int>(image.rows()));
    const int c_end = std::min<int>(p.col + p.side, static_cast<int>(image.cols()));
    if (r_end > p.row && c_end > p.col) {
        out.block(0, 0, r_end - p.row, c_end - p.col) = image.block(p.row, p.col, r_end - p.row, c_end - p.col);
    }
    return out;
}

std::vector<Placement> scaled(const std::vector<Placement>& placements, int factor) {
    std::vector<Placement> out = placements;
    for (auto& p : out) {
        p.row *= factor;
        p.col *= factor;
        p.side *= factor;
    }
    return out;
}

bool has_positive_sample(const FrameStack& stack) {
    for (const auto& f : stack.frames) {
        if (f.size() > 0 && f.maxCoeff() > 0.0) return true;
    }
    return false;
}

}  // namespace

std::vector<Image> extract_patches(const Image& image, const std::vector<Placement>& placements) {
    std::vector<Image> out;
    out.reserve(placements.size());
    for (const auto& p : placements) out.push_back(crop_zero_padded(image, p));
    return out;
}

std::vector<FrameStack> extract_patches(const FrameStack& stack, const std::vector<Placement>& placements) {
    stack.validate();
    std::vector<FrameStack> out(placements.size());
    for (std::size_t i = 0; i < placements.size(); ++i) {
        out[i].grid = GridSpec(placements[i].side, 1, stack.grid.low_pitch);
        out[i].metadata = stack.metadata;
        out[i].frames.reserve(stack.size());
        for (const auto& f : stack.frames) out[i].frames.push_back(crop_zero_padded(f, placements[i]));
    }
    return out;
}

Eigen::ArrayXd tukey_window(int length, double r) {
    if (length < 1) throw std::invalid_argument("tukey_window: length must be positive");
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("tukey_window: r outside [0, 1]");
    Eigen::ArrayXd w(length);
    for (int n = 0; n < length; ++n) {
        const double x = (n + 0.5) / length;
        double v = 1.0;
        if (r > 0.0 && x < r / 2.0) {
            v = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi / r * (x - r / 2.0)));
        } else if (r > 0.0 && x > 1.0 - r / 2.0) {
            v = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi / r * (x - 1.0 + r / 2.0)));
        }
        w(n) = v;
    }
    return w;
}

Image recombine_tukey(const std::vector<Image>& patches, const std::vector<Placement>& placements, int rows,
                      int cols, double tukey_r) {
    if (patches.size() != placements.size()) {
        throw std::invalid_argument("recombine_tukey: one placement per patch required");
    }
    int canvas_r = rows;
    int canvas_c = cols;
    for (const auto& p : placements) {
        if (p.row < 0 || p.col < 0) throw std::invalid_argument("recombine_tukey: negative placement");
        canvas_r = std::max(canvas_r, p.row + p.side);
        canvas_c = std::max(canvas_c, p.col + p.side);
    }
    Image acc = Image::Zero(canvas_r, canvas_c);
    Image wsum = Image::Zero(canvas_r, canvas_c);
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Placement& p = placements[i];
        if (patches[i].rows() != p.side || patches[i].cols() != p.side) {
            throw std::invalid_argument("recombine_tukey: patch does not match its placement");
        }
        const Eigen::ArrayXd w1 = tukey_window(p.side, tukey_r);
        const Image w = (w1.matrix() * w1.matrix().transpose()).array();
        acc.block(p.row, p.col, p.side, p.side) += w * patches[i];
        wsum.block(p.row, p.col, p.side, p.side) += w;
    }
    constexpr double kFloor = 1e-12;
    if ((wsum.topLeftCorner(rows, cols) <= kFloor).any()) {
        throw std::runtime_error("recombine_tukey: placements leave pixels without weight");
    }
    return (acc.topLeftCorner(rows, cols) / wsum.topLeftCorner(rows, cols).max(kFloor)).eval();
}

// ---------------------------------------------------------------------------
// Reconstruction

EmitterMap reconstruct_sparcom(const FrameStack& stack, const Psf& psf, const SparcomOptions& options) {
    options.plan.validate();
    options.solver.validate();
    if (stack.size() < 2) throw std::invalid_argument("reconstruct_sparcom: need at least 2 frames");
    stack.validate();
    const int p = options.factor;
    const auto rows = static_cast<int>(stack.rows());
    const auto cols = static_cast<int>(stack.cols());
    if (!has_positive_sample(stack)) return EmitterMap(Image::Zero(rows * p, cols * p));

    const FrameStack pre = preprocess(stack);
    const auto placements = plan_placements(rows, cols, options.plan.patch_low, options.plan.overlap_low);
    const auto patches = extract_patches(pre, placements);
    const GridSpec grid(options.plan.patch_low, p, stack.grid.low_pitch);
    const bool cov = options.solver.formulation == Formulation::cov;
    const MeasurementOperator op = cov ? MeasurementOperator::explicit_matrix(psf, grid, false)
                                       : MeasurementOperator::convolutional(psf, grid, true);
    const GramOperator gram = gram_operator(op, options.solver.formulation);
    const LipschitzEstimate lip = lipschitz_constant(gram);
    const int n = grid.high_side();

    std::vector<Image> out(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        if (lip.zero_operator) {
            out[i] = Image::Zero(n, n);
            continue;
        }
        SparseProblem problem = cov ? make_cov_problem(op, empirical_covariance(patches[i]))
                                    : make_var_problem(op, temporal_variance(patches[i]).values);
        SolverConfig cfg = options.solver;
        if (options.relative_lambda) cfg.lambda *= std::max(problem.v.maxCoeff(), 0.0);
        out[i] = solve(problem, lip.value, cfg).final_x.values;
    }
    return EmitterMap(recombine_tukey(out, scaled(placements, p), rows * p, cols * p, options.plan.tukey_r).max(0.0));
}

EmitterMap reconstruct_lsparcom_from_variance(const Image& g_low, const LsparcomWeights& weights,
                                              const LsparcomOptions& options) {
    options.plan.validate();
    const int p = options.factor;
    if (p < 1) throw std::invalid_argument("reconstruct_lsparcom: factor must be positive");
    const auto rows = static_cast<int>(g_low.rows()) * p;
    const auto cols = static_cast<int>(g_low.cols()) * p;
    const Image g = resize_to_high_res(g_low, p);
    const int side = options.plan.patch_low * p;
    const auto placements = plan_placements(rows, cols, side, options.plan.overlap_low * p);
    const auto patches = extract_patches(g, placements);
    const LsparcomNetwork net(weights, side, side);
    std::vector<Image> out(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) out[i] = net.run(patches[i]).output;
    return EmitterMap(recombine_tukey(out, placements, rows, cols, options.plan.tukey_r));
}

EmitterMap reconstruct_lsparcom(const FrameStack& stack, const LsparcomWeights& weights,
                                const LsparcomOptions& options) {
    if (stack.size() < 2) throw std::invalid_argument("reconstruct_lsparcom: need at least 2 frames");
    stack.validate();
    weights.validate();
    const int p = options.factor;
    if (!has_positive_sample(stack)) {
        return EmitterMap(Image::Zero(stack.rows() * p, stack.cols() * p));
    }
    return reconstruct_lsparcom_from_variance(temporal_variance(preprocess(stack)).values, weights, options);
}

}  // namespace lsparcom
