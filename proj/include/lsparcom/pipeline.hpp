#pragma once

#include <optional>
#include <vector>

#include "lsparcom/image.hpp"
#include "lsparcom/model.hpp"
#include "lsparcom/solver.hpp"
#include "lsparcom/stats.hpp"
#include "lsparcom/unfolded.hpp"

namespace lsparcom {

struct PatchPlan {
    int patch_low = 16;   ///< patch side on the low-res grid
    int overlap_low = 8;  ///< overlap between neighbors, low-res pixels
    double tukey_r = 0.5; ///< taper fraction

    void validate() const;
    int stride_low() const { return patch_low - overlap_low; }
};

/// Top-left corner and side of one patch on the canvas being tiled.
struct Placement {
    int row = 0;
    int col = 0;
    int side = 0;
};

/// Origins at multiples of `stride`, plus a final origin aligned to the border.
std::vector<int> patch_origins(int length, int patch, int stride);

/// Placements covering a rows x cols canvas (sides smaller than `patch` are
/// zero-padded up to `patch`; see `padded_extent`).
std::vector<Placement> plan_placements(int rows, int cols, int patch, int overlap);
int padded_extent(int length, int patch);

/// Square crops of `image` at `placements` (zero outside the image).
std::vector<Image> extract_patches(const Image& image, const std::vector<Placement>& placements);
std::vector<FrameStack> extract_patches(const FrameStack& stack, const std::vector<Placement>& placements);

/// Tapered cosine sampled at pixel midpoints (n + 0.5) / L, so never zero.
Eigen::ArrayXd tukey_window(int length, double r);

/// Sum of w * patch over sum of w per pixel, with w the separable Tukey window.
/// The result is cropped to rows x cols. Throws if an in-canvas pixel has zero
/// total weight.
Image recombine_tukey(const std::vector<Image>& patches, const std::vector<Placement>& placements,
                      int rows, int cols, double tukey_r);

struct SparcomOptions {
    SolverConfig solver;   ///< lambda, iterations, formulation, FISTA flag
    PatchPlan plan;
    int factor = 4;        ///< P
    /// When set, lambda is multiplied by max(v) of each patch.
    bool relative_lambda = false;
};

/// preprocess, then per patch v, M, L_f and ISTA / FISTA, then Tukey blending.
/// `Psf::delta()` gives the PSF-agnostic variant. An all-zero movie maps to zeros.
EmitterMap reconstruct_sparcom(const FrameStack& stack, const Psf& psf, const SparcomOptions& options);

struct LsparcomOptions {
    PatchPlan plan;
    int factor = 4;
};

/// preprocess, temporal variance, x P resize of the full variance image, then
/// the network on overlapping high-res patches and Tukey blending.
EmitterMap reconstruct_lsparcom(const FrameStack& stack, const LsparcomWeights& weights,
                                const LsparcomOptions& options = {});

/// Same, starting from a low-res variance image.
EmitterMap reconstruct_lsparcom_from_variance(const Image& g_low, const LsparcomWeights& weights,
                                              const LsparcomOptions& options = {});

}  // namespace lsparcom
