#pragma once

#include <string>
#include <vector>

#include "lsparcom/image.hpp"
#include "lsparcom/io.hpp"
#include "lsparcom/model.hpp"
#include "lsparcom/simulate.hpp"

namespace lsparcom {

/// Pixels >= every 8-neighbor, strictly above earlier raster-order neighbors
/// (one detection per plateau) and >= rel_threshold * max(image) > 0.
std::vector<EmitterPoint> detect_local_maxima(const Image& image, double rel_threshold = 0.1);

struct LocalizationReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_error = 0.0;  ///< mean distance of matched pairs (NaN if none)
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;

    std::string to_string() const;
};

/// Greedy nearest matching: pairs with distance <= tol, shortest first.
LocalizationReport match_points(const std::vector<EmitterPoint>& detections,
                                const std::vector<EmitterPoint>& truth, double tol);

LocalizationReport evaluate_localization(const EmitterMap& pred, const Scene& gt, double tol = 1.0,
                                         double rel_threshold = 0.1);

/// Red = prediction, green = ground truth, each max-normalized and binarized
/// at `threshold`; overlap shows yellow.
RgbImage emit_overlay(const Image& pred, const Image& gt, double threshold = 0.1);

struct Line {
    double r0 = 0.0, c0 = 0.0, r1 = 0.0, c1 = 0.0;
};

/// Samples the nearest pixel centers at unit spacing along `line` in every
/// image, normalizes each curve to max 1, and returns a tab-delimited table
/// with a header `index row col <names...>`.
std::string emit_cross_section(const std::vector<Image>& images, const std::vector<std::string>& names,
                               const Line& line);

}  // namespace lsparcom
