#include "lsparcom/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace lsparcom {

std::vector<EmitterPoint> detect_local_maxima(const Image& image, double rel_threshold) {
    std::vector<EmitterPoint> out;
    if (image.size() == 0) return out;
    const double peak = image.maxCoeff();
    if (!(peak > 0.0)) return out;
    const double floor = std::max(rel_threshold * peak, std::numeric_limits<double>::min());
    const auto rows = static_cast<int>(image.rows());
    const auto cols = static_cast<int>(image.cols());
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = image(r, c);
            if (v < floor) continue;
            bool is_max = true;
            for (int dr = -1; dr <= 1 && is_max; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const double u = image(rr, cc);
                    const bool earlier = dr < 0 || (dr == 0 && dc < 0);
                    if (u > v || (earlier && u == v)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) out.push_back({r, c, v});
        }
    }
    return out;
}

std::string LocalizationReport::to_string() const {
    std::ostringstream s;
    s << std::setprecision(6) << "precision " << precision << "\nrecall " << recall << "\nf1 " << f1
      << "\nmean_error " << mean_error << "\ntrue_positives " << true_positives << "\nfalse_positives "
      << false_positives << "\nfalse_negatives " << false_negatives << "\n";
    return s.str();
}

LocalizationReport match_points(const std::vector<EmitterPoint>& detections,
                                const std::vector<EmitterPoint>& truth, double tol) {
    if (!(tol >= 0.0)) throw std::invalid_argument("match_points: tol must be >= 0");
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        for (std::size_t g = 0; g < truth.size(); ++g) {
            const double dist = std::hypot(detections[d].row - truth[g].row, detections[d].col - truth[g].col);
            if (dist <= tol) pairs.emplace_back(dist, d, g);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used_d(detections.size(), false);
    std::vector<bool> used_g(truth.size(), false);
    LocalizationReport rep;
    double err = 0.0;
    for (const auto& [dist, d, g] : pairs) {
        if (used_d[d] || used_g[g]) continue;
        used_d[d] = used_g[g] = true;
        ++rep.true_positives;
        err += dist;
    }
    rep.false_positives = static_cast<int>(detections.size()) - rep.true_positives;
    rep.false_negatives = static_cast<int>(truth.size()) - rep.true_positives;
    if (truth.empty() && detections.empty()) {
        rep.precision = rep.recall = rep.f1 = 1.0;
    } else {
        rep.precision = detections.empty() ? 0.0 : static_cast<double>(rep.true_positives) / detections.size();
        rep.recall = truth.empty() ? 0.0 : static_cast<double>(rep.true_positives) / truth.size();
        const double s = rep.precision + rep.recall;
        rep.f1 = s > 0.0 ? 2.0 * rep.precision * rep.recall / s : 0.0;
    }
    rep.mean_error = rep.true_positives > 0 ? err / rep.true_positives : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

LocalizationReport evaluate_localization(const EmitterMap& pred, const Scene& gt, double tol, double rel_threshold) {
    const int n = gt.grid.high_side();
    if (pred.values.rows() != n || pred.values.cols() != n) {
        throw std::invalid_argument("evaluate_localization: prediction does not match the ground-truth grid");
    }
    std::vector<EmitterPoint> truth;
    truth.reserve(gt.emitters.size());
    for (const auto& e : gt.emitters) truth.push_back({e.row, e.col, e.mean_brightness});
    return match_points(detect_local_maxima(pred.values, rel_threshold), truth, tol);
}

RgbImage emit_overlay(const Image& pred, const Image& gt, double threshold) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
        throw std::invalid_argument("emit_overlay: shapes differ");
    }
    auto binarize = [threshold](const Image& img) {
        const double peak = img.size() ? img.maxCoeff() : 0.0;
        if (!(peak > 0.0)) return Image(Image::Zero(img.rows(), img.cols()));
        return Image(((img / peak) >= threshold).cast<double>());
    };
    const Image r = binarize(pred);
    const Image g = binarize(gt);
    RgbImage out;
    out.rows = static_cast<int>(pred.rows());
    out.cols = static_cast<int>(pred.cols());
    out.data.assign(static_cast<std::size_t>(out.rows) * out.cols * 3, 0);
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) {
            out.at(i, j, 0) = r(i, j) > 0.0 ? 255 : 0;
            out.at(i, j, 1) = g(i, j) > 0.0 ? 255 : 0;
        }
    }
    return out;
}

std::string emit_cross_section(const std::vector<Image>& images, const std::vector<std::string>& names,
                               const Line& line) {
    if (images.empty() || images.size() != names.size()) {
        throw std::invalid_argument("emit_cross_section: one name per image required");
    }
    const Eigen::Index rows = images.front().rows();
    const Eigen::Index cols = images.front().cols();
    for (const auto& img : images) {
        if (img.rows() != rows || img.cols() != cols) throw std::invalid_argument("emit_cross_section: shapes differ");
    }
    auto inside = [&](double r, double c) { return r >= 0.0 && c >= 0.0 && r <= rows - 1.0 && c <= cols - 1.0; };
    if (!inside(line.r0, line.c0) || !inside(line.r1, line.c1)) {
        throw std::out_of_range("emit_cross_section: line leaves the image");
    }
    const double len = std::hypot(line.r1 - line.r0, line.c1 - line.c0);
    const int samples = static_cast<int>(std::floor(len)) + 1;
    std::vector<std::pair<int, int>> px;
    for (int k = 0; k < samples; ++k) {
        const double t = samples > 1 ? static_cast<double>(k) / len : 0.0;
        px.emplace_back(static_cast<int>(std::lround(line.r0 + t * (line.r1 - line.r0))),
                        static_cast<int>(std::lround(line.c0 + t * (line.c1 - line.c0))));
    }
    std::vector<std::vector<double>> curves;
    for (const auto& img : images) {
        std::vector<double> c;
        for (const auto& [r, cc] : px) c.push_back(img(r, cc));
        const double peak = *std::max_element(c.begin(), c.end());
        if (peak > 0.0) {
            for (auto& v : c) v /= peak;
        }
        curves.push_back(std::move(c));
    }
    std::ostringstream s;
    s << "index\trow\tcol";
    for (const auto& n : names) s << "\t" << n;
    s << "\n" << std::setprecision(10);
    for (std::size_t k = 0; k < px.size(); ++k) {
        s << k << "\t" << px[k].first << "\t" << px[k].second;
        for (const auto& c : curves) s << "\t" << c[k];
        s << "\n";
    }
    return s.str();
}

}  // namespace lsparcom
