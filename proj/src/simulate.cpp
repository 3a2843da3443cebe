#include "lsparcom/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace lsparcom {

void Scene::validate() const {
    grid.validate();
    const int n = grid.high_side();
    for (const auto& e : emitters) {
        if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n) {
            throw std::out_of_range("Scene: emitter outside the high-res grid");
        }
        if (!(e.on_probability > 0.0 && e.on_probability < 1.0)) {
            throw std::invalid_argument("Scene: on_probability must lie in (0, 1)");
        }
        if (!(e.mean_brightness >= 0.0) || !std::isfinite(e.mean_brightness)) {
            throw std::invalid_argument("Scene: brightness must be finite and >= 0");
        }
    }
}

Image Scene::variance_map() const {
    Image out = Image::Zero(grid.high_side(), grid.high_side());
    for (const auto& e : emitters) {
        out(e.row, e.col) += e.mean_brightness * e.mean_brightness * e.on_probability * (1.0 - e.on_probability);
    }
    return out;
}

Image Scene::support() const {
    Image out = Image::Zero(grid.high_side(), grid.high_side());
    for (const auto& e : emitters) out(e.row, e.col) = 1.0;
    return out;
}

void NoiseModel::validate() const {
    if (!(background >= 0.0) || !(readout_sigma >= 0.0)) {
        throw std::invalid_argument("NoiseModel: parameters must be nonnegative");
    }
}

void SceneOptions::validate() const {
    if (!(brightness_min >= 0.0 && brightness_max >= brightness_min)) {
        throw std::invalid_argument("SceneOptions: bad brightness range");
    }
    if (!(on_probability_min > 0.0 && on_probability_max < 1.0 && on_probability_max >= on_probability_min)) {
        throw std::invalid_argument("SceneOptions: on-probability range must lie in (0, 1)");
    }
}

namespace {

Emitter draw_emitter(Rng& rng, int row, int col, const SceneOptions& o) {
    std::uniform_real_distribution<double> bright(o.brightness_min, o.brightness_max);
    std::uniform_real_distribution<double> prob(o.on_probability_min, o.on_probability_max);
    Emitter e;
    e.row = row;
    e.col = col;
    e.mean_brightness = bright(rng);
    e.on_probability = prob(rng);
    return e;
}

struct Point {
    double y = 0.0;
    double x = 0.0;
};

Point catmull_rom(const Point& p0, const Point& p1, const Point& p2, const Point& p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    auto f = [&](double a, double b, double c, double d) {
        return 0.5 * (2.0 * b + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                      (-a + 3.0 * b - 3.0 * c + d) * t3);
    };
    return {f(p0.y, p1.y, p2.y, p3.y), f(p0.x, p1.x, p2.x, p3.x)};
}

void check_grid(const GridSpec& grid) {
    grid.validate();
    if (grid.high_side() < 1) throw std::invalid_argument("scene: degenerate grid");
}

}  // namespace

Scene generate_filament_scene(Rng& rng, const GridSpec& grid, int n_filaments, int emitters_per_filament,
                              const SceneOptions& options) {
    check_grid(grid);
    options.validate();
    if (n_filaments < 0 || emitters_per_filament < 0) {
        throw std::invalid_argument("generate_filament_scene: counts must be >= 0");
    }
    Scene scene;
    scene.grid = grid;
    const double n = grid.high_side();
    constexpr int kControl = 5;
    constexpr int kSamplesPerSegment = 64;
    std::uniform_real_distribution<double> coord(0.0, n);
    std::set<std::pair<int, int>> occupied;
    for (int f = 0; f < n_filaments; ++f) {
        std::vector<Point> ctrl(kControl);
        for (auto& p : ctrl) p = {coord(rng), coord(rng)};
        // Dense polyline through the interior control points, with arc length.
        std::vector<Point> poly;
        for (int s = 1; s + 2 < kControl; ++s) {
            for (int k = 0; k < kSamplesPerSegment; ++k) {
                poly.push_back(catmull_rom(ctrl[s - 1], ctrl[s], ctrl[s + 1], ctrl[s + 2],
                                           static_cast<double>(k) / kSamplesPerSegment));
            }
        }
        poly.push_back(ctrl[kControl - 2]);
        std::vector<double> arc(poly.size(), 0.0);
        for (std::size_t i = 1; i < poly.size(); ++i) {
            arc[i] = arc[i - 1] + std::hypot(poly[i].y - poly[i - 1].y, poly[i].x - poly[i - 1].x);
        }
        std::uniform_real_distribution<double> along(0.0, arc.back());
        for (int e = 0; e < emitters_per_filament; ++e) {
            const double a = along(rng);
            const auto it = std::upper_bound(arc.begin(), arc.end(), a);
            const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - arc.begin()), 1, poly.size() - 1);
            const double seg = arc[i] - arc[i - 1];
            const double w = seg > 0.0 ? (a - arc[i - 1]) / seg : 0.0;
            const double y = poly[i - 1].y + w * (poly[i].y - poly[i - 1].y);
            const double x = poly[i - 1].x + w * (poly[i].x - poly[i - 1].x);
            const int row = std::clamp(static_cast<int>(std::floor(y)), 0, grid.high_side() - 1);
            const int col = std::clamp(static_cast<int>(std::floor(x)), 0, grid.high_side() - 1);
            Emitter em = draw_emitter(rng, row, col, options);
            if (occupied.emplace(row, col).second) scene.emitters.push_back(em);
        }
    }
    return scene;
}

Scene generate_point_scene(Rng& rng, const GridSpec& grid, int n_emitters, double min_separation,
                           const SceneOptions& options) {
    check_grid(grid);
    options.validate();
    if (n_emitters < 0) throw std::invalid_argument("generate_point_scene: count must be >= 0");
    Scene scene;
    scene.grid = grid;
    std::uniform_int_distribution<int> pos(0, grid.high_side() - 1);
    const long max_attempts = 10000L * (n_emitters + 1);
    long attempts = 0;
    while (static_cast<int>(scene.emitters.size()) < n_emitters) {
        if (++attempts > max_attempts) {
            throw std::runtime_error("generate_point_scene: cannot place emitters at the requested separation");
        }
        const int row = pos(rng);
        const int col = pos(rng);
        bool ok = true;
        for (const auto& e : scene.emitters) {
            if (std::hypot(e.row - row, e.col - col) < min_separation || (e.row == row && e.col == col)) {
                ok = false;
                break;
            }
        }
        if (ok) scene.emitters.push_back(draw_emitter(rng, row, col, options));
    }
    return scene;
}

Eigen::MatrixXd simulate_blinking(const Scene& scene, int frames, Rng& rng) {
    if (frames < 2) throw std::invalid_argument("simulate_blinking: need at least 2 frames");
    scene.validate();
    const auto n = static_cast<Eigen::Index>(scene.emitters.size());
    Eigen::MatrixXd traces(n, frames);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index e = 0; e < n; ++e) {
        const Emitter& em = scene.emitters[static_cast<std::size_t>(e)];
        for (int t = 0; t < frames; ++t) {
            traces(e, t) = unit(rng) < em.on_probability ? em.mean_brightness : 0.0;
        }
    }
    return traces;
}

RenderedMovie render_movie(const Scene& scene, const Eigen::MatrixXd& traces, const Psf& psf,
                           const NoiseModel& noise, Rng& rng) {
    scene.validate();
    noise.validate();
    if (traces.rows() != static_cast<Eigen::Index>(scene.emitters.size())) {
        throw std::invalid_argument("render_movie: one trace row per emitter required");
    }
    const GridSpec& grid = scene.grid;
    const auto op = MeasurementOperator::convolutional(psf, grid, false);
    const int n_high = grid.high_side();
    std::vector<Image> footprint;
    footprint.reserve(scene.emitters.size());
    for (const auto& e : scene.emitters) {
        footprint.push_back(op.column(Eigen::Index{e.row} * n_high + e.col));
    }

    const auto frames = static_cast<int>(traces.cols());
    const std::uint64_t base_seed = rng();
    RenderedMovie out;
    out.movie.grid = GridSpec(grid.low_side, 1, grid.low_pitch);
    out.gt_movie.grid = grid;
    out.movie.frames.resize(static_cast<std::size_t>(frames));
    out.gt_movie.frames.resize(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        Image frame = Image::Constant(grid.low_side, grid.low_side, noise.background);
        Image gt = Image::Zero(n_high, n_high);
        for (std::size_t e = 0; e < scene.emitters.size(); ++e) {
            const double s = traces(static_cast<Eigen::Index>(e), t);
            if (s == 0.0) continue;
            frame += s * footprint[e];
            gt(scene.emitters[e].row, scene.emitters[e].col) += s;
        }
        if (noise.shot_noise || noise.readout_sigma > 0.0) {
            std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                              static_cast<std::uint32_t>(t)};
            Rng frame_rng(seq);
            std::normal_distribution<double> readout(0.0, noise.readout_sigma);
            for (Eigen::Index i = 0; i < frame.size(); ++i) {
                double v = frame.data()[i];
                if (noise.shot_noise) {
                    v = v > 0.0 ? static_cast<double>(std::poisson_distribution<long>(v)(frame_rng)) : 0.0;
                }
                if (noise.readout_sigma > 0.0) v += readout(frame_rng);
                frame.data()[i] = v;
            }
        }
        out.movie.frames[static_cast<std::size_t>(t)] = std::move(frame);
        out.gt_movie.frames[static_cast<std::size_t>(t)] = std::move(gt);
    }
    return out;
}

}  // namespace lsparcom
