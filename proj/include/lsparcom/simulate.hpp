#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lsparcom/model.hpp"
#include "lsparcom/stats.hpp"

namespace lsparcom {

using Rng = std::mt19937_64;

/// A fluorophore snapped to a high-res pixel center.
struct Emitter {
    int row = 0;
    int col = 0;
    double mean_brightness = 1.0;  ///< photons per frame while on
    double on_probability = 0.5;   ///< in (0, 1)
};

struct Scene {
    std::vector<Emitter> emitters;
    GridSpec grid;

    void validate() const;
    /// High-res image with each emitter's on-state variance b^2 p (1 - p).
    Image variance_map() const;
    /// High-res image with 1 at every emitter position.
    Image support() const;
};

struct NoiseModel {
    double background = 0.0;     ///< photons per pixel per frame
    double readout_sigma = 0.0;  ///< counts
    bool shot_noise = false;     ///< Poisson

    void validate() const;
};

struct SceneOptions {
    double brightness_min = 500.0;
    double brightness_max = 1500.0;
    double on_probability_min = 0.1;
    double on_probability_max = 0.3;

    void validate() const;
};

/// Emitters spread along random Catmull-Rom curves. Emitters landing on an
/// already occupied pixel are dropped.
Scene generate_filament_scene(Rng& rng, const GridSpec& grid, int n_filaments, int emitters_per_filament,
                              const SceneOptions& options = {});

/// Uniformly placed emitters with pairwise distance >= min_separation (high-res
/// pixels), by rejection. Throws if the count cannot be placed.
Scene generate_point_scene(Rng& rng, const GridSpec& grid, int n_emitters, double min_separation,
                           const SceneOptions& options = {});

/// traces(e, t) = brightness_e * on_e(t), on_e(t) ~ Bernoulli(p_e) independently.
Eigen::MatrixXd simulate_blinking(const Scene& scene, int frames, Rng& rng);

struct RenderedMovie {
    FrameStack movie;     ///< camera frames, low-res grid
    FrameStack gt_movie;  ///< noiseless emitter intensities, high-res grid
};

/// Each frame is A s(t) + background, then Poisson and readout noise. Frame t
/// draws from its own generator seeded from (one draw of `rng`, t).
RenderedMovie render_movie(const Scene& scene, const Eigen::MatrixXd& traces, const Psf& psf,
                           const NoiseModel& noise, Rng& rng);

}  // namespace lsparcom
