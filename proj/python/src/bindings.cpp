#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "lsparcom/lsparcom.hpp"

namespace py = pybind11;
using namespace lsparcom;

namespace {

using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (T, H, W) array -> frame stack.
FrameStack to_stack(const Array3& movie, const GridSpec& grid) {
    if (movie.ndim() != 3) throw std::invalid_argument("movie must have shape (T, H, W)");
    FrameStack s;
    s.grid = grid;
    const auto r = movie.unchecked<3>();
    for (py::ssize_t t = 0; t < r.shape(0); ++t) {
        Image f(r.shape(1), r.shape(2));
        for (py::ssize_t i = 0; i < r.shape(1); ++i) {
            for (py::ssize_t j = 0; j < r.shape(2); ++j) f(i, j) = r(t, i, j);
        }
        s.frames.push_back(std::move(f));
    }
    return s;
}

Array3 from_stack(const FrameStack& s) {
    Array3 out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.rows()),
                static_cast<py::ssize_t>(s.cols())});
    auto w = out.mutable_unchecked<3>();
    for (std::size_t t = 0; t < s.size(); ++t) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.cols(); ++j) w(t, i, j) = s.frames[t](i, j);
        }
    }
    return out;
}

GridSpec grid_for(const Array3& movie, int factor) {
    if (movie.ndim() != 3 || movie.shape(1) != movie.shape(2)) {
        throw std::invalid_argument("movie must have shape (T, M, M)");
    }
    return GridSpec(static_cast<int>(movie.shape(1)), factor);
}

Psf psf_from(const std::optional<double>& sigma) {
    return sigma ? Psf::gaussian(*sigma) : Psf::delta();
}

py::dict report_dict(const LocalizationReport& r) {
    py::dict d;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f1"] = r.f1;
    d["mean_error"] = r.mean_error;
    d["true_positives"] = r.true_positives;
    d["false_positives"] = r.false_positives;
    d["false_negatives"] = r.false_negatives;
    return d;
}

Scene scene_from_points(const Eigen::MatrixXd& pts, const GridSpec& grid) {
    if (pts.size() > 0 && pts.cols() < 2) throw std::invalid_argument("points must have shape (n, 2+)");
    Scene s;
    s.grid = grid;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        Emitter e;
        e.row = static_cast<int>(std::lround(pts(i, 0)));
        e.col = static_cast<int>(std::lround(pts(i, 1)));
        s.emitters.push_back(e);
    }
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse-recovery and learned super-resolution for blinking-emitter movies";

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<int, int, double>(), py::arg("low_side"), py::arg("factor"), py::arg("pitch") = 1.0)
        .def_readonly("low_side", &GridSpec::low_side)
        .def_readonly("factor", &GridSpec::factor)
        .def("high_side", &GridSpec::high_side);

    py::class_<Psf>(m, "Psf")
        .def_static("gaussian", &Psf::gaussian, py::arg("sigma"), py::arg("support_radius") = 0)
        .def_static("delta", &Psf::delta)
        .def_property_readonly("sigma", &Psf::sigma);

    py::class_<MeasurementOperator>(m, "MeasurementOperator")
        .def_static("convolutional", &MeasurementOperator::convolutional, py::arg("psf"), py::arg("grid"),
                    py::arg("squared") = false)
        .def_static("explicit_matrix", &MeasurementOperator::explicit_matrix, py::arg("psf"), py::arg("grid"),
                    py::arg("squared") = false, py::arg("size_cap") = MeasurementOperator::kDefaultExplicitCap)
        .def("forward", py::overload_cast<const Image&>(&MeasurementOperator::forward, py::const_), py::arg("x"))
        .def("adjoint", py::overload_cast<const Image&>(&MeasurementOperator::adjoint, py::const_), py::arg("y"))
        .def("matrix", &MeasurementOperator::matrix);

    m.def("positive_soft_threshold", [](const Eigen::ArrayXd& x, double a) { return positive_soft_threshold(x, a); },
          py::arg("x"), py::arg("alpha"));
    m.def("smooth_activation", py::overload_cast<const Image&, double, double>(&smooth_activation), py::arg("x"),
          py::arg("alpha"), py::arg("beta"));

    m.def(
        "preprocess", [](const Array3& movie) { return from_stack(preprocess(to_stack(movie, grid_for(movie, 1)))); },
        py::arg("movie"), "Normalize to unit max, then subtract the per-pixel temporal median.");
    m.def(
        "temporal_variance", [](const Array3& movie) { return temporal_variance(to_stack(movie, grid_for(movie, 1))).values; },
        py::arg("movie"));
    m.def("resize_to_high_res", &resize_to_high_res, py::arg("image"), py::arg("factor"));

    py::class_<LsparcomWeights>(m, "LsparcomWeights")
        .def_readwrite("w_i", &LsparcomWeights::w_i)
        .def_readwrite("w_p", &LsparcomWeights::w_p)
        .def_readwrite("alpha0", &LsparcomWeights::alpha0)
        .def_readwrite("beta0", &LsparcomWeights::beta0)
        .def_readwrite("s", &LsparcomWeights::s)
        .def_readwrite("radial_constrained", &LsparcomWeights::radial_constrained)
        .def("parameter_count", &LsparcomWeights::parameter_count)
        .def("radial_parameter_count", &LsparcomWeights::radial_parameter_count);
    m.def("init_weights", &init_weights, py::arg("wi_side") = kInputKernelSide, py::arg("wp_side") = kFoldKernelSide);
    m.def("read_weights", &read_weights, py::arg("path"));
    m.def("write_weights", &write_weights, py::arg("path"), py::arg("weights"));
    m.def(
        "network_forward", [](const Image& g, const LsparcomWeights& w) { return forward(g, w).values; },
        py::arg("g"), py::arg("weights"), "Unfolded network on one high-resolution variance image.");

    m.def(
        "reconstruct_sparcom",
        [](const Array3& movie, double lam, std::optional<double> psf_sigma, int factor, int iters, bool fista,
           bool relative_lambda, const std::string& formulation) {
            SparcomOptions opt;
            opt.solver.lambda = lam;
            opt.solver.max_iters = iters;
            opt.solver.accelerated = fista;
            opt.solver.formulation = formulation == "cov" ? Formulation::cov : Formulation::var;
            opt.relative_lambda = relative_lambda;
            opt.factor = factor;
            py::gil_scoped_release release;
            return reconstruct_sparcom(to_stack(movie, grid_for(movie, factor)), psf_from(psf_sigma), opt).values;
        },
        py::arg("movie"), py::arg("lam"), py::arg("psf_sigma") = py::none(), py::arg("factor") = 4,
        py::arg("iters") = 100, py::arg("fista") = false, py::arg("relative_lambda") = false,
        py::arg("formulation") = "var", "psf_sigma=None selects the delta PSF.");

    m.def(
        "reconstruct_lsparcom",
        [](const Array3& movie, const LsparcomWeights& w, int factor) {
            LsparcomOptions opt;
            opt.factor = factor;
            py::gil_scoped_release release;
            return reconstruct_lsparcom(to_stack(movie, grid_for(movie, factor)), w, opt).values;
        },
        py::arg("movie"), py::arg("weights"), py::arg("factor") = 4);

    m.def(
        "simulate_points",
        [](int low_side, int factor, int n_emitters, int frames, std::uint64_t seed, double psf_sigma,
           double min_separation, double background, double readout_sigma, bool shot_noise) {
            Rng rng(seed);
            const GridSpec grid(low_side, factor);
            const Scene scene = generate_point_scene(rng, grid, n_emitters, min_separation);
            const Eigen::MatrixXd traces = simulate_blinking(scene, frames, rng);
            const RenderedMovie mv =
                render_movie(scene, traces, Psf::gaussian(psf_sigma), NoiseModel{background, readout_sigma, shot_noise}, rng);
            Eigen::MatrixXd pts(static_cast<Eigen::Index>(scene.emitters.size()), 4);
            for (std::size_t i = 0; i < scene.emitters.size(); ++i) {
                const Emitter& e = scene.emitters[i];
                pts.row(static_cast<Eigen::Index>(i)) << e.row, e.col, e.mean_brightness, e.on_probability;
            }
            return py::make_tuple(from_stack(mv.movie), from_stack(mv.gt_movie), pts);
        },
        py::arg("low_side") = 16, py::arg("factor") = 4, py::arg("n_emitters") = 20, py::arg("frames") = 361,
        py::arg("seed") = 0, py::arg("psf_sigma") = 1.0, py::arg("min_separation") = 6.0, py::arg("background") = 20.0,
        py::arg("readout_sigma") = 2.0, py::arg("shot_noise") = true,
        "Returns (movie, gt_movie, points) with points rows (row, col, brightness, on_probability).");

    m.def(
        "evaluate_localization",
        [](const Image& pred, const Eigen::MatrixXd& points, int factor, double tol, double rel_threshold) {
            if (pred.rows() != pred.cols() || pred.rows() % factor != 0) {
                throw std::invalid_argument("pred must be square with side divisible by factor");
            }
            const GridSpec grid(static_cast<int>(pred.rows()) / factor, factor);
            return report_dict(evaluate_localization(EmitterMap(pred), scene_from_points(points, grid), tol, rel_threshold));
        },
        py::arg("pred"), py::arg("points"), py::arg("factor") = 4, py::arg("tol") = 1.0, py::arg("rel_threshold") = 0.1);

    m.def(
        "train",
        [](const std::vector<Array3>& movies, const std::vector<Array3>& gt_movies, int examples, int epochs,
           double lam, double learning_rate, int batch_size, std::uint64_t seed, int factor,
           std::optional<LsparcomWeights> initial) {
            if (movies.empty() || movies.size() != gt_movies.size()) {
                throw std::invalid_argument("movies and gt_movies must be non-empty and aligned");
            }
            std::vector<FrameStack> mv, gt;
            for (std::size_t i = 0; i < movies.size(); ++i) {
                mv.push_back(to_stack(movies[i], grid_for(movies[i], factor)));
                gt.push_back(to_stack(gt_movies[i], GridSpec(static_cast<int>(movies[i].shape(1)), factor)));
            }
            py::gil_scoped_release release;
            Rng rng(seed);
            ExampleOptions eo;
            eo.factor = factor;
            eo.window_low = static_cast<int>(std::min<Eigen::Index>(16, mv.front().rows()));
            std::vector<TrainingExample> data;
            for (int k = 0; k < examples; ++k) {
                const std::size_t i = static_cast<std::size_t>(k) % mv.size();
                data.push_back(make_training_example(mv[i], gt[i], rng, eo));
            }
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.lambda = lam;
            cfg.learning_rate = learning_rate;
            cfg.batch_size = batch_size;
            cfg.rng_seed = seed;
            const TrainResult r = lsparcom::train(data, cfg, initial ? *initial : init_weights());
            return std::make_pair(r.weights, r.loss_curve);
        },
        py::arg("movies"), py::arg("gt_movies"), py::arg("examples") = 64, py::arg("epochs") = 10,
        py::arg("lam") = 0.7, py::arg("learning_rate") = 1e-4, py::arg("batch_size") = 16, py::arg("seed") = 0,
        py::arg("factor") = 4, py::arg("initial") = py::none(), "Returns (weights, per-epoch mean loss).");
}
