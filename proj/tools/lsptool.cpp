// Command line front end: simulate, sparcom, lsparcom {infer,train}, eval, viz.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsparcom/lsparcom.hpp"

namespace fs = std::filesystem;
using namespace lsparcom;

namespace {

struct SimulateArgs {
    std::string scene = "points";
    int low_side = 16;
    int factor = 4;
    int frames = 361;
    std::uint64_t seed = 0;
    int emitters = 20;
    double min_separation = 6.0;
    int filaments = 3;
    int per_filament = 10;
    double psf_sigma = 1.0;
    double background = 20.0;
    double readout = 2.0;
    bool shot_noise = true;
    double brightness_min = 500.0;
    double brightness_max = 1500.0;
    double p_min = 0.1;
    double p_max = 0.3;
    std::string out;
    std::string gt;
    std::string gt_movie;
};

struct PlanArgs {
    int factor = 4;
    int patch = 16;
    int overlap = 8;
    double tukey = 0.5;

    PatchPlan plan() const { return PatchPlan{patch, overlap, tukey}; }
};

void add_plan_options(CLI::App* cmd, PlanArgs& a) {
    cmd->add_option("--factor", a.factor, "upsampling factor P")->check(CLI::PositiveNumber);
    cmd->add_option("--patch", a.patch, "patch side, low-res pixels")->check(CLI::PositiveNumber);
    cmd->add_option("--overlap", a.overlap, "patch overlap, low-res pixels")->check(CLI::NonNegativeNumber);
    cmd->add_option("--tukey", a.tukey, "Tukey taper fraction")->check(CLI::Range(0.0, 1.0));
}

void write_map(const std::string& out, const std::string& pgm, const Image& map, const std::string& provenance) {
    write_image_stack(out, map, provenance);
    if (!pgm.empty()) write_pgm16(pgm, map);
}

void run_simulate(const SimulateArgs& a) {
    Rng rng(a.seed);
    const GridSpec grid(a.low_side, a.factor);
    SceneOptions so;
    so.brightness_min = a.brightness_min;
    so.brightness_max = a.brightness_max;
    so.on_probability_min = a.p_min;
    so.on_probability_max = a.p_max;
    Scene scene;
    if (a.scene == "points") {
        scene = generate_point_scene(rng, grid, a.emitters, a.min_separation, so);
    } else {
        scene = generate_filament_scene(rng, grid, a.filaments, a.per_filament, so);
    }
    const Eigen::MatrixXd traces = simulate_blinking(scene, a.frames, rng);
    NoiseModel noise{a.background, a.readout, a.shot_noise};
    RenderedMovie mv = render_movie(scene, traces, Psf::gaussian(a.psf_sigma), noise, rng);
    std::ostringstream prov;
    prov << "simulate scene=" << a.scene << " seed=" << a.seed << " frames=" << a.frames;
    mv.movie.metadata["provenance"] = prov.str();
    write_stack(a.out, mv.movie);
    if (!a.gt.empty()) write_ground_truth(a.gt, scene);
    if (!a.gt_movie.empty()) {
        mv.gt_movie.metadata["provenance"] = prov.str() + " ground-truth";
        write_stack(a.gt_movie, mv.gt_movie);
    }
    std::cout << "wrote " << a.out << " (" << scene.emitters.size() << " emitters, " << a.frames << " frames)\n";
}

struct TrainArgs {
    std::string data;
    double lambda = 0.7;
    int epochs = 100;
    std::uint64_t seed = 0;
    std::string out;
    int examples = 2000;
    int batch = 16;
    double lr = TrainConfig{}.learning_rate;
    int window = 16;
    int factor = 4;
    int group_size = 1;
    bool no_rotation = false;
    double target_gain = ExampleOptions{}.target_gain;
    double kernel_lr_scale = TrainConfig{}.kernel_lr_scale;
    double adam_eps = TrainConfig{}.adam_eps;
    std::string init;
    std::string log;
    bool quiet = false;
};

void run_train(const TrainArgs& a) {
    std::vector<std::pair<FrameStack, FrameStack>> movies;
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(a.data)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() == ".stk" && name.find(".gt.stk") == std::string::npos) {
            inputs.push_back(entry.path());
        }
    }
    std::sort(inputs.begin(), inputs.end());
    for (const auto& p : inputs) {
        fs::path gt = p;
        gt.replace_extension(".gt.stk");
        if (!fs::exists(gt)) throw std::runtime_error("missing ground-truth movie " + gt.string());
        movies.emplace_back(read_stack(p), read_stack(gt));
    }
    if (movies.empty()) throw std::runtime_error("no NAME.stk / NAME.gt.stk pairs in " + a.data);

    Rng rng(a.seed);
    ExampleOptions eo;
    eo.window_low = a.window;
    eo.factor = a.factor;
    eo.group_size = a.group_size;
    eo.random_rotation = !a.no_rotation;
    eo.target_gain = a.target_gain;
    std::vector<TrainingExample> dataset;
    dataset.reserve(static_cast<std::size_t>(a.examples));
    for (int i = 0; i < a.examples; ++i) {
        const auto& [mv, gt] = movies[static_cast<std::size_t>(i) % movies.size()];
        dataset.push_back(make_training_example(mv, gt, rng, eo));
    }
    TrainConfig cfg;
    cfg.lambda = a.lambda;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.rng_seed = a.seed;
    cfg.kernel_lr_scale = a.kernel_lr_scale;
    cfg.adam_eps = a.adam_eps;
    std::ofstream log;
    if (!a.log.empty()) {
        log.open(a.log);
        if (!log) throw std::runtime_error("cannot open log file " + a.log);
        log << "epoch\tmean_loss\tseconds\n";
    }
    const LsparcomWeights init = a.init.empty() ? init_weights() : read_weights(a.init);
    const bool quiet = a.quiet;
    TrainResult res = train(dataset, cfg, init, [quiet, &log](const EpochRecord& r) {
        if (!quiet) std::cout << "epoch " << r.epoch << " loss " << r.mean_loss << " (" << r.seconds << " s)" << std::endl;
        if (log.is_open()) log << r.epoch << '\t' << r.mean_loss << '\t' << r.seconds << std::endl;
    });
    write_weights(a.out, res.weights);
    std::cout << "wrote " << a.out << "\n";
}

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-based super-resolution for blinking-emitter movies"};
    app.set_config("--config", "", "declarative config file (TOML/INI, keys mirror flag names)");
    app.require_subcommand(1);

    // simulate
    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "synthesize a blinking-emitter movie");
    c_sim->add_option("--scene", sim.scene, "points | filaments")->check(CLI::IsMember({"points", "filaments"}));
    c_sim->add_option("--low-side", sim.low_side, "camera frame side")->check(CLI::PositiveNumber);
    c_sim->add_option("--factor", sim.factor, "upsampling factor P")->check(CLI::PositiveNumber);
    c_sim->add_option("--frames", sim.frames, "number of frames T")->check(CLI::Range(2, 1 << 20));
    c_sim->add_option("--seed", sim.seed, "random seed");
    c_sim->add_option("--emitters", sim.emitters, "point scene: emitter count");
    c_sim->add_option("--min-separation", sim.min_separation, "point scene: minimum distance, high-res px");
    c_sim->add_option("--filaments", sim.filaments, "filament scene: curve count");
    c_sim->add_option("--per-filament", sim.per_filament, "filament scene: emitters per curve");
    c_sim->add_option("--psf-sigma", sim.psf_sigma, "Gaussian PSF sigma, low-res px");
    c_sim->add_option("--background", sim.background, "photons / pixel / frame");
    c_sim->add_option("--readout", sim.readout, "readout noise sigma");
    c_sim->add_option("--shot-noise", sim.shot_noise, "Poisson noise on/off");
    c_sim->add_option("--brightness-min", sim.brightness_min);
    c_sim->add_option("--brightness-max", sim.brightness_max);
    c_sim->add_option("--p-min", sim.p_min, "minimum on-probability");
    c_sim->add_option("--p-max", sim.p_max, "maximum on-probability");
    c_sim->add_option("--out", sim.out, "movie stack")->required();
    c_sim->add_option("--gt", sim.gt, "ground-truth CSV");
    c_sim->add_option("--gt-movie", sim.gt_movie, "high-res ground-truth movie stack");
    c_sim->callback([&] { run_simulate(sim); });

    // sparcom
    std::string sp_in, sp_out, sp_pgm, sp_form = "var";
    double sp_lambda = 0.0, sp_sigma = 1.0;
    int sp_iters = 100;
    bool sp_delta = false, sp_fista = false, sp_relative = false;
    PlanArgs sp_plan;
    auto* c_sp = app.add_subcommand("sparcom", "sparse recovery on temporal statistics");
    c_sp->add_option("--in", sp_in, "movie stack")->required();
    c_sp->add_option("--lambda", sp_lambda, "L1 weight")->required();
    c_sp->add_option("--iters", sp_iters, "iterations")->check(CLI::PositiveNumber);
    auto* o_sigma = c_sp->add_option("--psf-sigma", sp_sigma, "Gaussian PSF sigma, low-res px");
    auto* o_delta = c_sp->add_flag("--psf-delta", sp_delta, "assume a delta PSF");
    o_sigma->excludes(o_delta);
    c_sp->add_flag("--fista", sp_fista, "accelerated iterations");
    c_sp->add_flag("--relative-lambda", sp_relative, "scale lambda by max(v) per patch");
    c_sp->add_option("--formulation", sp_form, "var | cov")->check(CLI::IsMember({"var", "cov"}));
    add_plan_options(c_sp, sp_plan);
    c_sp->add_option("--out", sp_out, "output map stack")->required();
    c_sp->add_option("--pgm", sp_pgm, "optional 16-bit PGM preview");
    c_sp->callback([&] {
        SparcomOptions o;
        o.solver.lambda = sp_lambda;
        o.solver.max_iters = sp_iters;
        o.solver.accelerated = sp_fista;
        o.solver.formulation = sp_form == "cov" ? Formulation::cov : Formulation::var;
        o.plan = sp_plan.plan();
        o.factor = sp_plan.factor;
        o.relative_lambda = sp_relative;
        const Psf psf = sp_delta ? Psf::delta() : Psf::gaussian(sp_sigma);
        const EmitterMap map = reconstruct_sparcom(read_stack(sp_in), psf, o);
        write_map(sp_out, sp_pgm, map.values, "sparcom");
        std::cout << "wrote " << sp_out << "\n";
    });

    // lsparcom
    auto* c_ls = app.add_subcommand("lsparcom", "learned network: infer or train");
    c_ls->require_subcommand(1);
    std::string inf_in, inf_w, inf_out, inf_pgm;
    PlanArgs inf_plan;
    auto* c_inf = c_ls->add_subcommand("infer", "reconstruct a movie with trained weights");
    c_inf->add_option("--in", inf_in, "movie stack")->required();
    c_inf->add_option("--weights", inf_w, "weights file")->required();
    c_inf->add_option("--out", inf_out, "output map stack")->required();
    c_inf->add_option("--pgm", inf_pgm, "optional 16-bit PGM preview");
    add_plan_options(c_inf, inf_plan);
    c_inf->callback([&] {
        LsparcomOptions o{inf_plan.plan(), inf_plan.factor};
        const EmitterMap map = reconstruct_lsparcom(read_stack(inf_in), read_weights(inf_w), o);
        write_map(inf_out, inf_pgm, map.values, "lsparcom");
        std::cout << "wrote " << inf_out << "\n";
    });

    TrainArgs tr;
    auto* c_tr = c_ls->add_subcommand("train", "train weights on NAME.stk + NAME.gt.stk pairs");
    c_tr->add_option("--data", tr.data, "directory of movie pairs")->required()->check(CLI::ExistingDirectory);
    c_tr->add_option("--lambda", tr.lambda, "off-support L1 weight");
    c_tr->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber);
    c_tr->add_option("--seed", tr.seed);
    c_tr->add_option("--out", tr.out, "weights file")->required();
    c_tr->add_option("--examples", tr.examples, "training examples drawn from the movies")->check(CLI::PositiveNumber);
    c_tr->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
    c_tr->add_option("--lr", tr.lr, "Adam learning rate");
    c_tr->add_option("--window", tr.window, "crop side, low-res pixels")->check(CLI::PositiveNumber);
    c_tr->add_option("--factor", tr.factor)->check(CLI::PositiveNumber);
    c_tr->add_option("--group-size", tr.group_size, "frames summed per example frame")->check(CLI::PositiveNumber);
    c_tr->add_flag("--no-rotation", tr.no_rotation, "disable random quarter turns");
    c_tr->add_option("--target-gain", tr.target_gain, "ground-truth multiplier")->check(CLI::PositiveNumber);
    c_tr->add_option("--kernel-lr-scale", tr.kernel_lr_scale, "kernel step relative to --lr")
        ->check(CLI::NonNegativeNumber);
    c_tr->add_option("--adam-eps", tr.adam_eps)->check(CLI::PositiveNumber);
    c_tr->add_option("--init", tr.init, "start from a weights file");
    c_tr->add_option("--log", tr.log, "per-epoch loss log (TSV)");
    c_tr->add_flag("--quiet", tr.quiet);
    c_tr->callback([&] { run_train(tr); });

    // eval
    std::string ev_pred, ev_gt, ev_report;
    double ev_tol = 1.0, ev_thr = 0.1;
    int ev_factor = 4;
    auto* c_ev = app.add_subcommand("eval", "detection precision / recall against ground truth");
    c_ev->add_option("--pred", ev_pred, "map stack")->required();
    c_ev->add_option("--gt", ev_gt, "ground-truth CSV")->required();
    c_ev->add_option("--tol", ev_tol, "match radius, high-res px");
    c_ev->add_option("--threshold", ev_thr, "detection threshold, fraction of max");
    c_ev->add_option("--factor", ev_factor, "upsampling factor of the map");
    c_ev->add_option("--report", ev_report, "report file");
    c_ev->callback([&] {
        const Image pred = read_image_stack(ev_pred);
        if (pred.rows() != pred.cols() || pred.rows() % ev_factor != 0) {
            throw std::invalid_argument("eval: map must be square with a side divisible by --factor");
        }
        const GridSpec grid(static_cast<int>(pred.rows()) / ev_factor, ev_factor);
        const auto rep = evaluate_localization(EmitterMap(pred), read_ground_truth(ev_gt, grid), ev_tol, ev_thr);
        std::cout << rep.to_string();
        if (!ev_report.empty()) {
            std::ofstream f(ev_report);
            f << rep.to_string();
        }
    });

    // viz
    auto* c_viz = app.add_subcommand("viz", "figure-style outputs");
    c_viz->require_subcommand(1);
    std::string ov_pred, ov_gt, ov_out;
    double ov_thr = 0.1;
    int ov_factor = 4;
    auto* c_ov = c_viz->add_subcommand("overlay", "red = prediction, green = ground truth (PPM)");
    c_ov->add_option("--pred", ov_pred, "map stack")->required();
    c_ov->add_option("--gt", ov_gt, "ground-truth CSV")->required();
    c_ov->add_option("--factor", ov_factor);
    c_ov->add_option("--threshold", ov_thr);
    c_ov->add_option("--out", ov_out, "PPM file")->required();
    c_ov->callback([&] {
        const Image pred = read_image_stack(ov_pred);
        const GridSpec grid(static_cast<int>(pred.rows()) / ov_factor, ov_factor);
        write_ppm(ov_out, emit_overlay(pred, read_ground_truth(ov_gt, grid).support(), ov_thr));
    });
    std::vector<std::string> se_images, se_names;
    std::string se_line, se_out;
    auto* c_se = c_viz->add_subcommand("section", "normalized intensity along a line (TSV)");
    c_se->add_option("--images", se_images, "map stacks")->required();
    c_se->add_option("--names", se_names, "column names (default: file stems)");
    c_se->add_option("--line", se_line, "r0,c0,r1,c1")->required();
    c_se->add_option("--out", se_out, "table file (default stdout)");
    c_se->callback([&] {
        std::vector<Image> imgs;
        std::vector<std::string> names = se_names;
        for (const auto& p : se_images) {
            imgs.push_back(read_image_stack(p));
            if (se_names.empty()) names.push_back(fs::path(p).stem().string());
        }
        const auto v = parse_numbers(se_line);
        if (v.size() != 4) throw std::invalid_argument("section: --line needs r0,c0,r1,c1");
        const std::string table = emit_cross_section(imgs, names, Line{v[0], v[1], v[2], v[3]});
        if (se_out.empty()) {
            std::cout << table;
        } else {
            std::ofstream(se_out) << table;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
