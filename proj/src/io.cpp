#include "lsparcom/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lsparcom {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    return in;
}

void put_f32(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    out.write(b, 8);
}

double get_f32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated float32 payload");
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return static_cast<double>(std::bit_cast<float>(bits));
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated float64 payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(std::string(what) + ": unexpected end of header");
    return line;
}

void expect_end_of_file(std::istream& in, const char* what) {
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(std::string(what) + ": trailing bytes");
}

}  // namespace

// ---------------------------------------------------------------------------
// Stacks

void write_stack(const std::filesystem::path& path, const FrameStack& stack) {
    stack.validate();
    auto out = open_out(path);
    out << "STK1\n";
    out << "width " << stack.cols() << "\n";
    out << "height " << stack.rows() << "\n";
    out << "frames " << stack.size() << "\n";
    out << "encoding f32le\n";
    out << std::setprecision(17) << "pitch " << stack.grid.low_pitch << "\n";
    out << "grid " << stack.grid.low_side << " " << stack.grid.factor << "\n";
    const auto prov = stack.metadata.find("provenance");
    out << "provenance " << (prov == stack.metadata.end() ? std::string("unknown") : prov->second) << "\n";
    for (const auto& [k, v] : stack.metadata) {
        if (k == "provenance") continue;
        if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw std::invalid_argument("write_stack: metadata must be single-line with space-free keys");
        }
        out << "meta " << k << " " << v << "\n";
    }
    out << "end\n";
    for (const auto& f : stack.frames) {
        for (Eigen::Index i = 0; i < f.size(); ++i) put_f32(out, f.data()[i]);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

FrameStack read_stack(const std::filesystem::path& path) {
    auto in = open_in(path);
    if (next_line(in, "stack") != "STK1") throw FormatError("stack: bad magic in " + path.string());
    long width = -1, height = -1, frames = -1;
    FrameStack stack;
    for (;;) {
        const std::string line = next_line(in, "stack");
        if (line == "end") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "width") {
            ls >> width;
        } else if (key == "height") {
            ls >> height;
        } else if (key == "frames") {
            ls >> frames;
        } else if (key == "encoding") {
            std::string enc;
            ls >> enc;
            if (enc != "f32le") throw FormatError("stack: unsupported encoding " + enc);
        } else if (key == "pitch") {
            ls >> stack.grid.low_pitch;
        } else if (key == "grid") {
            ls >> stack.grid.low_side >> stack.grid.factor;
        } else if (key == "provenance") {
            std::string rest;
            std::getline(ls >> std::ws, rest);
            stack.metadata["provenance"] = rest;
        } else if (key == "meta") {
            std::string k, rest;
            ls >> k;
            std::getline(ls >> std::ws, rest);
            stack.metadata[k] = rest;
        } else {
            throw FormatError("stack: unknown header key " + key);
        }
        if (ls.fail()) throw FormatError("stack: malformed header line: " + line);
    }
    if (width < 0 || height < 0 || frames < 0) throw FormatError("stack: missing dimensions");
    stack.frames.assign(static_cast<std::size_t>(frames), Image(height, width));
    for (auto& f : stack.frames) {
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = get_f32(in);
    }
    expect_end_of_file(in, "stack");
    return stack;
}

void write_image_stack(const std::filesystem::path& path, const Image& image, const std::string& provenance) {
    FrameStack s;
    s.frames.push_back(image);
    s.grid = GridSpec(static_cast<int>(image.rows()), 1);
    s.metadata["provenance"] = provenance;
    write_stack(path, s);
}

Image read_image_stack(const std::filesystem::path& path) {
    FrameStack s = read_stack(path);
    if (s.size() != 1) throw FormatError("expected a single-frame stack: " + path.string());
    return std::move(s.frames.front());
}

// ---------------------------------------------------------------------------
// Weights

void write_weights(const std::filesystem::path& path, const LsparcomWeights& weights) {
    weights.validate();
    auto out = open_out(path);
    out << "LSPARCOM-WEIGHTS 1\n";
    out << "folds " << weights.w_p.size() << "\n";
    out << "radial " << (weights.radial_constrained ? 1 : 0) << "\n";
    out << "tensor w_i " << weights.w_i.rows() << " " << weights.w_i.cols() << "\n";
    for (std::size_t k = 0; k < weights.w_p.size(); ++k) {
        out << "tensor w_p." << k << " " << weights.w_p[k].rows() << " " << weights.w_p[k].cols() << "\n";
    }
    out << "tensor alpha0 " << weights.alpha0.size() << "\n";
    out << "tensor beta0 " << weights.beta0.size() << "\n";
    out << "tensor s 1\n";
    out << "end\n";
    auto put_image = [&](const Image& k) {
        for (Eigen::Index i = 0; i < k.size(); ++i) put_f64(out, k.data()[i]);
    };
    put_image(weights.w_i);
    for (const auto& k : weights.w_p) put_image(k);
    for (double a : weights.alpha0) put_f64(out, a);
    for (double b : weights.beta0) put_f64(out, b);
    put_f64(out, weights.s);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

LsparcomWeights read_weights(const std::filesystem::path& path) {
    auto in = open_in(path);
    if (next_line(in, "weights") != "LSPARCOM-WEIGHTS 1") {
        throw FormatError("weights: bad magic in " + path.string());
    }
    struct Tensor {
        std::string name;
        std::vector<long> dims;
    };
    std::vector<Tensor> tensors;
    long folds = -1;
    int radial = -1;
    for (;;) {
        const std::string line = next_line(in, "weights");
        if (line == "end") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "folds") {
            ls >> folds;
        } else if (key == "radial") {
            ls >> radial;
        } else if (key == "tensor") {
            Tensor t;
            ls >> t.name;
            long d = 0;
            while (ls >> d) t.dims.push_back(d);
            ls.clear();
            if (t.dims.empty()) throw FormatError("weights: tensor without dimensions");
            tensors.push_back(std::move(t));
        } else {
            throw FormatError("weights: unknown header key " + key);
        }
        if (ls.fail()) throw FormatError("weights: malformed header line: " + line);
    }
    if (folds != kFolds || (radial != 0 && radial != 1)) throw FormatError("weights: unsupported fold count or flag");
    if (tensors.size() != static_cast<std::size_t>(folds) + 4) throw FormatError("weights: unexpected tensor list");

    auto read_image = [&](const Tensor& t, const std::string& name) {
        if (t.name != name || t.dims.size() != 2) throw FormatError("weights: expected tensor " + name);
        Image k(t.dims[0], t.dims[1]);
        for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = get_f64(in);
        return k;
    };
    auto read_vector = [&](const Tensor& t, const std::string& name) {
        if (t.name != name || t.dims.size() != 1) throw FormatError("weights: expected tensor " + name);
        std::vector<double> v(static_cast<std::size_t>(t.dims[0]));
        for (auto& x : v) x = get_f64(in);
        return v;
    };
    LsparcomWeights w;
    w.radial_constrained = radial == 1;
    w.w_i = read_image(tensors[0], "w_i");
    for (long k = 0; k < folds; ++k) {
        w.w_p.push_back(read_image(tensors[static_cast<std::size_t>(k) + 1], "w_p." + std::to_string(k)));
    }
    w.alpha0 = read_vector(tensors[static_cast<std::size_t>(folds) + 1], "alpha0");
    w.beta0 = read_vector(tensors[static_cast<std::size_t>(folds) + 2], "beta0");
    const auto s = read_vector(tensors[static_cast<std::size_t>(folds) + 3], "s");
    if (s.size() != 1) throw FormatError("weights: s must be a scalar");
    w.s = s.front();
    expect_end_of_file(in, "weights");
    w.validate();
    return w;
}

// ---------------------------------------------------------------------------
// Ground truth

void write_ground_truth(const std::filesystem::path& path, const Scene& scene) {
    auto out = open_out(path);
    out << "row,col,brightness,on_probability\n" << std::setprecision(17);
    for (const auto& e : scene.emitters) {
        out << e.row << "," << e.col << "," << e.mean_brightness << "," << e.on_probability << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Scene read_ground_truth(const std::filesystem::path& path, const GridSpec& grid) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "row,col,brightness,on_probability") {
        throw FormatError("ground truth: bad header in " + path.string());
    }
    Scene scene;
    scene.grid = grid;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Emitter e;
        char c1 = 0, c2 = 0, c3 = 0;
        ls >> e.row >> c1 >> e.col >> c2 >> e.mean_brightness >> c3 >> e.on_probability;
        if (ls.fail() || c1 != ',' || c2 != ',' || c3 != ',') {
            throw FormatError("ground truth: malformed line: " + line);
        }
        scene.emitters.push_back(e);
    }
    scene.validate();
    return scene;
}

// ---------------------------------------------------------------------------
// Viewing formats

void write_pgm16(const std::filesystem::path& path, const Image& image) {
    auto out = open_out(path);
    out << "P5\n" << image.cols() << " " << image.rows() << "\n65535\n";
    const double peak = image.size() ? image.maxCoeff() : 0.0;
    const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;
    for (Eigen::Index i = 0; i < image.size(); ++i) {
        const double v = std::clamp(image.data()[i] * scale, 0.0, 65535.0);
        const auto u = static_cast<std::uint16_t>(std::lround(v));
        const char b[2] = {static_cast<char>(u >> 8), static_cast<char>(u & 0xFFu)};
        out.write(b, 2);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    if (image.data.size() != static_cast<std::size_t>(image.rows) * image.cols * 3) {
        throw std::invalid_argument("write_ppm: buffer size mismatch");
    }
    auto out = open_out(path);
    out << "P6\n" << image.cols << " " << image.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace lsparcom
