#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsparcom/image.hpp"
#include "lsparcom/simulate.hpp"
#include "lsparcom/stats.hpp"
#include "lsparcom/unfolded.hpp"

namespace lsparcom {

/// Raised for malformed or truncated files.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Text header (`STK1`, `key value` lines, `end`) followed by row-major,
/// frame-sequential float32 little-endian samples. Metadata entries are
/// written as `meta <key> <value>`; `provenance` is a reserved key.
void write_stack(const std::filesystem::path& path, const FrameStack& stack);
FrameStack read_stack(const std::filesystem::path& path);

/// Single-frame convenience wrappers.
void write_image_stack(const std::filesystem::path& path, const Image& image, const std::string& provenance);
Image read_image_stack(const std::filesystem::path& path);

/// Manifest (`LSPARCOM-WEIGHTS 1`, folds, radial flag, one `tensor name dims`
/// line per tensor, `end`) followed by float64 little-endian payloads in
/// manifest order.
void write_weights(const std::filesystem::path& path, const LsparcomWeights& weights);
LsparcomWeights read_weights(const std::filesystem::path& path);

/// CSV with header `row,col,brightness,on_probability`.
void write_ground_truth(const std::filesystem::path& path, const Scene& scene);
/// Reads the points back; the returned scene's grid is `grid`.
Scene read_ground_truth(const std::filesystem::path& path, const GridSpec& grid);

/// 16-bit binary PGM, scaled so the maximum maps to 65535 (all-zero stays zero).
void write_pgm16(const std::filesystem::path& path, const Image& image);

struct RgbImage {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data;  ///< row-major RGB triples

    std::uint8_t& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }
    std::uint8_t at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }
};

/// Binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

}  // namespace lsparcom
