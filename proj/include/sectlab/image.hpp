#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sectlab/errors.hpp"

namespace sectlab {

enum class ImageErrc {
    kInputTooSmall,
    kBadDimensions,
    kBadPgm,
};

class ImageError : public Error {
public:
    ImageError(ImageErrc code, const std::string& msg) : Error(msg), code_(code) {}
    ImageErrc code() const { return code_; }

private:
    ImageErrc code_;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, width * height entries

    std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

// Piecewise-constant image width from file size; thresholds in 1000-byte
// kilobytes, ranges half-open [lo, hi).
int width_for_size(std::uint64_t file_size);

// One byte per pixel, rows of width_for_size(size); an incomplete last row
// is discarded.
GrayImage bytes_to_image(std::span<const std::uint8_t> bytes);

// Corner-aligned bilinear resampling; interpolation runs in doubles and
// rounds half-up to 8 bits at the end.
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

// Binary PGM ("P5", maxval 255).
void write_pgm(const std::string& path, const GrayImage& img);
GrayImage read_pgm(const std::string& path);

}  // namespace sectlab
