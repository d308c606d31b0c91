#include "sectlab/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sectlab {

int width_for_size(std::uint64_t file_size) {
    constexpr std::uint64_t kB = 1000;
    if (file_size < 10 * kB) return 32;
    if (file_size < 30 * kB) return 64;
    if (file_size < 60 * kB) return 128;
    if (file_size < 100 * kB) return 256;
    if (file_size < 200 * kB) return 384;
    if (file_size < 500 * kB) return 512;
    if (file_size < 1000 * kB) return 768;
    if (file_size < 2000 * kB) return 1024;
    return 2048;
}

GrayImage bytes_to_image(std::span<const std::uint8_t> bytes) {
    const int width = width_for_size(bytes.size());
    const std::size_t height = bytes.size() / static_cast<std::size_t>(width);
    if (height == 0)
        throw ImageError(ImageErrc::kInputTooSmall,
                         "need at least " + std::to_string(width) + " bytes for one row, got " +
                             std::to_string(bytes.size()));
    GrayImage img;
    img.width = width;
    img.height = static_cast<int>(height);
    img.pixels.assign(bytes.begin(), bytes.begin() + height * static_cast<std::size_t>(width));
    return img;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
        throw ImageError(ImageErrc::kBadDimensions, "malformed source image");
    if (out_width < 1 || out_height < 1)
        throw ImageError(ImageErrc::kBadDimensions, "output dimensions must be positive");

    GrayImage out;
    out.width = out_width;
    out.height = out_height;
    out.pixels.resize(static_cast<std::size_t>(out_width) * out_height);

    const double sx = out_width > 1 ? static_cast<double>(img.width - 1) / (out_width - 1) : 0.0;
    const double sy = out_height > 1 ? static_cast<double>(img.height - 1) / (out_height - 1) : 0.0;

    for (int r = 0; r < out_height; ++r) {
        const double y = r * sy;
        const int y0 = static_cast<int>(y);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = y - y0;
        for (int c = 0; c < out_width; ++c) {
            const double x = c * sx;
            const int x0 = static_cast<int>(x);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = x - x0;
            const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
            const double bottom = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
            const double v = top * (1.0 - fy) + bottom * fy;
            out.pixels[static_cast<std::size_t>(r) * out_width + c] =
                static_cast<std::uint8_t>(std::floor(v + 0.5));
        }
    }
    return out;
}

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed on " + path);
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw ImageError(ImageErrc::kBadPgm, "not a binary PGM: " + path);
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width < 1 || height < 1 || maxval != 255)
        throw ImageError(ImageErrc::kBadPgm, "unsupported PGM header in " + path);
    in.get();  // single whitespace after maxval
    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw ImageError(ImageErrc::kBadPgm, "truncated PGM payload in " + path);
    return img;
}

}  // namespace sectlab
