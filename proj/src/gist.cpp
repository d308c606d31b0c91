#include "sectlab/gist.hpp"

#include <cmath>
#include <numbers>

#include "sectlab/fft.hpp"

namespace sectlab {

namespace {

constexpr int kN = kGistImageSize;

struct ChannelParams {
    double radial_peak;     // peak frequency as a fraction of n
    double angular_weight;  // orientation selectivity
    double orientation;     // tuned angle offset
};

ChannelParams channel_params(int channel) {
    int c = channel;
    for (int scale = 0; scale < static_cast<int>(kGistOrientations.size()); ++scale) {
        const int per_scale = kGistOrientations[scale];
        if (c < per_scale) {
            ChannelParams p;
            p.radial_peak = 0.3 / std::pow(1.85, scale);
            p.angular_weight = per_scale * per_scale / 64.0;
            p.orientation = std::numbers::pi * c / per_scale;
            return p;
        }
        c -= per_scale;
    }
    throw GistError("channel index out of range: " + std::to_string(channel));
}

// Signed frequency of an FFT bin.
double signed_freq(int bin) { return bin < kN / 2 ? bin : bin - kN; }

std::vector<double> to_unit_gray(const GrayImage& img) {
    if (img.width != kN || img.height != kN ||
        img.pixels.size() != static_cast<std::size_t>(kN) * kN)
        throw GistError("descriptor input must be exactly 64x64");
    std::vector<double> gray(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) gray[i] = img.pixels[i] / 255.0;
    return gray;
}

}  // namespace

std::vector<double> gist_transfer_function(int channel) {
    const ChannelParams p = channel_params(channel);
    std::vector<double> g(static_cast<std::size_t>(kN) * kN);
    for (int r = 0; r < kN; ++r) {
        const double fy = signed_freq(r);
        for (int c = 0; c < kN; ++c) {
            const double fx = signed_freq(c);
            const double fr = std::sqrt(fx * fx + fy * fy);
            double tr = std::atan2(fy, fx) + p.orientation;
            if (tr < -std::numbers::pi) tr += 2.0 * std::numbers::pi;
            if (tr > std::numbers::pi) tr -= 2.0 * std::numbers::pi;
            const double radial = fr / (kN * p.radial_peak) - 1.0;
            g[static_cast<std::size_t>(r) * kN + c] =
                std::exp(-10.0 * 0.35 * radial * radial -
                         2.0 * p.angular_weight * std::numbers::pi * tr * tr);
        }
    }
    return g;
}

std::vector<std::complex<double>> gist_filter_image(const GrayImage& img, int channel) {
    const std::vector<double> gray = to_unit_gray(img);
    std::vector<std::complex<double>> field(gray.begin(), gray.end());
    fft_2d(field, kN, false);
    const std::vector<double> g = gist_transfer_function(channel);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= g[i];
    fft_2d(field, kN, true);
    return field;
}

GistDescriptor gist_descriptor(const GrayImage& img) {
    const std::vector<double> gray = to_unit_gray(img);
    std::vector<std::complex<double>> spectrum(gray.begin(), gray.end());
    fft_2d(spectrum, kN, false);

    GistDescriptor desc;
    constexpr int kBlock = kN / kGistGridSize;
    std::vector<std::complex<double>> field(spectrum.size());
    for (int channel = 0; channel < kGistChannels; ++channel) {
        const std::vector<double> g = gist_transfer_function(channel);
        for (std::size_t i = 0; i < spectrum.size(); ++i) field[i] = spectrum[i] * g[i];
        fft_2d(field, kN, true);

        for (int by = 0; by < kGistGridSize; ++by) {
            for (int bx = 0; bx < kGistGridSize; ++bx) {
                double sum = 0.0;
                for (int r = by * kBlock; r < (by + 1) * kBlock; ++r)
                    for (int c = bx * kBlock; c < (bx + 1) * kBlock; ++c)
                        sum += std::abs(field[static_cast<std::size_t>(r) * kN + c]);
                desc.values[channel * kGistGridSize * kGistGridSize + by * kGistGridSize + bx] =
                    sum / (kBlock * kBlock);
            }
        }
    }
    return desc;
}

}  // namespace sectlab
