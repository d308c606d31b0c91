#pragma once

#include <array>
#include <complex>
#include <vector>

#include "sectlab/errors.hpp"
#include "sectlab/image.hpp"

namespace sectlab {

class GistError : public Error {
public:
    explicit GistError(const std::string& msg) : Error(msg) {}
};

// Frozen descriptor geometry: 3 scales with (8, 8, 4) orientation channels,
// pooled over a 4x4 grid -> 20 * 16 = 320 components.
inline constexpr int kGistImageSize = 64;
inline constexpr int kGistGridSize = 4;
inline constexpr std::array<int, 3> kGistOrientations{8, 8, 4};
inline constexpr int kGistChannels = 20;
inline constexpr int kGistDimensions = 320;

struct GistDescriptor {
    std::array<double, kGistDimensions> values{};
};

// Frequency response of one filter channel, 64x64 real weights in FFT bin
// order. Channels are scale-major: scale 0 orientations 0..7, scale 1
// orientations 0..7, scale 2 orientations 0..3.
std::vector<double> gist_transfer_function(int channel);

// Filtered complex field of one channel (frequency-domain product), for a
// 64x64 input scaled to [0, 1].
std::vector<std::complex<double>> gist_filter_image(const GrayImage& img, int channel);

// Full descriptor: per channel, magnitude response average-pooled over the
// 4x4 grid; components ordered channel-major, blocks row-major.
GistDescriptor gist_descriptor(const GrayImage& img);

}  // namespace sectlab
