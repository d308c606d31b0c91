#pragma once

#include <complex>
#include <vector>

namespace sectlab {

// Iterative radix-2 transform. Sizes are powers of two (the descriptor
// pipeline only ever uses 64). Inverse applies the 1/n scaling.
void fft_1d(std::complex<double>* data, int n, bool inverse);

// Row-column 2-D transform over an n x n row-major grid.
void fft_2d(std::complex<double>* data, int n, bool inverse);

inline void fft_2d(std::vector<std::complex<double>>& data, int n, bool inverse) {
    fft_2d(data.data(), n, inverse);
}

}  // namespace sectlab
