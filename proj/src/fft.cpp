#include "sectlab/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sectlab {

void fft_1d(std::complex<double>* data, int n, bool inverse) {
    if (n <= 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");

    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (int len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / len;
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        for (int i = 0; i < n; ++i) data[i] /= n;
    }
}

void fft_2d(std::complex<double>* data, int n, bool inverse) {
    for (int r = 0; r < n; ++r) fft_1d(data + static_cast<std::ptrdiff_t>(r) * n, n, inverse);

    std::vector<std::complex<double>> column(n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) column[r] = data[static_cast<std::ptrdiff_t>(r) * n + c];
        fft_1d(column.data(), n, inverse);
        for (int r = 0; r < n; ++r) data[static_cast<std::ptrdiff_t>(r) * n + c] = column[r];
    }
}

}  // namespace sectlab
