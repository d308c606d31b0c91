#pragma once

// Independent reference implementations the tests check the library
// against. Deliberately slow and simple.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace testsupport {

// Repeated-addition alignment: the brute-force reading of "round up to the
// next multiple".
inline std::uint64_t loop_align(std::uint64_t value, std::uint64_t alignment) {
    std::uint64_t r = 0;
    while (r < value) r += alignment;
    return r;
}

// O(n^2) DFT per axis, for checking the radix-2 transform.
inline std::vector<std::complex<double>> naive_dft_2d(
    const std::vector<std::complex<double>>& in, int n, bool inverse) {
    const double sign = inverse ? 2.0 : -2.0;
    std::vector<std::complex<double>> rows(in.size());
    for (int r = 0; r < n; ++r) {
        for (int k = 0; k < n; ++k) {
            std::complex<double> acc{0.0, 0.0};
            for (int c = 0; c < n; ++c) {
                const double angle = sign * std::numbers::pi * k * c / n;
                acc += in[static_cast<std::size_t>(r) * n + c] *
                       std::complex<double>(std::cos(angle), std::sin(angle));
            }
            rows[static_cast<std::size_t>(r) * n + k] = inverse ? acc / double(n) : acc;
        }
    }
    std::vector<std::complex<double>> out(in.size());
    for (int c = 0; c < n; ++c) {
        for (int k = 0; k < n; ++k) {
            std::complex<double> acc{0.0, 0.0};
            for (int r = 0; r < n; ++r) {
                const double angle = sign * std::numbers::pi * k * r / n;
                acc += rows[static_cast<std::size_t>(r) * n + c] *
                       std::complex<double>(std::cos(angle), std::sin(angle));
            }
            out[static_cast<std::size_t>(k) * n + c] = inverse ? acc / double(n) : acc;
        }
    }
    return out;
}

// Direct-space circular convolution with the kernel whose spectrum is the
// given real transfer function: out = img (*) idft(transfer).
inline std::vector<std::complex<double>> direct_filter(const std::vector<double>& img,
                                                       const std::vector<double>& transfer,
                                                       int n) {
    std::vector<std::complex<double>> spectrum(transfer.begin(), transfer.end());
    const std::vector<std::complex<double>> kernel = naive_dft_2d(spectrum, n, true);

    std::vector<std::complex<double>> out(img.size());
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            std::complex<double> acc{0.0, 0.0};
            for (int v = 0; v < n; ++v) {
                const int ky = (y - v + n) % n;
                for (int u = 0; u < n; ++u) {
                    const int kx = (x - u + n) % n;
                    acc += img[static_cast<std::size_t>(v) * n + u] *
                           kernel[static_cast<std::size_t>(ky) * n + kx];
                }
            }
            out[static_cast<std::size_t>(y) * n + x] = acc;
        }
    }
    return out;
}

inline double byte_entropy_bits(std::span<const std::uint8_t> data) {
    std::array<double, 256> counts{};
    for (std::uint8_t b : data) counts[b] += 1.0;
    double h = 0.0;
    for (double c : counts) {
        if (c == 0.0) continue;
        const double p = c / static_cast<double>(data.size());
        h -= p * std::log2(p);
    }
    return h;
}

// Exhaustive-scan KNN reference: full sort by (distance, label), majority
// vote over the first K, first qualifying label wins.
struct OraclePoint {
    std::vector<double> values;
    std::string label;
};

inline std::string knn_oracle(const std::vector<OraclePoint>& gallery,
                              const std::vector<double>& query, int k) {
    struct Entry {
        double d2;
        std::string label;
    };
    std::vector<Entry> entries;
    for (const auto& p : gallery) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) {
            const double diff = p.values[i] - query[i];
            d2 += diff * diff;
        }
        entries.push_back({d2, p.label});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        return a.label < b.label;
    });
    const std::size_t use = std::min<std::size_t>(k, entries.size());
    std::map<std::string, int> votes;
    for (std::size_t i = 0; i < use; ++i) ++votes[entries[i].label];
    int best = 0;
    for (const auto& [label, n] : votes) best = std::max(best, n);
    for (std::size_t i = 0; i < use; ++i)
        if (votes[entries[i].label] == best) return entries[i].label;
    return {};
}

}  // namespace testsupport
