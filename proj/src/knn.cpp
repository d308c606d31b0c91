#include "sectlab/knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "sectlab/bytes.hpp"

namespace sectlab {

namespace {

constexpr char kGalleryMagic[4] = {'S', 'L', 'K', 'G'};
constexpr std::uint32_t kGalleryVersion = 1;

float to_f32(double v) { return static_cast<float>(v); }

}  // namespace

void KnnIndex::add(const GistDescriptor& descriptor, const std::string& label) {
    entries_.push_back({descriptor, label});
}

std::vector<std::string> KnnIndex::labels() const {
    std::set<std::string> unique;
    for (const auto& e : entries_) unique.insert(e.label);
    return {unique.begin(), unique.end()};
}

void KnnIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out.write(kGalleryMagic, sizeof(kGalleryMagic));
    std::uint8_t word[8];
    write_le32(word, kGalleryVersion);
    out.write(reinterpret_cast<const char*>(word), 4);
    write_le32(word, static_cast<std::uint32_t>(entries_.size()));
    out.write(reinterpret_cast<const char*>(word), 4);
    write_le32(word, kGistDimensions);
    out.write(reinterpret_cast<const char*>(word), 4);
    for (const auto& e : entries_) {
        write_le32(word, static_cast<std::uint32_t>(e.label.size()));
        out.write(reinterpret_cast<const char*>(word), 4);
        out.write(e.label.data(), static_cast<std::streamsize>(e.label.size()));
        for (double v : e.descriptor.values) {
            const float f = to_f32(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_le32(word, bits);
            out.write(reinterpret_cast<const char*>(word), 4);
        }
    }
    if (!out) throw IoError("write failed on " + path);
}

KnnIndex KnnIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto read_u32 = [&in, &path]() {
        std::uint8_t word[4];
        in.read(reinterpret_cast<char*>(word), 4);
        if (!in) throw KnnError(KnnErrc::kBadGalleryFile, "truncated gallery file " + path);
        return read_le32(word, 0);
    };

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kGalleryMagic, 4) != 0)
        throw KnnError(KnnErrc::kBadGalleryFile, "bad gallery magic in " + path);
    if (read_u32() != kGalleryVersion)
        throw KnnError(KnnErrc::kBadGalleryFile, "unsupported gallery version in " + path);
    const std::uint32_t count = read_u32();
    if (read_u32() != kGistDimensions)
        throw KnnError(KnnErrc::kBadGalleryFile, "unexpected descriptor dimension in " + path);

    KnnIndex index;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t label_len = read_u32();
        std::string label(label_len, '\0');
        in.read(label.data(), label_len);
        if (!in) throw KnnError(KnnErrc::kBadGalleryFile, "truncated gallery file " + path);
        GalleryEntry e;
        e.label = std::move(label);
        for (double& v : e.descriptor.values) {
            const std::uint32_t bits = read_u32();
            float f;
            std::memcpy(&f, &bits, 4);
            v = f;
        }
        index.entries_.push_back(std::move(e));
    }
    return index;
}

void KnnIndex::export_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << "label";
    for (int d = 0; d < kGistDimensions; ++d) out << ",g" << d;
    out << "\n";
    out.precision(9);
    for (const auto& e : entries_) {
        out << e.label;
        for (double v : e.descriptor.values) out << "," << v;
        out << "\n";
    }
    if (!out) throw IoError("write failed on " + path);
}

Prediction knn_classify(const KnnIndex& index, const GistDescriptor& query, int k) {
    if (index.empty()) throw KnnError(KnnErrc::kEmptyIndex, "gallery has no entries");
    if (k < 1) throw KnnError(KnnErrc::kBadArgument, "K must be at least 1");

    struct Candidate {
        double dist2;
        const std::string* label;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(index.size());
    for (const auto& e : index.entries()) {
        double d2 = 0.0;
        for (int d = 0; d < kGistDimensions; ++d) {
            const double diff = e.descriptor.values[d] - query.values[d];
            d2 += diff * diff;
        }
        candidates.push_back({d2, &e.label});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return *a.label < *b.label;
    });

    const std::size_t use = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::map<std::string, int> votes;
    for (std::size_t i = 0; i < use; ++i) ++votes[*candidates[i].label];

    int best_votes = 0;
    for (const auto& [label, n] : votes) best_votes = std::max(best_votes, n);
    // Sorted candidates put smaller (distance, label) first, so the first
    // top-vote label encountered is the nearest one, with exact-distance
    // ties already broken lexicographically.
    std::string winner;
    for (std::size_t i = 0; i < use; ++i) {
        if (votes[*candidates[i].label] == best_votes) {
            winner = *candidates[i].label;
            break;
        }
    }

    Prediction pred;
    pred.label = winner;
    for (const auto& label : index.labels()) pred.scores[label] = 0.0;
    for (const auto& [label, n] : votes)
        pred.scores[label] = static_cast<double>(n) / static_cast<double>(use);
    return pred;
}

}  // namespace sectlab
