#pragma once

#include <map>
#include <string>
#include <vector>

#include "sectlab/errors.hpp"
#include "sectlab/gist.hpp"

namespace sectlab {

enum class KnnErrc {
    kEmptyIndex,
    kBadArgument,
    kBadGalleryFile,
};

class KnnError : public Error {
public:
    KnnError(KnnErrc code, const std::string& msg) : Error(msg), code_(code) {}
    KnnErrc code() const { return code_; }

private:
    KnnErrc code_;
};

struct Prediction {
    std::string label;
    // Vote fractions over every label known to the index; sums to 1.
    std::map<std::string, double> scores;
};

struct GalleryEntry {
    GistDescriptor descriptor;
    std::string label;
};

// Labeled reference set for nearest-neighbor search. Build once, query from
// as many threads as you like.
class KnnIndex {
public:
    void add(const GistDescriptor& descriptor, const std::string& label);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<GalleryEntry>& entries() const { return entries_; }
    // Sorted unique labels.
    std::vector<std::string> labels() const;

    void save(const std::string& path) const;
    static KnnIndex load(const std::string& path);
    void export_csv(const std::string& path) const;

private:
    std::vector<GalleryEntry> entries_;
};

// Exhaustive Euclidean search over the gallery; majority vote among the K
// nearest. Equal-score winners fall back to the nearest neighbor among the
// tied labels; exact-distance ties resolve to the lexicographically
// smallest label so gallery insertion order never matters.
Prediction knn_classify(const KnnIndex& index, const GistDescriptor& query, int k = 3);

}  // namespace sectlab
