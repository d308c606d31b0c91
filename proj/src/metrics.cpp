#include "sectlab/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace sectlab {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts)
        for (std::uint64_t v : row) n += v;
    return n;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
}

double ConfusionMatrix::accuracy() const {
    const std::uint64_t t = total();
    return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream os;
    os << "truth\\prediction";
    for (const auto& l : labels) os << "," << l;
    os << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        os << labels[i];
        for (std::size_t j = 0; j < labels.size(); ++j) os << "," << counts[i][j];
        os << "\n";
    }
    return os.str();
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& truth,
                                 const std::vector<std::string>& predicted) {
    if (truth.size() != predicted.size())
        throw MetricsError("LengthMismatch: " + std::to_string(truth.size()) + " truth vs " +
                           std::to_string(predicted.size()) + " predicted labels");

    std::set<std::string> label_set(truth.begin(), truth.end());
    label_set.insert(predicted.begin(), predicted.end());

    ConfusionMatrix cm;
    cm.labels.assign(label_set.begin(), label_set.end());
    cm.counts.assign(cm.labels.size(), std::vector<std::uint64_t>(cm.labels.size(), 0));

    auto index_of = [&cm](const std::string& l) {
        return static_cast<std::size_t>(
            std::lower_bound(cm.labels.begin(), cm.labels.end(), l) - cm.labels.begin());
    };
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
    return cm;
}

PrResult precision_recall(const std::vector<ScoredSample>& samples) {
    std::set<std::string> families;
    for (const auto& s : samples) families.insert(s.truth);

    PrResult result;
    for (const auto& family : families) {
        std::vector<const ScoredSample*> ranked;
        ranked.reserve(samples.size());
        for (const auto& s : samples) ranked.push_back(&s);

        auto score_of = [&family](const ScoredSample* s) {
            const auto it = s->scores.find(family);
            return it == s->scores.end() ? 0.0 : it->second;
        };
        std::sort(ranked.begin(), ranked.end(),
                  [&score_of](const ScoredSample* a, const ScoredSample* b) {
                      const double sa = score_of(a), sb = score_of(b);
                      if (sa != sb) return sa > sb;
                      return a->id < b->id;
                  });

        std::size_t positives = 0;
        for (const auto& s : samples)
            if (s.truth == family) ++positives;

        PrCurve curve;
        curve.family = family;
        std::size_t tp = 0;
        double prev_recall = 0.0;
        for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
            const bool hit = ranked[rank]->truth == family;
            if (hit) ++tp;
            const double recall = static_cast<double>(tp) / static_cast<double>(positives);
            const double precision = static_cast<double>(tp) / static_cast<double>(rank + 1);
            curve.points.push_back({recall, precision});
            if (hit) {
                curve.average_precision += (recall - prev_recall) * precision;
                prev_recall = recall;
            }
        }
        result.macro_average_precision += curve.average_precision;
        result.curves.push_back(std::move(curve));
    }
    if (!result.curves.empty()) result.macro_average_precision /= result.curves.size();
    return result;
}

}  // namespace sectlab
