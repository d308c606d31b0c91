#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sectlab/errors.hpp"

namespace sectlab {

class MetricsError : public Error {
public:
    explicit MetricsError(const std::string& msg) : Error(msg) {}
};

struct ConfusionMatrix {
    std::vector<std::string> labels;  // lexicographic; rows = truth, cols = prediction
    std::vector<std::vector<std::uint64_t>> counts;

    std::uint64_t total() const;
    std::uint64_t trace() const;
    double accuracy() const;  // trace / total
    std::string to_csv() const;
};

ConfusionMatrix confusion_matrix(const std::vector<std::string>& truth,
                                 const std::vector<std::string>& predicted);

struct ScoredSample {
    std::string id;  // deterministic ranking tie-break
    std::string truth;
    std::map<std::string, double> scores;
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PrCurve {
    std::string family;
    std::vector<PrPoint> points;  // one point per ranked sample
    double average_precision = 0.0;
};

struct PrResult {
    std::vector<PrCurve> curves;
    double macro_average_precision = 0.0;
};

// One-vs-rest curves per family present in the truth labels; average
// precision via the step-wise sum over the descending-score ranking.
PrResult precision_recall(const std::vector<ScoredSample>& samples);

}  // namespace sectlab
