#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sectlab/dataset.hpp"
#include "sectlab/inject.hpp"
#include "sectlab/metrics.hpp"

namespace sectlab {

enum class DefenseMode { kNone, kReorder, kInjectAugment, kReorderPlusInject };

const char* to_string(DefenseMode mode);
const char* to_string(PayloadKind kind);

struct ScenarioSpec {
    std::vector<int> m_values{1, 2, 3, 4, 5};
    std::vector<int> n_values{1, 2, 3, 4, 5};
    PayloadKind payload = PayloadKind::kRandom;
    DefenseMode defense = DefenseMode::kNone;
    bool headerless = false;
    int repetitions = 3;
    std::uint64_t seed = 0;
    SplitSpec split{0.8, 0.1, 0.1, 0};
    int knn_k = 3;
    int jobs = 1;
    // Augmented gallery copies are injected at the strongest attack cell.
    int augment_m = 5;
    int augment_n = 5;
};

struct CellReport {
    int m = 0;  // (0, 0) is the unmodified baseline cell
    int n = 0;
    std::vector<double> accuracy_per_rep;
    double mean_accuracy = 0.0;
    ConfusionMatrix confusion;  // counts accumulated over repetitions
    std::vector<PrCurve> pr_curves;
    double macro_average_precision = 0.0;
};

struct AuditEvent {
    std::string sample_id;
    int m = 0;
    int n = 0;
    int repetition = 0;
    std::string kind;  // "injected" | "injection-error" | "unparseable"
    std::string detail;
};

struct GridReport {
    ScenarioSpec spec;
    std::vector<CellReport> cells;  // baseline first, then (m, n) row-major
    std::vector<AuditEvent> audit;
    std::size_t gallery_size_per_rep = 0;
    std::size_t test_size_per_rep = 0;

    const CellReport* cell(int m, int n) const;
    std::string config_json() const;
};

using ProgressFn = std::function<void(const std::string&)>;

// The full attack/defense protocol: per repetition, split the corpus, build
// the (optionally augmented) train+validation gallery, then score the test
// set unmodified (baseline) and under every (m, n) injection. Injection
// failures score the unmodified sample and land in the audit log; samples
// are never dropped.
//
// checkpoint_dir, when nonempty, holds one JSON per (cell, repetition) so
// interrupted grids resume instead of recomputing.
GridReport run_grid(const Dataset& ds, const ScenarioSpec& spec,
                    const std::string& checkpoint_dir = {}, ProgressFn progress = {});

// Report files: accuracy CSV (m, n, repetition, accuracy), one confusion
// and one PR CSV per cell, and a JSON summary with the config echo and the
// audit log. Names carry the payload/defense/headerless tags.
void write_reports(const GridReport& report, const std::string& out_dir);

// "<payload>__<defense>__<full|headerless>", used in report file names.
std::string scenario_tag(const ScenarioSpec& spec);

}  // namespace sectlab
