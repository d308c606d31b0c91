#include "sectlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sectlab/gist.hpp"
#include "sectlab/knn.hpp"
#include "sectlab/rng.hpp"
#include "sectlab/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sectlab {

namespace {

struct SampleResult {
    std::string id;
    std::string truth;
    std::string predicted;
    std::map<std::string, double> scores;
};

struct UnitResult {  // one (cell, repetition)
    std::vector<SampleResult> samples;
    std::vector<AuditEvent> audit;
};

struct Cell {
    int m = 0;
    int n = 0;
};

void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers = std::min<int>(jobs, static_cast<int>(count));
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

GistDescriptor descriptor_of_bytes(std::span<const std::uint8_t> bytes) {
    GrayImage img;
    try {
        img = bytes_to_image(bytes);
    } catch (const ImageError&) {
        // Too small for even one pixel row; score a blank canvas rather
        // than dropping the sample.
        img.width = kGistImageSize;
        img.height = kGistImageSize;
        img.pixels.assign(static_cast<std::size_t>(kGistImageSize) * kGistImageSize, 0);
    }
    return gist_descriptor(resize_bilinear(img, kGistImageSize, kGistImageSize));
}

std::uint64_t dataset_identity(const Dataset& ds) {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (const auto& s : ds.samples) h = mix_seed(h, fnv1a64(s.id), s.byte_length);
    return h;
}

std::string checkpoint_name(int rep, const Cell& cell) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "rep%d_m%d_n%d.json", rep, cell.m, cell.n);
    return buf;
}

json unit_to_json(const UnitResult& unit, std::uint64_t config_hash,
                  std::size_t gallery_size, std::size_t test_size) {
    json j;
    j["config_hash"] = config_hash;
    j["gallery_size"] = gallery_size;
    j["test_size"] = test_size;
    j["samples"] = json::array();
    for (const auto& s : unit.samples) {
        j["samples"].push_back(
            {{"id", s.id}, {"truth", s.truth}, {"predicted", s.predicted}, {"scores", s.scores}});
    }
    j["audit"] = json::array();
    for (const auto& e : unit.audit) {
        j["audit"].push_back({{"sample", e.sample_id},
                              {"m", e.m},
                              {"n", e.n},
                              {"rep", e.repetition},
                              {"kind", e.kind},
                              {"detail", e.detail}});
    }
    return j;
}

bool unit_from_json(const json& j, std::uint64_t config_hash, UnitResult& unit,
                    std::size_t& gallery_size, std::size_t& test_size) {
    if (!j.contains("config_hash") || j["config_hash"].get<std::uint64_t>() != config_hash)
        return false;
    gallery_size = j.value("gallery_size", std::size_t{0});
    test_size = j.value("test_size", std::size_t{0});
    for (const auto& s : j["samples"]) {
        SampleResult r;
        r.id = s["id"].get<std::string>();
        r.truth = s["truth"].get<std::string>();
        r.predicted = s["predicted"].get<std::string>();
        for (const auto& [label, score] : s["scores"].items())
            r.scores[label] = score.get<double>();
        unit.samples.push_back(std::move(r));
    }
    for (const auto& e : j["audit"]) {
        unit.audit.push_back({e["sample"].get<std::string>(), e["m"].get<int>(),
                              e["n"].get<int>(), e["rep"].get<int>(),
                              e["kind"].get<std::string>(), e["detail"].get<std::string>()});
    }
    return true;
}

// Gallery descriptors plus the per-rep split, shared by every cell of one
// repetition.
struct RepContext {
    Split split;
    KnnIndex gallery;
    std::vector<AuditEvent> gallery_audit;
};

}  // namespace

const char* to_string(DefenseMode mode) {
    switch (mode) {
        case DefenseMode::kNone: return "none";
        case DefenseMode::kReorder: return "reorder";
        case DefenseMode::kInjectAugment: return "inject";
        case DefenseMode::kReorderPlusInject: return "reorder+inject";
    }
    return "?";
}

const char* to_string(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::kRandom: return "random";
        case PayloadKind::kAdversarial: return "adversarial";
    }
    return "?";
}

std::string scenario_tag(const ScenarioSpec& spec) {
    std::string defense = to_string(spec.defense);
    std::replace(defense.begin(), defense.end(), '+', '_');
    return std::string(to_string(spec.payload)) + "__" + defense + "__" +
           (spec.headerless ? "headerless" : "full");
}

const CellReport* GridReport::cell(int m, int n) const {
    for (const auto& c : cells)
        if (c.m == m && c.n == n) return &c;
    return nullptr;
}

std::string GridReport::config_json() const {
    json j;
    j["m_values"] = spec.m_values;
    j["n_values"] = spec.n_values;
    j["payload"] = to_string(spec.payload);
    j["defense"] = to_string(spec.defense);
    j["headerless"] = spec.headerless;
    j["repetitions"] = spec.repetitions;
    j["seed"] = spec.seed;
    j["split"] = {{"train", spec.split.train_fraction},
                  {"validation", spec.split.validation_fraction},
                  {"test", spec.split.test_fraction}};
    j["knn_k"] = spec.knn_k;
    j["augment_m"] = spec.augment_m;
    j["augment_n"] = spec.augment_n;
    j["gallery_size_per_rep"] = gallery_size_per_rep;
    j["test_size_per_rep"] = test_size_per_rep;
    return j.dump(2);
}

namespace {

std::vector<std::uint8_t> eval_form(const std::vector<std::uint8_t>& bytes, bool headerless,
                                    const PeFile* parsed) {
    if (headerless && parsed != nullptr) return strip_header(*parsed);
    return bytes;
}

RepContext build_rep_context(const Dataset& ds, const ScenarioSpec& spec, int rep) {
    RepContext ctx;
    SplitSpec split_spec = spec.split;
    split_spec.seed = mix_seed(spec.seed, fnv1a64("split"), static_cast<std::uint64_t>(rep));
    ctx.split = split_dataset(ds, split_spec);

    std::vector<Sample> gallery_samples = ctx.split.train;
    gallery_samples.insert(gallery_samples.end(), ctx.split.validation.begin(),
                           ctx.split.validation.end());

    const bool add_reorder = spec.defense == DefenseMode::kReorder ||
                             spec.defense == DefenseMode::kReorderPlusInject;
    const bool add_inject = spec.defense == DefenseMode::kInjectAugment ||
                            spec.defense == DefenseMode::kReorderPlusInject;

    struct Extracted {
        std::vector<std::pair<GistDescriptor, std::string>> entries;
        std::vector<AuditEvent> audit;
    };
    std::vector<Extracted> per_sample(gallery_samples.size());

    parallel_for(spec.jobs, gallery_samples.size(), [&](std::size_t i) {
        const Sample& sample = gallery_samples[i];
        Extracted& out = per_sample[i];
        const auto bytes = read_file(sample.path);

        PeFile parsed;
        bool have_parsed = false;
        try {
            parsed = parse_pe(bytes);
            have_parsed = true;
        } catch (const PeError& e) {
            out.audit.push_back({sample.id, -1, -1, rep, "unparseable", e.what()});
        }
        const PeFile* pf = have_parsed ? &parsed : nullptr;
        out.entries.emplace_back(descriptor_of_bytes(eval_form(bytes, spec.headerless, pf)),
                                 sample.family);

        if (add_reorder && have_parsed) {
            try {
                Rng rng(mix_seed(spec.seed, fnv1a64("reorder"), fnv1a64(sample.id),
                                 static_cast<std::uint64_t>(rep)));
                const PeFile reordered = reorder_sections(parsed, rng);
                const auto r_bytes = serialize_pe(reordered);
                out.entries.emplace_back(
                    descriptor_of_bytes(eval_form(r_bytes, spec.headerless, &reordered)),
                    sample.family);
            } catch (const Error& e) {
                out.audit.push_back({sample.id, -1, -1, rep, "defense-reorder-error", e.what()});
            }
        }
        if (add_inject && have_parsed) {
            try {
                InjectionConfig cfg;
                cfg.section_count = spec.augment_m;
                cfg.size_multiplier = spec.augment_n;
                cfg.payload = PayloadKind::kRandom;
                cfg.seed = mix_seed(spec.seed, fnv1a64("augment"), fnv1a64(sample.id),
                                    static_cast<std::uint64_t>(rep));
                auto [injected, record] = inject_sections(parsed, cfg, sample.family);
                const auto i_bytes = serialize_pe(injected);
                out.entries.emplace_back(
                    descriptor_of_bytes(eval_form(i_bytes, spec.headerless, &injected)),
                    sample.family);
            } catch (const Error& e) {
                out.audit.push_back({sample.id, -1, -1, rep, "defense-inject-error", e.what()});
            }
        }
    });

    for (auto& ex : per_sample) {
        for (auto& [desc, label] : ex.entries) ctx.gallery.add(desc, label);
        ctx.gallery_audit.insert(ctx.gallery_audit.end(), ex.audit.begin(), ex.audit.end());
    }
    return ctx;
}

UnitResult evaluate_cell(const RepContext& ctx, const Dataset& ds, const ScenarioSpec& spec,
                         int rep, const Cell& cell) {
    UnitResult unit;
    const bool baseline = cell.m == 0 && cell.n == 0;
    const auto families = ds.families();

    for (const auto& sample : ctx.split.test) {
        const auto bytes = read_file(sample.path);

        PeFile parsed;
        bool have_parsed = false;
        try {
            parsed = parse_pe(bytes);
            have_parsed = true;
        } catch (const PeError& e) {
            unit.audit.push_back({sample.id, cell.m, cell.n, rep, "unparseable", e.what()});
        }

        std::vector<std::uint8_t> eval_bytes;
        if (!baseline && have_parsed) {
            try {
                InjectionConfig cfg;
                cfg.section_count = cell.m;
                cfg.size_multiplier = cell.n;
                cfg.payload = spec.payload;
                cfg.seed = mix_seed(spec.seed, fnv1a64("inject"), fnv1a64(sample.id),
                                    static_cast<std::uint64_t>(cell.m),
                                    static_cast<std::uint64_t>(cell.n),
                                    static_cast<std::uint64_t>(rep));
                if (spec.payload == PayloadKind::kAdversarial) {
                    Rng donor_rng(mix_seed(cfg.seed, fnv1a64("donor")));
                    std::vector<std::string> others;
                    for (const auto& f : families)
                        if (f != sample.family) others.push_back(f);
                    const std::string donor_family = others[donor_rng.bounded(others.size())];
                    std::vector<const Sample*> pool;
                    for (const auto& t : ctx.split.train)
                        if (t.family == donor_family) pool.push_back(&t);
                    const Sample* donor = pool[donor_rng.bounded(pool.size())];
                    cfg.donor = read_file(donor->path);
                    cfg.donor_family = donor_family;
                }
                auto [injected, record] = inject_sections(parsed, cfg, sample.family);
                eval_bytes = spec.headerless ? strip_header(injected) : serialize_pe(injected);
                unit.audit.push_back({sample.id, cell.m, cell.n, rep, "injected",
                                      std::to_string(record.payload_bytes_total) +
                                          " payload bytes in " +
                                          std::to_string(record.sections.size()) + " sections"});
            } catch (const Error& e) {
                // Score the unmodified form; the event is the record.
                unit.audit.push_back(
                    {sample.id, cell.m, cell.n, rep, "injection-error", e.what()});
                eval_bytes = eval_form(bytes, spec.headerless, &parsed);
            }
        } else {
            eval_bytes = eval_form(bytes, spec.headerless, have_parsed ? &parsed : nullptr);
        }

        const GistDescriptor desc = descriptor_of_bytes(eval_bytes);
        const Prediction pred = knn_classify(ctx.gallery, desc, spec.knn_k);
        unit.samples.push_back({sample.id, sample.family, pred.label, pred.scores});
    }
    return unit;
}

}  // namespace

GridReport run_grid(const Dataset& ds, const ScenarioSpec& spec,
                    const std::string& checkpoint_dir, ProgressFn progress) {
    if (ds.families().size() < 2)
        throw DatasetError(DatasetErrc::kNoFamiliesFound,
                           "classification needs at least 2 families");
    if (spec.repetitions < 1)
        throw DatasetError(DatasetErrc::kBadSplitSpec, "repetitions must be >= 1");

    GridReport report;
    report.spec = spec;

    std::vector<Cell> cells;
    cells.push_back({0, 0});
    for (int m : spec.m_values)
        for (int n : spec.n_values) cells.push_back({m, n});

    const std::uint64_t config_hash =
        mix_seed(fnv1a64(report.config_json()), dataset_identity(ds));
    if (!checkpoint_dir.empty()) fs::create_directories(checkpoint_dir);

    // unit_results[rep][cell_index]
    std::vector<std::vector<UnitResult>> unit_results(
        spec.repetitions, std::vector<UnitResult>(cells.size()));

    for (int rep = 0; rep < spec.repetitions; ++rep) {
        std::vector<std::size_t> pending;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            bool loaded = false;
            if (!checkpoint_dir.empty()) {
                const fs::path path = fs::path(checkpoint_dir) / checkpoint_name(rep, cells[ci]);
                std::ifstream in(path);
                if (in) {
                    try {
                        json j = json::parse(in);
                        UnitResult unit;
                        std::size_t gallery_size = 0, test_size = 0;
                        if (unit_from_json(j, config_hash, unit, gallery_size, test_size)) {
                            unit_results[rep][ci] = std::move(unit);
                            if (gallery_size > 0) report.gallery_size_per_rep = gallery_size;
                            if (test_size > 0) report.test_size_per_rep = test_size;
                            loaded = true;
                        }
                    } catch (const json::exception&) {
                        loaded = false;  // corrupt checkpoint, recompute
                    }
                }
            }
            if (!loaded) pending.push_back(ci);
        }

        if (pending.empty()) {
            if (progress) progress("rep " + std::to_string(rep) + ": all cells checkpointed");
            continue;
        }

        const RepContext ctx = build_rep_context(ds, spec, rep);
        report.gallery_size_per_rep = ctx.gallery.size();
        report.test_size_per_rep = ctx.split.test.size();
        for (const auto& e : ctx.gallery_audit) report.audit.push_back(e);
        if (progress)
            progress("rep " + std::to_string(rep) + ": gallery " +
                     std::to_string(ctx.gallery.size()) + " entries, " +
                     std::to_string(pending.size()) + " cells to evaluate");

        parallel_for(spec.jobs, pending.size(), [&](std::size_t pi) {
            const std::size_t ci = pending[pi];
            UnitResult unit = evaluate_cell(ctx, ds, spec, rep, cells[ci]);
            if (!checkpoint_dir.empty()) {
                const fs::path path = fs::path(checkpoint_dir) / checkpoint_name(rep, cells[ci]);
                std::ofstream out(path, std::ios::trunc);
                out << unit_to_json(unit, config_hash, ctx.gallery.size(), ctx.split.test.size())
                           .dump(1)
                    << "\n";
            }
            unit_results[rep][ci] = std::move(unit);
        });
    }

    // Deterministic aggregation: cells in declaration order, reps ascending.
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        CellReport cr;
        cr.m = cells[ci].m;
        cr.n = cells[ci].n;

        std::vector<std::string> truth_all, predicted_all;
        std::vector<ScoredSample> scored;
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            const UnitResult& unit = unit_results[rep][ci];
            std::size_t correct = 0;
            for (const auto& s : unit.samples) {
                truth_all.push_back(s.truth);
                predicted_all.push_back(s.predicted);
                scored.push_back({"rep" + std::to_string(rep) + ":" + s.id, s.truth, s.scores});
                if (s.predicted == s.truth) ++correct;
            }
            cr.accuracy_per_rep.push_back(
                unit.samples.empty() ? 0.0
                                     : static_cast<double>(correct) / unit.samples.size());
            for (const auto& e : unit.audit) report.audit.push_back(e);
        }
        cr.confusion = confusion_matrix(truth_all, predicted_all);
        // Every repetition scores the same number of samples, so the
        // accumulated trace/total is the mean over repetitions, computed
        // once so it is exactly reproducible from the stored matrix.
        cr.mean_accuracy = cr.confusion.accuracy();
        PrResult pr = precision_recall(scored);
        cr.pr_curves = std::move(pr.curves);
        cr.macro_average_precision = pr.macro_average_precision;
        report.cells.push_back(std::move(cr));
    }
    return report;
}

void write_reports(const GridReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string tag = scenario_tag(report.spec);

    {
        std::ofstream out(fs::path(out_dir) / ("accuracy__" + tag + ".csv"), std::ios::trunc);
        out << "m,n,repetition,accuracy\n";
        out << std::setprecision(10) << std::fixed;
        for (const auto& cell : report.cells)
            for (std::size_t rep = 0; rep < cell.accuracy_per_rep.size(); ++rep)
                out << cell.m << "," << cell.n << "," << rep << ","
                    << cell.accuracy_per_rep[rep] << "\n";
    }

    for (const auto& cell : report.cells) {
        const std::string cell_tag =
            "m" + std::to_string(cell.m) + "_n" + std::to_string(cell.n);
        {
            std::ofstream out(
                fs::path(out_dir) / ("confusion__" + tag + "__" + cell_tag + ".csv"),
                std::ios::trunc);
            out << cell.confusion.to_csv();
        }
        {
            std::ofstream out(fs::path(out_dir) / ("pr__" + tag + "__" + cell_tag + ".csv"),
                              std::ios::trunc);
            out << "family,recall,precision\n";
            out << std::setprecision(10) << std::fixed;
            for (const auto& curve : cell.pr_curves)
                for (const auto& p : curve.points)
                    out << curve.family << "," << p.recall << "," << p.precision << "\n";
        }
    }

    {
        json summary;
        summary["config"] = json::parse(report.config_json());
        summary["scenario_tag"] = tag;
        summary["cells"] = json::array();
        for (const auto& cell : report.cells) {
            json c;
            c["m"] = cell.m;
            c["n"] = cell.n;
            c["accuracy_per_rep"] = cell.accuracy_per_rep;
            c["mean_accuracy"] = cell.mean_accuracy;
            c["macro_average_precision"] = cell.macro_average_precision;
            summary["cells"].push_back(c);
        }
        summary["audit"] = json::array();
        for (const auto& e : report.audit) {
            summary["audit"].push_back({{"sample", e.sample_id},
                                        {"m", e.m},
                                        {"n", e.n},
                                        {"rep", e.repetition},
                                        {"kind", e.kind},
                                        {"detail", e.detail}});
        }
        std::ofstream out(fs::path(out_dir) / ("summary__" + tag + ".json"), std::ios::trunc);
        out << summary.dump(2) << "\n";
    }
}

}  // namespace sectlab
