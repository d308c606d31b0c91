#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sectlab/dataset.hpp"
#include "sectlab/experiment.hpp"
#include "sectlab/gist.hpp"
#include "sectlab/image.hpp"
#include "sectlab/inject.hpp"
#include "sectlab/knn.hpp"
#include "sectlab/pe.hpp"
#include "sectlab/plot.hpp"
#include "sectlab/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sectlab;

namespace {

constexpr const char* kOutRootEnv = "SECTLAB_OUT_ROOT";

// Argument-level failures that CLI11 itself cannot catch (exit code 4).
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

void emit_error(const std::string& kind, const std::string& message) {
    json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << "\n";
}

// Honors the single supported environment override: relative output paths
// are rooted at $SECTLAB_OUT_ROOT when it is set.
std::string resolve_out(const std::string& path) {
    const char* root = std::getenv(kOutRootEnv);
    if (root == nullptr || *root == '\0') return path;
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(root) / p).string();
}

void write_config_echo(const CLI::App& root, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out << root.config_to_str(true, true);
}

PayloadKind parse_payload(const std::string& name) {
    if (name == "random") return PayloadKind::kRandom;
    if (name == "adversarial") return PayloadKind::kAdversarial;
    throw UsageError("unknown payload kind: " + name);
}

DefenseMode parse_defense(const std::string& name) {
    if (name == "none") return DefenseMode::kNone;
    if (name == "reorder") return DefenseMode::kReorder;
    if (name == "inject") return DefenseMode::kInjectAugment;
    if (name == "reorder+inject" || name == "reorder_inject")
        return DefenseMode::kReorderPlusInject;
    throw UsageError("unknown defense mode: " + name);
}

struct InjectArgs {
    std::string in, out, payload = "random", donor, donor_family, victim_family;
    int m = 1, n = 1;
    std::uint64_t seed = 0;
};

int cmd_inject(const CLI::App& root, const InjectArgs& args) {
    const PayloadKind kind = parse_payload(args.payload);
    if (kind == PayloadKind::kAdversarial && args.donor.empty())
        throw UsageError("--payload adversarial requires --donor");

    const auto input = read_file(args.in);
    const PeFile file = parse_pe(input);

    InjectionConfig cfg;
    cfg.section_count = args.m;
    cfg.size_multiplier = args.n;
    cfg.payload = kind;
    cfg.seed = args.seed;
    if (kind == PayloadKind::kAdversarial) {
        cfg.donor = read_file(args.donor);
        cfg.donor_family = args.donor_family;
    }

    auto [injected, record] = inject_sections(file, cfg, args.victim_family);
    const auto out_bytes = serialize_pe(injected);
    const std::string out_path = resolve_out(args.out);
    write_file(out_path, out_bytes);

    std::ofstream rec(out_path + ".record.json", std::ios::trunc);
    rec << record.to_json() << "\n";
    write_config_echo(root, out_path + ".config.toml");

    std::cout << out_path << ": +" << (out_bytes.size() - input.size()) << " bytes, "
              << record.sections.size() << " sections injected\n";
    return 0;
}

struct RenderArgs {
    std::string in, out;
};

int cmd_render(const CLI::App& root, const RenderArgs& args) {
    const auto bytes = read_file(args.in);
    const GrayImage img = bytes_to_image(bytes);
    const std::string out_path = resolve_out(args.out);
    write_pgm(out_path, img);
    write_config_echo(root, out_path + ".config.toml");
    std::cout << out_path << ": " << img.width << "x" << img.height << "\n";
    return 0;
}

struct SynthArgs {
    std::string out;
    int families = 5, per_family = 20;
    std::uint64_t seed = 1;
};

int cmd_synth(const CLI::App& root, const SynthArgs& args) {
    const std::string out_dir = resolve_out(args.out);
    const Dataset ds = synth_corpus(out_dir, args.families, args.per_family, args.seed);
    write_config_echo(root, (fs::path(out_dir) / "config.toml").string());
    std::cout << out_dir << ": " << ds.samples.size() << " samples in "
              << ds.families().size() << " families\n";
    return 0;
}

struct IndexArgs {
    std::string data, out, csv;
    bool headerless = false;
};

GistDescriptor descriptor_for_file(const std::string& path, bool headerless) {
    auto bytes = read_file(path);
    if (headerless) bytes = strip_header(parse_pe(bytes));
    return gist_descriptor(resize_bilinear(bytes_to_image(bytes), kGistImageSize, kGistImageSize));
}

int cmd_index(const CLI::App& root, const IndexArgs& args) {
    const Dataset ds = load_dataset(args.data);
    KnnIndex index;
    for (const auto& s : ds.samples) index.add(descriptor_for_file(s.path, args.headerless), s.family);
    const std::string out_path = resolve_out(args.out);
    index.save(out_path);
    if (!args.csv.empty()) index.export_csv(resolve_out(args.csv));
    write_config_echo(root, out_path + ".config.toml");
    std::cout << out_path << ": " << index.size() << " gallery entries, "
              << index.labels().size() << " families\n";
    return 0;
}

struct ClassifyArgs {
    std::string gallery, in;
    int k = 3;
    bool headerless = false;
};

int cmd_classify(const CLI::App& root, const ClassifyArgs& args) {
    const KnnIndex index = KnnIndex::load(args.gallery);
    const Prediction pred =
        knn_classify(index, descriptor_for_file(args.in, args.headerless), args.k);
    json out;
    out["input"] = args.in;
    out["predicted"] = pred.label;
    out["scores"] = pred.scores;
    out["config"] = root.config_to_str(true, true);
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string data, out, grid = "5x5", payload = "random", defense = "none";
    std::vector<int> m_values, n_values;  // explicit cell lists override --grid
    bool headerless = false;
    int reps = 3, k = 3, jobs = 1;
    std::uint64_t seed = 0;
    double split_train = 0.8, split_val = 0.1, split_test = 0.1;
    bool verbose = false;
};

std::pair<int, int> parse_grid(const std::string& grid) {
    const auto x = grid.find('x');
    if (x == std::string::npos) throw UsageError("--grid expects MxN, e.g. 5x5");
    const int m = std::stoi(grid.substr(0, x));
    const int n = std::stoi(grid.substr(x + 1));
    if (m < 1 || n < 1) throw UsageError("--grid dimensions must be >= 1");
    return {m, n};
}

int cmd_evaluate(const CLI::App& root, const EvaluateArgs& args) {
    const auto [gm, gn] = parse_grid(args.grid);
    ScenarioSpec spec;
    spec.m_values.clear();
    spec.n_values.clear();
    for (int m = 1; m <= gm; ++m) spec.m_values.push_back(m);
    for (int n = 1; n <= gn; ++n) spec.n_values.push_back(n);
    if (!args.m_values.empty()) spec.m_values = args.m_values;
    if (!args.n_values.empty()) spec.n_values = args.n_values;
    for (int v : spec.m_values)
        if (v < 1) throw UsageError("m values must be >= 1");
    for (int v : spec.n_values)
        if (v < 1) throw UsageError("n values must be >= 1");
    spec.payload = parse_payload(args.payload);
    spec.defense = parse_defense(args.defense);
    spec.headerless = args.headerless;
    spec.repetitions = args.reps;
    spec.seed = args.seed;
    spec.split = {args.split_train, args.split_val, args.split_test, args.seed};
    spec.knn_k = args.k;
    spec.jobs = args.jobs;

    const Dataset ds = load_dataset(args.data);
    const std::string out_dir = resolve_out(args.out);
    fs::create_directories(out_dir);
    write_config_echo(root, (fs::path(out_dir) / "config.toml").string());

    ProgressFn progress;
    if (args.verbose) progress = [](const std::string& msg) { std::cerr << msg << "\n"; };

    const GridReport report =
        run_grid(ds, spec, (fs::path(out_dir) / "checkpoint").string(), progress);
    write_reports(report, out_dir);

    std::cout << out_dir << ": " << report.cells.size() << " cells x " << spec.repetitions
              << " reps, gallery " << report.gallery_size_per_rep << ", test "
              << report.test_size_per_rep << " per rep\n";
    return 0;
}

struct ReportArgs {
    std::string in, out;
};

struct GridCsv {
    // (m, n) -> accuracies per rep
    std::map<std::pair<int, int>, std::vector<double>> cells;

    double mean(int m, int n) const {
        const auto it = cells.find({m, n});
        if (it == cells.end() || it->second.empty()) return -1.0;
        double sum = 0.0;
        for (double a : it->second) sum += a;
        return sum / it->second.size();
    }
};

GridCsv read_accuracy_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    GridCsv grid;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        const int m = std::stoi(field);
        std::getline(row, field, ',');
        const int n = std::stoi(field);
        std::getline(row, field, ',');  // repetition
        std::getline(row, field, ',');
        grid.cells[{m, n}].push_back(std::stod(field));
    }
    return grid;
}

int cmd_report(const CLI::App& root, const ReportArgs& args) {
    const std::string out_dir = resolve_out(args.out.empty() ? args.in : args.out);
    fs::create_directories(out_dir);

    bool found = false;
    for (const auto& entry : fs::directory_iterator(args.in)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("accuracy__", 0) != 0 || entry.path().extension() != ".csv") continue;
        found = true;
        const std::string tag = name.substr(10, name.size() - 10 - 4);
        const GridCsv grid = read_accuracy_csv(entry.path());

        std::vector<int> ms, ns;
        for (const auto& [cell, _] : grid.cells) {
            if (cell.first > 0 && std::find(ms.begin(), ms.end(), cell.first) == ms.end())
                ms.push_back(cell.first);
            if (cell.second > 0 && std::find(ns.begin(), ns.end(), cell.second) == ns.end())
                ns.push_back(cell.second);
        }
        std::sort(ms.begin(), ms.end());
        std::sort(ns.begin(), ns.end());

        std::ostringstream table;
        table << "scenario: " << tag << "\n";
        char buf[64];
        if (grid.mean(0, 0) >= 0) {
            std::snprintf(buf, sizeof(buf), "baseline (no injection) mean accuracy: %.4f\n",
                          grid.mean(0, 0));
            table << buf;
        }
        table << "mean accuracy per cell:\n      ";
        for (int n : ns) {
            std::snprintf(buf, sizeof(buf), "n=%-6d", n);
            table << buf;
        }
        table << "\n";
        for (int m : ms) {
            std::snprintf(buf, sizeof(buf), "m=%-4d", m);
            table << buf;
            for (int n : ns) {
                std::snprintf(buf, sizeof(buf), "%.4f  ", grid.mean(m, n));
                table << buf;
            }
            table << "\n";
        }
        // Same payload total, different dispersion: the spread-out attack
        // versus the single-blob attack.
        if (grid.mean(4, 1) >= 0 && grid.mean(1, 4) >= 0) {
            std::snprintf(buf, sizeof(buf), "dispersion: acc(m=4,n=1)=%.4f vs acc(m=1,n=4)=%.4f\n",
                          grid.mean(4, 1), grid.mean(1, 4));
            table << buf;
        }
        if (grid.mean(5, 5) >= 0) {
            std::snprintf(buf, sizeof(buf), "strongest attack: acc(m=5,n=5)=%.4f\n",
                          grid.mean(5, 5));
            table << buf;
        }

        std::ofstream txt(fs::path(out_dir) / ("table__" + tag + ".txt"), std::ios::trunc);
        txt << table.str();
        std::cout << table.str();

        static const std::array<std::array<std::uint8_t, 3>, 6> kPalette{{{0x88, 0x88, 0x88},
                                                                          {0xd6, 0x27, 0x28},
                                                                          {0x1f, 0x77, 0xb4},
                                                                          {0x2c, 0xa0, 0x2c},
                                                                          {0xff, 0x7f, 0x0e},
                                                                          {0x94, 0x67, 0xbd}}};
        std::vector<PlotSeries> series;
        if (grid.mean(0, 0) >= 0 && !ns.empty()) {
            PlotSeries base;
            base.name = "m=0";
            base.color = kPalette[0];
            for (int n : ns) {
                base.x.push_back(n);
                base.y.push_back(grid.mean(0, 0));
            }
            series.push_back(std::move(base));
        }
        for (std::size_t i = 0; i < ms.size(); ++i) {
            PlotSeries s;
            s.name = "m=" + std::to_string(ms[i]);
            s.color = kPalette[1 + i % 5];
            for (int n : ns) {
                s.x.push_back(n);
                s.y.push_back(grid.mean(ms[i], n));
            }
            series.push_back(std::move(s));
        }
        write_line_plot((fs::path(out_dir) / ("accuracy__" + tag + ".ppm")).string(), series,
                        "n", "accuracy");
    }
    if (!found) throw IoError("no accuracy__*.csv files under " + args.in);
    write_config_echo(root, (fs::path(out_dir) / "report_config.toml").string());
    return 0;
}

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        emit_error("BadArguments", e.what());
        return 4;
    } catch (const InjectError& e) {
        emit_error(to_string(e.code()), e.what());
        return e.code() == InjectErrc::kInsufficientHeaderSlack ? 3 : 4;
    } catch (const PeError& e) {
        emit_error(to_string(e.code()), e.what());
        return 2;
    } catch (const KnnError& e) {
        emit_error("Knn", e.what());
        return e.code() == KnnErrc::kBadArgument ? 4 : 2;
    } catch (const DatasetError& e) {
        emit_error("Dataset", e.what());
        return e.code() == DatasetErrc::kBadSplitSpec ? 4 : 2;
    } catch (const Error& e) {
        emit_error("Input", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error("Internal", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PE32 section injection, byte-image rendering, GIST+KNN family "
                 "classification and the attack/defense experiment grid"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Read options from a TOML config file (echoed by every run)");

    InjectArgs inject_args;
    auto* inject_cmd = app.add_subcommand("inject", "Inject sections into a PE32 file");
    inject_cmd->add_option("--in", inject_args.in, "Input PE32 file")->required()->capture_default_str();
    inject_cmd->add_option("--out", inject_args.out, "Output file")->required()->capture_default_str();
    inject_cmd->add_option("--m", inject_args.m, "Number of sections to inject")->capture_default_str();
    inject_cmd->add_option("--n", inject_args.n, "Payload size multiplier (n x FileAlignment)")->capture_default_str();
    inject_cmd->add_option("--payload", inject_args.payload, "random | adversarial")->capture_default_str();
    inject_cmd->add_option("--donor", inject_args.donor, "Donor file for adversarial payloads")->capture_default_str();
    inject_cmd->add_option("--donor-family", inject_args.donor_family, "Donor family label")->capture_default_str();
    inject_cmd->add_option("--victim-family", inject_args.victim_family, "Victim family label")->capture_default_str();
    inject_cmd->add_option("--seed", inject_args.seed, "RNG seed")->capture_default_str();

    RenderArgs render_args;
    auto* render_cmd = app.add_subcommand("render", "Render a file as a grayscale PGM image");
    render_cmd->add_option("--in", render_args.in, "Input file")->required()->capture_default_str();
    render_cmd->add_option("--out", render_args.out, "Output PGM path")->required()->capture_default_str();

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic PE32 corpus");
    synth_cmd->add_option("--out", synth_args.out, "Corpus root directory")->required()->capture_default_str();
    synth_cmd->add_option("--families", synth_args.families, "Number of families")->capture_default_str();
    synth_cmd->add_option("--per-family", synth_args.per_family, "Files per family")->capture_default_str();
    synth_cmd->add_option("--seed", synth_args.seed, "RNG seed")->capture_default_str();

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "Build and persist a KNN gallery");
    index_cmd->add_option("--data", index_args.data, "Dataset root (family directories)")
        ->required()->capture_default_str();
    index_cmd->add_option("--out", index_args.out, "Gallery output file")->required()->capture_default_str();
    index_cmd->add_option("--csv", index_args.csv, "Optional CSV export path")->capture_default_str();
    index_cmd->add_flag("--headerless", index_args.headerless, "Strip headers before imaging")->capture_default_str();

    ClassifyArgs classify_args;
    auto* classify_cmd = app.add_subcommand("classify", "Classify one file against a gallery");
    classify_cmd->add_option("--gallery", classify_args.gallery, "Gallery file")->required()->capture_default_str();
    classify_cmd->add_option("--in", classify_args.in, "File to classify")->required()->capture_default_str();
    classify_cmd->add_option("--k", classify_args.k, "Neighbor count")->capture_default_str();
    classify_cmd->add_flag("--headerless", classify_args.headerless,
                           "Strip headers before imaging")->capture_default_str();

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Run the attack/defense scenario grid");
    eval_cmd->add_option("--data", eval_args.data, "Dataset root")->required()->capture_default_str();
    eval_cmd->add_option("--out", eval_args.out, "Report output directory")->required()->capture_default_str();
    eval_cmd->add_option("--grid", eval_args.grid, "Grid extent MxN (m,n sweep 1..M x 1..N)")->capture_default_str();
    eval_cmd->add_option("--m-values", eval_args.m_values,
                         "Explicit m cell list, overrides --grid")->capture_default_str();
    eval_cmd->add_option("--n-values", eval_args.n_values,
                         "Explicit n cell list, overrides --grid")->capture_default_str();
    eval_cmd->add_option("--reps", eval_args.reps, "Repetitions per cell")->capture_default_str();
    eval_cmd->add_option("--payload", eval_args.payload, "random | adversarial")->capture_default_str();
    eval_cmd->add_option("--defense", eval_args.defense,
                         "none | reorder | inject | reorder+inject")->capture_default_str();
    eval_cmd->add_flag("--headerless", eval_args.headerless, "Strip headers before imaging")->capture_default_str();
    eval_cmd->add_option("--seed", eval_args.seed, "Master seed")->capture_default_str();
    eval_cmd->add_option("--k", eval_args.k, "KNN neighbor count")->capture_default_str();
    eval_cmd->add_option("--jobs", eval_args.jobs, "Parallel workers")->capture_default_str();
    eval_cmd->add_option("--split-train", eval_args.split_train, "Train fraction")->capture_default_str();
    eval_cmd->add_option("--split-val", eval_args.split_val, "Validation fraction")->capture_default_str();
    eval_cmd->add_option("--split-test", eval_args.split_test, "Test fraction")->capture_default_str();
    eval_cmd->add_flag("-v,--verbose", eval_args.verbose, "Progress to stderr")->capture_default_str();

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Render stored CSV grids as tables/plots");
    report_cmd->add_option("--in", report_args.in, "Directory with accuracy__*.csv")->required()->capture_default_str();
    report_cmd->add_option("--out", report_args.out, "Output directory (defaults to --in)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("BadArguments", e.what());
        return 4;
    }

    if (inject_cmd->parsed()) return dispatch([&] { return cmd_inject(app, inject_args); });
    if (render_cmd->parsed()) return dispatch([&] { return cmd_render(app, render_args); });
    if (synth_cmd->parsed()) return dispatch([&] { return cmd_synth(app, synth_args); });
    if (index_cmd->parsed()) return dispatch([&] { return cmd_index(app, index_args); });
    if (classify_cmd->parsed())
        return dispatch([&] { return cmd_classify(app, classify_args); });
    if (eval_cmd->parsed()) return dispatch([&] { return cmd_evaluate(app, eval_args); });
    if (report_cmd->parsed()) return dispatch([&] { return cmd_report(app, report_args); });
    return 4;
}
