#include "sectlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "sectlab/bytes.hpp"
#include "sectlab/rng.hpp"

namespace fs = std::filesystem;

namespace sectlab {

std::vector<std::string> Dataset::families() const {
    std::vector<std::string> out;
    for (const auto& s : samples)
        if (std::find(out.begin(), out.end(), s.family) == out.end()) out.push_back(s.family);
    std::sort(out.begin(), out.end());
    return out;
}

Dataset load_dataset(const std::string& root) {
    Dataset ds;
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw DatasetError(DatasetErrc::kNoFamiliesFound, "not a directory: " + root);

    std::vector<std::string> family_dirs;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory(ec)) family_dirs.push_back(entry.path().filename().string());
    }
    std::sort(family_dirs.begin(), family_dirs.end());

    for (const auto& family : family_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(fs::path(root) / family, ec)) {
            files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        std::size_t added = 0;
        for (const auto& path : files) {
            std::error_code fec;
            if (!fs::is_regular_file(path, fec) || fec) {
                ds.warnings.push_back("skipped non-regular or unreadable entry " + path.string());
                continue;
            }
            const auto size = fs::file_size(path, fec);
            if (fec) {
                ds.warnings.push_back("skipped unreadable file " + path.string());
                continue;
            }
            Sample s;
            s.id = family + "/" + path.filename().string();
            s.family = family;
            s.path = path.string();
            s.byte_length = size;
            ds.samples.push_back(std::move(s));
            ++added;
        }
        if (added == 0) ds.warnings.push_back("dropped empty family " + family);
    }

    if (ds.samples.empty())
        throw DatasetError(DatasetErrc::kNoFamiliesFound, "no family directories with files under " + root);
    return ds;
}

namespace {

std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

}  // namespace

Split split_dataset(const Dataset& ds, const SplitSpec& spec) {
    if (spec.train_fraction <= 0 || spec.validation_fraction <= 0 || spec.test_fraction <= 0)
        throw DatasetError(DatasetErrc::kBadSplitSpec, "fractions must be positive");
    const double total = spec.train_fraction + spec.validation_fraction + spec.test_fraction;
    if (std::abs(total - 1.0) > 1e-9)
        throw DatasetError(DatasetErrc::kBadSplitSpec, "fractions must sum to 1");

    std::map<std::string, std::vector<Sample>> by_family;
    for (const auto& s : ds.samples) by_family[s.family].push_back(s);

    Split split;
    for (auto& [family, members] : by_family) {
        if (members.size() < 3)
            throw DatasetError(DatasetErrc::kFamilyTooSmall,
                               "family " + family + " has " + std::to_string(members.size()) +
                                   " samples, need at least 3");
        Rng rng(mix_seed(spec.seed, fnv1a64(family)));
        for (std::size_t i = members.size() - 1; i > 0; --i)
            std::swap(members[i], members[rng.bounded(i + 1)]);

        const std::size_t n = members.size();
        std::size_t n_train = round_half_up(n * spec.train_fraction);
        n_train = std::min(n_train, n - 1);  // never swallow the whole family
        const std::size_t rest = n - n_train;
        const double test_share = spec.test_fraction / (spec.test_fraction + spec.validation_fraction);
        std::size_t n_test = round_half_up(rest * test_share);
        n_test = std::min(n_test, rest);
        const std::size_t n_val = rest - n_test;

        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                split.train.push_back(members[i]);
            else if (i < n_train + n_val)
                split.validation.push_back(members[i]);
            else
                split.test.push_back(members[i]);
        }
    }
    return split;
}

}  // namespace sectlab
