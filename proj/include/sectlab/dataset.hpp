#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sectlab/errors.hpp"

namespace sectlab {

enum class DatasetErrc {
    kNoFamiliesFound,
    kFamilyTooSmall,
    kBadSplitSpec,
};

class DatasetError : public Error {
public:
    DatasetError(DatasetErrc code, const std::string& msg) : Error(msg), code_(code) {}
    DatasetErrc code() const { return code_; }

private:
    DatasetErrc code_;
};

struct Sample {
    std::string id;      // "<family>/<filename>", unique within a dataset
    std::string family;  // directory name the file came from
    std::string path;
    std::uint64_t byte_length = 0;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> warnings;

    std::vector<std::string> families() const;
};

// One subdirectory per family, every regular file inside is a sample.
// Unreadable entries are skipped with a warning; empty families dropped.
Dataset load_dataset(const std::string& root);

struct SplitSpec {
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
};

// Stratified per family: seeded shuffle, train cut at round-half-up of the
// train fraction, test at round-half-up of its share of the remainder,
// validation takes the rest.
Split split_dataset(const Dataset& ds, const SplitSpec& spec);

}  // namespace sectlab
