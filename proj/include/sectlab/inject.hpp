#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sectlab/errors.hpp"
#include "sectlab/pe.hpp"
#include "sectlab/rng.hpp"

namespace sectlab {

enum class InjectErrc {
    kInsufficientHeaderSlack,
    kAdversarialDonorSameFamily,
    kTooFewSections,
    kBadConfig,
};

class InjectError : public Error {
public:
    InjectError(InjectErrc code, const std::string& msg) : Error(msg), code_(code) {}
    InjectErrc code() const { return code_; }

private:
    InjectErrc code_;
};

const char* to_string(InjectErrc code);

enum class PayloadKind { kRandom, kAdversarial };

struct InjectionConfig {
    int section_count = 1;    // m
    int size_multiplier = 1;  // n; each section carries n * FileAlignment payload bytes
    PayloadKind payload = PayloadKind::kRandom;
    std::uint64_t seed = 0;
    // Adversarial payloads copy bytes from a donor of another family.
    std::vector<std::uint8_t> donor;
    std::string donor_family;
};

struct InjectedSection {
    std::size_t index = 0;  // insertion index k in the table at injection time
    std::array<std::uint8_t, 8> name{};
    std::uint64_t file_offset = 0;
    std::uint32_t raw_size = 0;
    std::uint32_t rva = 0;
};

struct InjectionRecord {
    std::vector<InjectedSection> sections;
    std::uint64_t payload_bytes_total = 0;

    std::string to_json() const;
};

// Smallest FileAlignment multiple that holds n_bytes.
std::uint32_t compute_raw_size(std::uint32_t n_bytes, std::uint32_t file_alignment);

// SectionAlignment-aligned RVA just past the section that sits last in
// memory (largest VirtualAddress, not necessarily last in the table).
std::uint32_t compute_virtual_address(const PeFile& file);

// Uniform draw of an insertion slot in [0, NumberOfSections]. Slots whose
// following section has a FileAlignment-violating raw pointer are excluded;
// appending at the end is always admissible.
std::size_t choose_insertion_index(const PeFile& file, Rng& rng);

// Eight independent uniform draws from the printable ASCII range [33, 126].
std::array<std::uint8_t, 8> make_section_name(Rng& rng);

std::vector<std::uint8_t> payload_random(std::size_t length, Rng& rng);

// Contiguous chunk of the donor starting at a uniform offset, wrapping
// cyclically when the donor is shorter than the requested length.
std::vector<std::uint8_t> payload_adversarial(std::span<const std::uint8_t> donor,
                                              std::size_t length, Rng& rng);

// The attack: m single-section injections, each inserting a read-only
// initialized-data section with n * FileAlignment payload bytes at a random
// admissible table position. Original section payloads are never altered,
// only relocated on disk.
std::pair<PeFile, InjectionRecord> inject_sections(const PeFile& file,
                                                   const InjectionConfig& config,
                                                   const std::string& victim_family = {});

// Defense-side augmentation: permutes the on-disk placement of section raw
// data; memory layout and table order stay fixed.
PeFile reorder_sections(const PeFile& file, Rng& rng);

// Concatenated section raw data in on-disk order; headers and overlay dropped.
std::vector<std::uint8_t> strip_header(const PeFile& file);

}  // namespace sectlab
