#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sectlab/dataset.hpp"
#include "sectlab/pe.hpp"

namespace sectlab {

// Desk-scale stand-in corpus: valid, strictly aligned PE32 files whose byte
// textures differ per family strongly enough for GIST+KNN to separate them.
// Files keep >= 400 bytes of header slack so injection experiments never
// run out of room for new section headers.

// One synthetic executable; family_index selects the texture archetype,
// file_index varies size and noise within the family.
std::vector<std::uint8_t> synth_pe_bytes(int family_index, int file_index, std::uint64_t seed);

// Writes `families` x `per_family` files under root/family_<f>/ and returns
// the loaded Dataset. Deterministic in (families, per_family, seed).
Dataset synth_corpus(const std::string& root, int families, int per_family, std::uint64_t seed);

}  // namespace sectlab
