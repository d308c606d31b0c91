#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sectlab/bytes.hpp"
#include "sectlab/errors.hpp"

namespace sectlab {

// Lossless PE32 decomposition. Parsing keeps every byte it does not need to
// interpret verbatim, so serialize(parse(b)) == b for every accepted input.

enum class PeErrc {
    kMissingMzSignature,
    kMissingPeSignature,
    kTruncatedHeader,
    kNotPe32,
    kInvalidAlignment,
    kEmptySectionTable,
    kSectionTableOutOfBounds,
    kSectionDataOutOfBounds,
    kOverlappingRawRegions,
};

class PeError : public Error {
public:
    PeError(PeErrc code, const std::string& msg) : Error(msg), code_(code) {}
    PeErrc code() const { return code_; }

private:
    PeErrc code_;
};

const char* to_string(PeErrc code);

// COFF file header, 20 bytes. Only the fields the toolkit rewrites get
// accessors; everything else stays opaque in `raw`.
struct CoffHeader {
    std::array<std::uint8_t, 20> raw{};

    std::uint16_t number_of_sections() const { return read_le16(raw, 2); }
    void set_number_of_sections(std::uint16_t v) { write_le16(raw.data() + 2, v); }
    std::uint16_t size_of_optional_header() const { return read_le16(raw, 16); }
};

// PE32 optional header, kept verbatim at its on-disk length.
struct OptionalHeader {
    std::vector<std::uint8_t> raw;

    std::uint16_t magic() const { return read_le16(raw, 0); }
    std::uint32_t image_base() const { return read_le32(raw, 28); }
    std::uint32_t section_alignment() const { return read_le32(raw, 32); }
    std::uint32_t file_alignment() const { return read_le32(raw, 36); }
    std::uint32_t size_of_image() const { return read_le32(raw, 56); }
    void set_size_of_image(std::uint32_t v) { write_le32(raw.data() + 56, v); }
    std::uint32_t size_of_headers() const { return read_le32(raw, 60); }

    std::uint32_t number_of_rva_and_sizes() const {
        return raw.size() >= 96 ? read_le32(raw, 92) : 0;
    }
    // Data directory 4 is the Authenticode certificate table. A nonzero
    // entry means file offsets are baked into the signature blob, which a
    // section injection silently invalidates; validate() warns about it.
    bool has_security_directory() const {
        if (number_of_rva_and_sizes() < 5 || raw.size() < 96 + 5 * 8) return false;
        return read_le32(raw, 96 + 4 * 8) != 0 || read_le32(raw, 96 + 4 * 8 + 4) != 0;
    }
};

struct SectionHeader {
    static constexpr std::size_t kSize = 40;

    std::array<std::uint8_t, 8> name{};
    std::uint32_t virtual_size = 0;
    std::uint32_t virtual_address = 0;
    std::uint32_t size_of_raw_data = 0;
    std::uint32_t pointer_to_raw_data = 0;
    // PointerToRelocations .. NumberOfLinenumbers, carried verbatim.
    std::array<std::uint8_t, 12> reloc_fields{};
    std::uint32_t characteristics = 0;

    // A section with no on-disk presence (lives only in memory, or is a
    // zero-size placeholder).
    bool raw_bearing() const { return pointer_to_raw_data != 0 && size_of_raw_data != 0; }

    static SectionHeader decode(std::span<const std::uint8_t> bytes40);
    void encode(std::uint8_t* out40) const;

    std::string name_string() const;
};

// Bytes found between two sections' raw regions. Kept verbatim so files
// with non-contiguous section layouts still round-trip byte-exactly.
struct GapRegion {
    std::uint64_t offset = 0;
    std::vector<std::uint8_t> bytes;
};

struct PeFile {
    std::vector<std::uint8_t> dos_region;  // [0, PE signature offset)
    CoffHeader coff;
    OptionalHeader optional_header;
    std::vector<SectionHeader> section_headers;
    std::vector<std::uint8_t> header_tail;  // end of section table .. first raw data
    std::vector<std::vector<std::uint8_t>> section_data;  // one entry per section
    std::vector<GapRegion> gap_regions;
    std::vector<std::uint8_t> overlay;

    std::uint64_t pe_offset() const { return dos_region.size(); }
    // Offset one past the section table.
    std::uint64_t section_table_end() const {
        return pe_offset() + 4 + CoffHeader{}.raw.size() + optional_header.raw.size() +
               SectionHeader::kSize * section_headers.size();
    }
    // Offset one past the header region including slack kept in header_tail.
    std::uint64_t header_span() const { return section_table_end() + header_tail.size(); }
    // One past the highest raw byte of any section (header_span() if none).
    std::uint64_t raw_end() const;
};

PeFile parse_pe(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_pe(const PeFile& file);

// Loader-view memory intervals: [rva, rva + max(virtual_size, size_of_raw_data)).
struct LayoutInterval {
    std::size_t section = 0;
    std::uint64_t begin_rva = 0;
    std::uint64_t end_rva = 0;
};

std::vector<LayoutInterval> compute_layout(const PeFile& file);

// Unused bytes between the end of the section table and SizeOfHeaders,
// available for new 40-byte section headers.
std::uint64_t header_slack(const PeFile& file);

enum class Severity { kInfo, kWarning, kStrict };

struct ValidationFinding {
    Severity severity = Severity::kInfo;
    int section = -1;  // -1 for file-level findings
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;

    bool strict_clean() const;
    std::size_t count(Severity severity) const;
    std::string to_text() const;
    // JSON array, one {severity, section, rule, message} record per finding.
    std::string to_json() const;
};

ValidationReport validate(const PeFile& file);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace sectlab
