#include "sectlab/pe.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sectlab {

namespace {

constexpr std::uint64_t kDosHeaderSize = 0x40;
constexpr std::uint64_t kLfanewOffset = 0x3c;
constexpr std::uint16_t kPe32Magic = 0x10b;
constexpr std::size_t kCoffSize = 20;
// Fields we interpret end at SizeOfHeaders (offset 60 + 4).
constexpr std::size_t kMinOptionalHeaderSize = 64;

[[noreturn]] void fail(PeErrc code, const std::string& msg) { throw PeError(code, msg); }

struct RawRange {
    std::size_t section;
    std::uint64_t begin;
    std::uint64_t end;
};

std::vector<RawRange> raw_ranges(const std::vector<SectionHeader>& headers) {
    std::vector<RawRange> ranges;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (!headers[i].raw_bearing()) continue;
        const std::uint64_t begin = headers[i].pointer_to_raw_data;
        ranges.push_back({i, begin, begin + headers[i].size_of_raw_data});
    }
    std::sort(ranges.begin(), ranges.end(),
              [](const RawRange& a, const RawRange& b) { return a.begin < b.begin; });
    return ranges;
}

}  // namespace

const char* to_string(PeErrc code) {
    switch (code) {
        case PeErrc::kMissingMzSignature: return "MissingMzSignature";
        case PeErrc::kMissingPeSignature: return "MissingPeSignature";
        case PeErrc::kTruncatedHeader: return "TruncatedHeader";
        case PeErrc::kNotPe32: return "NotPe32";
        case PeErrc::kInvalidAlignment: return "InvalidAlignment";
        case PeErrc::kEmptySectionTable: return "EmptySectionTable";
        case PeErrc::kSectionTableOutOfBounds: return "SectionTableOutOfBounds";
        case PeErrc::kSectionDataOutOfBounds: return "SectionDataOutOfBounds";
        case PeErrc::kOverlappingRawRegions: return "OverlappingRawRegions";
    }
    return "UnknownPeError";
}

SectionHeader SectionHeader::decode(std::span<const std::uint8_t> bytes40) {
    SectionHeader h;
    std::copy_n(bytes40.begin(), 8, h.name.begin());
    h.virtual_size = read_le32(bytes40, 8);
    h.virtual_address = read_le32(bytes40, 12);
    h.size_of_raw_data = read_le32(bytes40, 16);
    h.pointer_to_raw_data = read_le32(bytes40, 20);
    std::copy_n(bytes40.begin() + 24, 12, h.reloc_fields.begin());
    h.characteristics = read_le32(bytes40, 36);
    return h;
}

void SectionHeader::encode(std::uint8_t* out40) const {
    std::copy(name.begin(), name.end(), out40);
    write_le32(out40 + 8, virtual_size);
    write_le32(out40 + 12, virtual_address);
    write_le32(out40 + 16, size_of_raw_data);
    write_le32(out40 + 20, pointer_to_raw_data);
    std::copy(reloc_fields.begin(), reloc_fields.end(), out40 + 24);
    write_le32(out40 + 36, characteristics);
}

std::string SectionHeader::name_string() const {
    std::string s(name.begin(), name.end());
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
}

std::uint64_t PeFile::raw_end() const {
    std::uint64_t end = header_span();
    for (const auto& h : section_headers) {
        if (!h.raw_bearing()) continue;
        end = std::max(end, static_cast<std::uint64_t>(h.pointer_to_raw_data) + h.size_of_raw_data);
    }
    return end;
}

PeFile parse_pe(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2) fail(PeErrc::kTruncatedHeader, "input shorter than the MZ signature");
    if (bytes[0] != 'M' || bytes[1] != 'Z')
        fail(PeErrc::kMissingMzSignature, "input does not start with MZ");
    if (bytes.size() < kDosHeaderSize)
        fail(PeErrc::kTruncatedHeader, "DOS header does not fit in the input");

    const std::uint64_t pe_off = read_le32(bytes, kLfanewOffset);
    if (pe_off + 4 > bytes.size())
        fail(PeErrc::kTruncatedHeader, "PE signature offset past end of input");
    if (bytes[pe_off] != 'P' || bytes[pe_off + 1] != 'E' || bytes[pe_off + 2] != 0 ||
        bytes[pe_off + 3] != 0)
        fail(PeErrc::kMissingPeSignature, "PE signature bytes not found");

    PeFile file;
    file.dos_region.assign(bytes.begin(), bytes.begin() + pe_off);

    const std::uint64_t coff_off = pe_off + 4;
    if (coff_off + kCoffSize > bytes.size())
        fail(PeErrc::kTruncatedHeader, "COFF header does not fit in the input");
    std::copy_n(bytes.begin() + coff_off, kCoffSize, file.coff.raw.begin());

    const std::uint16_t n_sections = file.coff.number_of_sections();
    if (n_sections == 0) fail(PeErrc::kEmptySectionTable, "NumberOfSections is zero");

    const std::uint16_t opt_size = file.coff.size_of_optional_header();
    if (opt_size < kMinOptionalHeaderSize)
        fail(PeErrc::kTruncatedHeader, "optional header too small for PE32 fields");
    const std::uint64_t opt_off = coff_off + kCoffSize;
    if (opt_off + opt_size > bytes.size())
        fail(PeErrc::kTruncatedHeader, "optional header does not fit in the input");
    file.optional_header.raw.assign(bytes.begin() + opt_off, bytes.begin() + opt_off + opt_size);

    if (file.optional_header.magic() != kPe32Magic)
        fail(PeErrc::kNotPe32, "optional header magic is not PE32 (0x10b)");
    if (file.optional_header.file_alignment() == 0 ||
        file.optional_header.section_alignment() == 0)
        fail(PeErrc::kInvalidAlignment, "FileAlignment or SectionAlignment is zero");

    const std::uint64_t table_off = opt_off + opt_size;
    const std::uint64_t table_end = table_off + SectionHeader::kSize * n_sections;
    if (table_end > bytes.size())
        fail(PeErrc::kSectionTableOutOfBounds, "section table extends past end of input");
    file.section_headers.reserve(n_sections);
    for (std::uint16_t i = 0; i < n_sections; ++i) {
        file.section_headers.push_back(
            SectionHeader::decode(bytes.subspan(table_off + SectionHeader::kSize * i,
                                                SectionHeader::kSize)));
    }

    const auto ranges = raw_ranges(file.section_headers);
    for (const auto& r : ranges) {
        if (r.end > bytes.size())
            fail(PeErrc::kSectionDataOutOfBounds,
                 "section " + std::to_string(r.section) + " raw data extends past end of input");
    }
    // Raw data overlapping the header region is tolerated (sloppy or packed
    // files place sections there); two sections sharing disk bytes are not,
    // because serialization could no longer reproduce both.
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].begin < ranges[i - 1].end)
            fail(PeErrc::kOverlappingRawRegions,
                 "sections " + std::to_string(ranges[i - 1].section) + " and " +
                     std::to_string(ranges[i].section) + " overlap on disk");
    }

    const std::uint64_t first_raw =
        std::max(table_end, ranges.empty() ? bytes.size() : ranges.front().begin);
    file.header_tail.assign(bytes.begin() + table_end, bytes.begin() + first_raw);

    file.section_data.resize(n_sections);
    for (std::uint16_t i = 0; i < n_sections; ++i) {
        const auto& h = file.section_headers[i];
        if (!h.raw_bearing()) continue;  // purely virtual section, no bytes on disk
        file.section_data[i].assign(bytes.begin() + h.pointer_to_raw_data,
                                    bytes.begin() + h.pointer_to_raw_data + h.size_of_raw_data);
    }

    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].begin > ranges[i - 1].end) {
            GapRegion gap;
            gap.offset = ranges[i - 1].end;
            gap.bytes.assign(bytes.begin() + ranges[i - 1].end, bytes.begin() + ranges[i].begin);
            file.gap_regions.push_back(std::move(gap));
        }
    }

    const std::uint64_t last_raw = ranges.empty() ? bytes.size() : ranges.back().end;
    file.overlay.assign(bytes.begin() + last_raw, bytes.end());
    return file;
}

std::vector<std::uint8_t> serialize_pe(const PeFile& file) {
    const auto ranges = raw_ranges(file.section_headers);
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].begin < ranges[i - 1].end)
            fail(PeErrc::kOverlappingRawRegions,
                 "sections " + std::to_string(ranges[i - 1].section) + " and " +
                     std::to_string(ranges[i].section) + " overlap on disk");
    }

    std::uint64_t total = file.raw_end();
    for (const auto& gap : file.gap_regions) total = std::max(total, gap.offset + gap.bytes.size());
    const std::uint64_t overlay_off = total;
    total += file.overlay.size();

    std::vector<std::uint8_t> out(total, 0);
    std::uint64_t pos = 0;
    std::copy(file.dos_region.begin(), file.dos_region.end(), out.begin());
    pos += file.dos_region.size();
    out[pos] = 'P';
    out[pos + 1] = 'E';
    pos += 4;
    std::copy(file.coff.raw.begin(), file.coff.raw.end(), out.begin() + pos);
    pos += file.coff.raw.size();
    std::copy(file.optional_header.raw.begin(), file.optional_header.raw.end(),
              out.begin() + pos);
    pos += file.optional_header.raw.size();
    for (const auto& h : file.section_headers) {
        h.encode(out.data() + pos);
        pos += SectionHeader::kSize;
    }
    std::copy(file.header_tail.begin(), file.header_tail.end(), out.begin() + pos);

    for (std::size_t i = 0; i < file.section_headers.size(); ++i) {
        const auto& h = file.section_headers[i];
        if (!h.raw_bearing()) continue;
        const auto& data = file.section_data[i];
        const std::size_t n = std::min<std::size_t>(data.size(), h.size_of_raw_data);
        std::copy_n(data.begin(), n, out.begin() + h.pointer_to_raw_data);
    }
    for (const auto& gap : file.gap_regions)
        std::copy(gap.bytes.begin(), gap.bytes.end(), out.begin() + gap.offset);
    std::copy(file.overlay.begin(), file.overlay.end(), out.begin() + overlay_off);
    return out;
}

std::vector<LayoutInterval> compute_layout(const PeFile& file) {
    std::vector<LayoutInterval> intervals;
    intervals.reserve(file.section_headers.size());
    for (std::size_t i = 0; i < file.section_headers.size(); ++i) {
        const auto& h = file.section_headers[i];
        const std::uint64_t extent = std::max(h.virtual_size, h.size_of_raw_data);
        intervals.push_back({i, h.virtual_address, h.virtual_address + extent});
    }
    return intervals;
}

std::uint64_t header_slack(const PeFile& file) {
    const std::uint64_t table_end = file.section_table_end();
    const std::uint64_t soh = file.optional_header.size_of_headers();
    return soh > table_end ? soh - table_end : 0;
}

bool ValidationReport::strict_clean() const { return count(Severity::kStrict) == 0; }

std::size_t ValidationReport::count(Severity severity) const {
    std::size_t n = 0;
    for (const auto& f : findings)
        if (f.severity == severity) ++n;
    return n;
}

namespace {

const char* severity_name(Severity s) {
    switch (s) {
        case Severity::kInfo: return "info";
        case Severity::kWarning: return "warning";
        case Severity::kStrict: return "strict";
    }
    return "?";
}

}  // namespace

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    for (const auto& f : findings) {
        os << severity_name(f.severity) << " ";
        if (f.section >= 0)
            os << "section " << f.section;
        else
            os << "file";
        os << " [" << f.rule << "] " << f.message << "\n";
    }
    os << "strict violations: " << count(Severity::kStrict) << "\n";
    return os.str();
}

std::string ValidationReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : findings) {
        arr.push_back({{"severity", severity_name(f.severity)},
                       {"section", f.section},
                       {"rule", f.rule},
                       {"message", f.message}});
    }
    return arr.dump(2);
}

ValidationReport validate(const PeFile& file) {
    ValidationReport report;
    const std::uint32_t fa = file.optional_header.file_alignment();
    const std::uint32_t sa = file.optional_header.section_alignment();

    auto add = [&](Severity sev, int section, std::string rule, std::string message) {
        report.findings.push_back({sev, section, std::move(rule), std::move(message)});
    };

    if (sa < fa)
        add(Severity::kStrict, -1, "alignment-order",
            "SectionAlignment is smaller than FileAlignment");

    for (std::size_t i = 0; i < file.section_headers.size(); ++i) {
        const auto& h = file.section_headers[i];
        const int idx = static_cast<int>(i);
        if (!h.raw_bearing()) {
            add(Severity::kInfo, idx, "purely-virtual",
                "section has no raw data (PointerToRawData or SizeOfRawData is zero)");
        } else {
            if (h.pointer_to_raw_data % fa != 0)
                add(Severity::kStrict, idx, "raw-pointer-alignment",
                    "PointerToRawData is not a multiple of FileAlignment");
            if (h.size_of_raw_data % fa != 0)
                add(Severity::kStrict, idx, "raw-size-alignment",
                    "SizeOfRawData is not a multiple of FileAlignment");
        }
        if (h.virtual_address % sa != 0)
            add(Severity::kStrict, idx, "virtual-alignment",
                "VirtualAddress is not a multiple of SectionAlignment");
    }

    std::uint64_t max_end_rva = 0;
    for (const auto& iv : compute_layout(file)) max_end_rva = std::max(max_end_rva, iv.end_rva);
    const std::uint64_t soi = file.optional_header.size_of_image();
    if (soi % sa != 0)
        add(Severity::kStrict, -1, "image-size-alignment",
            "SizeOfImage is not a multiple of SectionAlignment");
    if (soi < max_end_rva)
        add(Severity::kStrict, -1, "image-size-extent",
            "SizeOfImage is smaller than the last section's end RVA");

    if (file.optional_header.has_security_directory())
        add(Severity::kWarning, -1, "security-directory",
            "certificate table present; file offsets inside it are not rewritten");

    add(Severity::kInfo, -1, "header-slack",
        "header slack is " + std::to_string(header_slack(file)) + " bytes");
    return report;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path);
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace sectlab
