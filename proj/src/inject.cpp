#include "sectlab/inject.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace sectlab {

namespace {

constexpr std::uint32_t kCntInitializedData = 0x00000040;
constexpr std::uint32_t kMemRead = 0x40000000;
constexpr std::uint32_t kInjectedCharacteristics = kCntInitializedData | kMemRead;

[[noreturn]] void fail(InjectErrc code, const std::string& msg) { throw InjectError(code, msg); }

// Aligned file offset one past everything currently on disk (headers
// included), where an appended section's raw data goes.
std::uint64_t append_offset(const PeFile& file) {
    return align_up(std::max(file.header_span(), file.raw_end()),
                    file.optional_header.file_alignment());
}

void shift_raw_pointers(PeFile& file, std::uint64_t from_offset, std::uint32_t amount) {
    for (auto& h : file.section_headers) {
        // Zero pointers stay zero: purely virtual sections have no on-disk
        // position to shift (the packed-malware case).
        if (h.pointer_to_raw_data != 0 && h.pointer_to_raw_data >= from_offset)
            h.pointer_to_raw_data += amount;
    }
    for (auto& gap : file.gap_regions)
        if (gap.offset >= from_offset) gap.offset += amount;
}

// Performs one single-section injection in place; returns the audit entry.
InjectedSection inject_one(PeFile& file, std::uint32_t payload_bytes, PayloadKind kind,
                           std::span<const std::uint8_t> donor, Rng& rng) {
    const std::uint32_t fa = file.optional_header.file_alignment();
    const std::uint32_t sa = file.optional_header.section_alignment();
    const std::size_t n_sections = file.section_headers.size();

    if (file.header_tail.size() < SectionHeader::kSize ||
        header_slack(file) < SectionHeader::kSize)
        fail(InjectErrc::kInsufficientHeaderSlack,
             "no room for another 40-byte section header inside SizeOfHeaders");

    const std::size_t k = choose_insertion_index(file, rng);

    SectionHeader hdr;
    hdr.name = make_section_name(rng);
    hdr.virtual_size = 0;
    hdr.size_of_raw_data = compute_raw_size(payload_bytes, fa);
    hdr.characteristics = kInjectedCharacteristics;
    hdr.virtual_address = compute_virtual_address(file);

    if (k == n_sections) {
        hdr.pointer_to_raw_data = static_cast<std::uint32_t>(append_offset(file));
    } else {
        const auto& displaced = file.section_headers[k];
        if (displaced.pointer_to_raw_data != 0) {
            hdr.pointer_to_raw_data = displaced.pointer_to_raw_data;
        } else {
            // Displacing a purely virtual section: take the next valid
            // physical offset so the new pointer lands on real disk space.
            std::uint32_t ptr = 0;
            for (std::size_t j = k + 1; j < n_sections; ++j) {
                if (file.section_headers[j].pointer_to_raw_data != 0) {
                    ptr = file.section_headers[j].pointer_to_raw_data;
                    break;
                }
            }
            hdr.pointer_to_raw_data =
                ptr != 0 ? ptr : static_cast<std::uint32_t>(append_offset(file));
        }
        shift_raw_pointers(file, hdr.pointer_to_raw_data, hdr.size_of_raw_data);
    }

    std::vector<std::uint8_t> data;
    if (kind == PayloadKind::kRandom)
        data = payload_random(payload_bytes, rng);
    else
        data = payload_adversarial(donor, payload_bytes, rng);
    data.resize(hdr.size_of_raw_data, 0);

    file.section_headers.insert(file.section_headers.begin() + k, hdr);
    file.section_data.insert(file.section_data.begin() + k, std::move(data));
    file.coff.set_number_of_sections(static_cast<std::uint16_t>(n_sections + 1));
    file.header_tail.erase(file.header_tail.begin(),
                           file.header_tail.begin() + SectionHeader::kSize);

    // VirtualSize stays 0, so reserve at least one alignment unit of image
    // space past the new RVA (more when the raw data outgrows one unit).
    const std::uint64_t reserved =
        hdr.virtual_address + align_up(std::max<std::uint64_t>(hdr.size_of_raw_data, sa), sa);
    file.optional_header.set_size_of_image(static_cast<std::uint32_t>(
        std::max<std::uint64_t>(file.optional_header.size_of_image(), reserved)));

    return {k, hdr.name, hdr.pointer_to_raw_data, hdr.size_of_raw_data, hdr.virtual_address};
}

}  // namespace

const char* to_string(InjectErrc code) {
    switch (code) {
        case InjectErrc::kInsufficientHeaderSlack: return "InsufficientHeaderSlack";
        case InjectErrc::kAdversarialDonorSameFamily: return "AdversarialDonorSameFamily";
        case InjectErrc::kTooFewSections: return "TooFewSections";
        case InjectErrc::kBadConfig: return "BadConfig";
    }
    return "UnknownInjectError";
}

std::string InjectionRecord::to_json() const {
    nlohmann::json rec;
    rec["payload_bytes_total"] = payload_bytes_total;
    rec["sections"] = nlohmann::json::array();
    for (const auto& s : sections) {
        rec["sections"].push_back({{"index", s.index},
                                   {"name", std::string(s.name.begin(), s.name.end())},
                                   {"file_offset", s.file_offset},
                                   {"raw_size", s.raw_size},
                                   {"rva", s.rva}});
    }
    return rec.dump(2);
}

std::uint32_t compute_raw_size(std::uint32_t n_bytes, std::uint32_t file_alignment) {
    return static_cast<std::uint32_t>(align_up(n_bytes, file_alignment));
}

std::uint32_t compute_virtual_address(const PeFile& file) {
    const auto& headers = file.section_headers;
    std::size_t last = 0;
    for (std::size_t i = 1; i < headers.size(); ++i) {
        const auto& h = headers[i];
        const auto& best = headers[last];
        if (h.virtual_address > best.virtual_address ||
            (h.virtual_address == best.virtual_address && h.virtual_size > best.virtual_size))
            last = i;
    }
    const std::uint64_t end = static_cast<std::uint64_t>(headers[last].virtual_address) +
                              headers[last].virtual_size;
    return static_cast<std::uint32_t>(align_up(end, file.optional_header.section_alignment()));
}

std::size_t choose_insertion_index(const PeFile& file, Rng& rng) {
    const std::uint32_t fa = file.optional_header.file_alignment();
    std::vector<std::size_t> admissible;
    for (std::size_t k = 0; k < file.section_headers.size(); ++k) {
        if (file.section_headers[k].pointer_to_raw_data % fa == 0) admissible.push_back(k);
    }
    admissible.push_back(file.section_headers.size());  // appending always works
    return admissible[rng.bounded(admissible.size())];
}

std::array<std::uint8_t, 8> make_section_name(Rng& rng) {
    std::array<std::uint8_t, 8> name{};
    for (auto& c : name) c = static_cast<std::uint8_t>(33 + rng.bounded(126 - 33 + 1));
    return name;
}

std::vector<std::uint8_t> payload_random(std::size_t length, Rng& rng) {
    if (length == 0) fail(InjectErrc::kBadConfig, "payload length must be at least 1");
    std::vector<std::uint8_t> bytes(length);
    rng.fill(bytes);
    return bytes;
}

std::vector<std::uint8_t> payload_adversarial(std::span<const std::uint8_t> donor,
                                              std::size_t length, Rng& rng) {
    if (donor.empty()) fail(InjectErrc::kBadConfig, "adversarial donor is empty");
    const std::size_t start = rng.bounded(donor.size());
    std::vector<std::uint8_t> bytes(length);
    for (std::size_t i = 0; i < length; ++i) bytes[i] = donor[(start + i) % donor.size()];
    return bytes;
}

std::pair<PeFile, InjectionRecord> inject_sections(const PeFile& file,
                                                   const InjectionConfig& config,
                                                   const std::string& victim_family) {
    if (config.section_count < 1 || config.size_multiplier < 1)
        fail(InjectErrc::kBadConfig, "section_count and size_multiplier must be >= 1");
    if (config.payload == PayloadKind::kAdversarial) {
        if (config.donor.empty())
            fail(InjectErrc::kBadConfig, "adversarial payload requires a donor");
        if (!victim_family.empty() && victim_family == config.donor_family)
            fail(InjectErrc::kAdversarialDonorSameFamily,
                 "donor family equals victim family: " + victim_family);
    }

    const std::size_t m = static_cast<std::size_t>(config.section_count);
    const std::uint64_t need = SectionHeader::kSize * m;
    if (header_slack(file) < need)
        fail(InjectErrc::kInsufficientHeaderSlack,
             "need " + std::to_string(need) + " header bytes, slack is " +
                 std::to_string(header_slack(file)));
    if (file.header_tail.size() < need)
        fail(InjectErrc::kInsufficientHeaderSlack,
             "header tail holds " + std::to_string(file.header_tail.size()) +
                 " bytes, need " + std::to_string(need));

    // One stream per (seed, file content) pair: batch runs over many files
    // stay reproducible regardless of scheduling.
    const auto input_bytes = serialize_pe(file);
    Rng rng(mix_seed(config.seed, fnv1a64(input_bytes)));

    const std::uint32_t payload_bytes =
        static_cast<std::uint32_t>(config.size_multiplier) *
        file.optional_header.file_alignment();

    PeFile out = file;
    InjectionRecord record;
    for (std::size_t i = 0; i < m; ++i) {
        record.sections.push_back(
            inject_one(out, payload_bytes, config.payload, config.donor, rng));
        record.payload_bytes_total += payload_bytes;
    }
    return {std::move(out), std::move(record)};
}

PeFile reorder_sections(const PeFile& file, Rng& rng) {
    if (file.section_headers.size() < 2)
        fail(InjectErrc::kTooFewSections, "reordering needs at least 2 sections");

    PeFile out = file;
    std::vector<std::size_t> disk_order;
    for (std::size_t i = 0; i < out.section_headers.size(); ++i)
        if (out.section_headers[i].raw_bearing()) disk_order.push_back(i);
    if (disk_order.size() < 2) return out;  // nothing to permute

    std::sort(disk_order.begin(), disk_order.end(), [&](std::size_t a, std::size_t b) {
        return out.section_headers[a].pointer_to_raw_data <
               out.section_headers[b].pointer_to_raw_data;
    });
    const std::uint64_t base = out.section_headers[disk_order.front()].pointer_to_raw_data;

    std::vector<std::size_t> permuted = disk_order;
    for (std::size_t i = permuted.size() - 1; i > 0; --i)
        std::swap(permuted[i], permuted[rng.bounded(i + 1)]);

    // Blocks are packed back-to-back from the original first raw offset, so
    // contiguous layouts keep their exact length. Gap bytes between raw
    // regions have no stable home once blocks move; they are dropped.
    out.gap_regions.clear();
    std::uint64_t cursor = base;
    for (std::size_t idx : permuted) {
        out.section_headers[idx].pointer_to_raw_data = static_cast<std::uint32_t>(cursor);
        cursor += out.section_headers[idx].size_of_raw_data;
    }
    return out;
}

std::vector<std::uint8_t> strip_header(const PeFile& file) {
    std::vector<std::size_t> disk_order;
    for (std::size_t i = 0; i < file.section_headers.size(); ++i)
        if (file.section_headers[i].raw_bearing()) disk_order.push_back(i);
    std::sort(disk_order.begin(), disk_order.end(), [&](std::size_t a, std::size_t b) {
        return file.section_headers[a].pointer_to_raw_data <
               file.section_headers[b].pointer_to_raw_data;
    });

    std::vector<std::uint8_t> out;
    for (std::size_t idx : disk_order)
        out.insert(out.end(), file.section_data[idx].begin(), file.section_data[idx].end());
    return out;
}

}  // namespace sectlab
