#pragma once

// Hand-rolled PE32 writer for tests. Every field is written at its
// documented offset with no help from the library under test, so parser
// and serializer results can be checked against truly independent bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "sectlab/rng.hpp"

namespace testsupport {

struct BuildSection {
    std::string name;
    std::uint32_t virtual_size = 0;
    std::uint32_t virtual_address = 0;
    std::uint32_t size_of_raw_data = 0;
    std::uint32_t pointer_to_raw_data = 0;
    std::uint32_t characteristics = 0x40000040;  // initialized data, readable
    std::vector<std::uint8_t> data;
};

struct BuildSpec {
    std::uint32_t e_lfanew = 0x40;
    std::uint16_t machine = 0x014c;
    std::uint16_t optional_header_size = 224;
    std::uint16_t coff_characteristics = 0x0102;
    std::uint32_t image_base = 0x00400000;
    std::uint32_t file_alignment = 512;
    std::uint32_t section_alignment = 0x1000;
    std::uint32_t size_of_headers = 0;  // 0 = derive from layout
    std::uint32_t size_of_image = 0;    // 0 = derive from sections
    std::uint16_t pe_magic = 0x10b;
    std::vector<BuildSection> sections;
    std::vector<std::uint8_t> overlay;
};

inline void put16(std::vector<std::uint8_t>& b, std::size_t off, std::uint16_t v) {
    b[off] = v & 0xff;
    b[off + 1] = (v >> 8) & 0xff;
}

inline void put32(std::vector<std::uint8_t>& b, std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[off + i] = (v >> (8 * i)) & 0xff;
}

inline std::vector<std::uint8_t> build_pe(const BuildSpec& spec) {
    const std::size_t coff_off = spec.e_lfanew + 4;
    const std::size_t opt_off = coff_off + 20;
    const std::size_t table_off = opt_off + spec.optional_header_size;
    const std::size_t table_end = table_off + 40 * spec.sections.size();

    std::uint32_t size_of_headers = spec.size_of_headers;
    if (size_of_headers == 0) {
        size_of_headers = static_cast<std::uint32_t>(table_end);
        const std::uint32_t rem = size_of_headers % spec.file_alignment;
        if (rem != 0) size_of_headers += spec.file_alignment - rem;
    }

    std::size_t total = size_of_headers;
    for (const auto& s : spec.sections) {
        if (s.pointer_to_raw_data != 0 && s.size_of_raw_data != 0)
            total = std::max<std::size_t>(total, s.pointer_to_raw_data + s.size_of_raw_data);
    }
    const std::size_t overlay_off = total;
    total += spec.overlay.size();

    std::uint32_t size_of_image = spec.size_of_image;
    if (size_of_image == 0) {
        for (const auto& s : spec.sections) {
            const std::uint32_t extent = std::max(s.virtual_size, s.size_of_raw_data);
            std::uint32_t end = s.virtual_address + extent;
            const std::uint32_t rem = end % spec.section_alignment;
            if (rem != 0) end += spec.section_alignment - rem;
            size_of_image = std::max(size_of_image, end);
        }
    }

    std::vector<std::uint8_t> out(total, 0);
    out[0] = 'M';
    out[1] = 'Z';
    put16(out, 2, 0x0090);
    put32(out, 0x3c, spec.e_lfanew);

    out[spec.e_lfanew] = 'P';
    out[spec.e_lfanew + 1] = 'E';

    put16(out, coff_off + 0, spec.machine);
    put16(out, coff_off + 2, static_cast<std::uint16_t>(spec.sections.size()));
    put16(out, coff_off + 16, spec.optional_header_size);
    put16(out, coff_off + 18, spec.coff_characteristics);

    put16(out, opt_off + 0, spec.pe_magic);
    out[opt_off + 2] = 9;                    // linker major
    put32(out, opt_off + 16, 0x1000);        // entry point
    put32(out, opt_off + 20, 0x1000);        // base of code
    put32(out, opt_off + 28, spec.image_base);
    put32(out, opt_off + 32, spec.section_alignment);
    put32(out, opt_off + 36, spec.file_alignment);
    put16(out, opt_off + 40, 4);             // OS major
    put16(out, opt_off + 48, 4);             // subsystem major
    put32(out, opt_off + 56, size_of_image);
    put32(out, opt_off + 60, size_of_headers);
    put16(out, opt_off + 68, 3);             // console subsystem
    if (spec.optional_header_size >= 96) put32(out, opt_off + 92, 16);

    for (std::size_t i = 0; i < spec.sections.size(); ++i) {
        const auto& s = spec.sections[i];
        const std::size_t h = table_off + 40 * i;
        for (std::size_t c = 0; c < 8 && c < s.name.size(); ++c)
            out[h + c] = static_cast<std::uint8_t>(s.name[c]);
        put32(out, h + 8, s.virtual_size);
        put32(out, h + 12, s.virtual_address);
        put32(out, h + 16, s.size_of_raw_data);
        put32(out, h + 20, s.pointer_to_raw_data);
        put32(out, h + 36, s.characteristics);

        if (s.pointer_to_raw_data != 0 && s.size_of_raw_data != 0) {
            for (std::size_t b = 0; b < s.size_of_raw_data; ++b)
                out[s.pointer_to_raw_data + b] = b < s.data.size() ? s.data[b] : 0;
        }
    }

    for (std::size_t b = 0; b < spec.overlay.size(); ++b) out[overlay_off + b] = spec.overlay[b];
    return out;
}

// Consistent aligned layout: n sections of random block counts placed
// back to back after the headers, ascending RVAs.
inline BuildSpec random_spec(int n_sections, std::uint32_t file_alignment,
                             std::uint32_t section_alignment, bool with_overlay,
                             sectlab::Rng& rng) {
    BuildSpec spec;
    spec.file_alignment = file_alignment;
    spec.section_alignment = section_alignment;

    const std::size_t table_end = 0x40 + 4 + 20 + spec.optional_header_size + 40u * n_sections;
    std::uint32_t soh = static_cast<std::uint32_t>(table_end) + 400;  // slack for 10 headers
    soh = static_cast<std::uint32_t>((soh + file_alignment - 1) / file_alignment * file_alignment);
    spec.size_of_headers = soh;

    std::uint32_t ptr = soh;
    std::uint32_t va = section_alignment;
    for (int i = 0; i < n_sections; ++i) {
        BuildSection s;
        s.name = ".s" + std::to_string(i);
        s.size_of_raw_data = static_cast<std::uint32_t>(1 + rng.bounded(4)) * file_alignment;
        s.virtual_size = s.size_of_raw_data;
        s.pointer_to_raw_data = ptr;
        s.virtual_address = va;
        s.data.resize(s.size_of_raw_data);
        rng.fill(s.data);
        ptr += s.size_of_raw_data;
        va += static_cast<std::uint32_t>(
            (s.virtual_size + section_alignment - 1) / section_alignment * section_alignment);
        spec.sections.push_back(std::move(s));
    }
    if (with_overlay) {
        spec.overlay.resize(1 + rng.bounded(900));
        rng.fill(spec.overlay);
    }
    return spec;
}

}  // namespace testsupport
