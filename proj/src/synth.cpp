#include "sectlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "sectlab/rng.hpp"

namespace fs = std::filesystem;

namespace sectlab {

namespace {

constexpr std::uint32_t kFileAlignment = 512;
constexpr std::uint32_t kSectionAlignment = 0x1000;
constexpr std::uint32_t kSizeOfHeaders = 1024;
constexpr std::uint32_t kImageBase = 0x00400000;
constexpr std::size_t kOptionalHeaderSize = 224;

constexpr std::uint32_t kScnCode = 0x00000020;
constexpr std::uint32_t kScnInitializedData = 0x00000040;
constexpr std::uint32_t kScnMemExecute = 0x20000000;
constexpr std::uint32_t kScnMemRead = 0x40000000;
constexpr std::uint32_t kScnMemWrite = 0x80000000;

OptionalHeader make_optional_header() {
    OptionalHeader opt;
    opt.raw.assign(kOptionalHeaderSize, 0);
    auto* p = opt.raw.data();
    write_le16(p + 0, 0x10b);   // PE32 magic
    p[2] = 6;                   // linker major
    write_le32(p + 16, 0x1000); // AddressOfEntryPoint
    write_le32(p + 20, 0x1000); // BaseOfCode
    write_le32(p + 24, 0x2000); // BaseOfData
    write_le32(p + 28, kImageBase);
    write_le32(p + 32, kSectionAlignment);
    write_le32(p + 36, kFileAlignment);
    write_le16(p + 40, 4);      // OS major
    write_le16(p + 48, 4);      // subsystem major
    write_le32(p + 60, kSizeOfHeaders);
    write_le16(p + 68, 3);      // console subsystem
    write_le32(p + 72, 0x100000);  // stack reserve
    write_le32(p + 76, 0x1000);    // stack commit
    write_le32(p + 80, 0x100000);  // heap reserve
    write_le32(p + 84, 0x1000);    // heap commit
    write_le32(p + 92, 16);     // NumberOfRvaAndSizes
    return opt;
}

std::array<std::uint8_t, 8> section_name(const char* s) {
    std::array<std::uint8_t, 8> name{};
    for (int i = 0; i < 8 && s[i]; ++i) name[i] = static_cast<std::uint8_t>(s[i]);
    return name;
}

// Family texture archetypes. Separability comes from distinct dominant
// spatial frequencies and stripe angles once the byte stream is rendered
// at width 32 and resized to 64x64.
void fill_texture(std::vector<std::uint8_t>& data, int family_index, Rng& rng) {
    const int archetype = family_index % 5;
    const double stretch = 1.0 + (family_index / 5) * 0.6;
    const double noise_amp = 14.0;

    for (std::size_t i = 0; i < data.size(); ++i) {
        double v = 128.0;
        const double t = static_cast<double>(i);
        switch (archetype) {
            case 0:  // fine oblique stripes
                v += 96.0 * std::sin(2.0 * std::numbers::pi * t / (3.0 * stretch));
                break;
            case 1:  // medium stripes
                v += 96.0 * std::sin(2.0 * std::numbers::pi * t / (7.0 * stretch));
                break;
            case 2:  // coarse stripes
                v += 96.0 * std::sin(2.0 * std::numbers::pi * t / (13.0 * stretch));
                break;
            case 3: {  // square-wave blocks
                const int period = static_cast<int>(24.0 * stretch);
                v += (static_cast<int>(i) % period) * 2 < period ? 84.0 : -84.0;
                break;
            }
            case 4: {  // horizontal bands (row-scale period at width 32)
                const int band = static_cast<int>(i / 96) % 2;
                v += band ? 84.0 : -84.0;
                v += 30.0 * std::sin(2.0 * std::numbers::pi * t / (5.0 * stretch));
                break;
            }
        }
        v += (rng.next_double() * 2.0 - 1.0) * noise_amp;
        data[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
}

}  // namespace

std::vector<std::uint8_t> synth_pe_bytes(int family_index, int file_index, std::uint64_t seed) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(family_index) + 1,
                     static_cast<std::uint64_t>(file_index) + 1));

    PeFile file;
    file.dos_region.assign(0x40, 0);
    file.dos_region[0] = 'M';
    file.dos_region[1] = 'Z';
    write_le16(file.dos_region.data() + 2, 0x90);  // classic e_cblp
    write_le32(file.dos_region.data() + 0x3c, 0x40);

    const int n_sections = 1 + family_index % 3;
    write_le16(file.coff.raw.data() + 0, 0x014c);  // i386
    file.coff.set_number_of_sections(static_cast<std::uint16_t>(n_sections));
    write_le16(file.coff.raw.data() + 16, kOptionalHeaderSize);
    write_le16(file.coff.raw.data() + 18, 0x0102);  // executable, 32-bit

    file.optional_header = make_optional_header();

    // Family-characteristic sizes with mild per-file jitter; everything
    // stays under 10 kB so the rendering width is 32 for the whole corpus.
    const int base_blocks = 8 + (family_index % 4) * 2;
    const int jitter = static_cast<int>(rng.bounded(4));
    int blocks_left = base_blocks + jitter;

    static const char* kNames[3] = {".text", ".data", ".rsrc"};
    std::uint32_t next_ptr = kSizeOfHeaders;
    std::uint32_t next_va = 0x1000;
    for (int s = 0; s < n_sections; ++s) {
        const int share = s + 1 == n_sections
                              ? blocks_left
                              : std::max(1, blocks_left / (n_sections - s));
        blocks_left -= share;

        SectionHeader h;
        h.name = section_name(kNames[s]);
        h.size_of_raw_data = static_cast<std::uint32_t>(share) * kFileAlignment;
        h.virtual_size = h.size_of_raw_data;
        h.pointer_to_raw_data = next_ptr;
        h.virtual_address = next_va;
        h.characteristics = s == 0 ? (kScnCode | kScnMemExecute | kScnMemRead)
                                   : (kScnInitializedData | kScnMemRead |
                                      (s == 1 ? kScnMemWrite : 0));
        next_ptr += h.size_of_raw_data;
        next_va = static_cast<std::uint32_t>(align_up(next_va + h.virtual_size, kSectionAlignment));

        std::vector<std::uint8_t> data(h.size_of_raw_data);
        fill_texture(data, family_index, rng);
        file.section_headers.push_back(h);
        file.section_data.push_back(std::move(data));
    }
    file.optional_header.set_size_of_image(next_va);

    const std::uint64_t table_end = file.section_table_end();
    file.header_tail.assign(kSizeOfHeaders - table_end, 0);
    return serialize_pe(file);
}

Dataset synth_corpus(const std::string& root, int families, int per_family, std::uint64_t seed) {
    if (families < 2 || per_family < 3)
        throw DatasetError(DatasetErrc::kBadSplitSpec,
                           "need at least 2 families and 3 files per family");
    fs::create_directories(root);
    for (int f = 0; f < families; ++f) {
        const fs::path dir = fs::path(root) / ("family_" + std::to_string(f));
        fs::create_directories(dir);
        for (int i = 0; i < per_family; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "sample_%04d.exe", i);
            write_file((dir / name).string(), synth_pe_bytes(f, i, seed));
        }
    }
    return load_dataset(root);
}

}  // namespace sectlab
