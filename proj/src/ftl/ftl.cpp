#include "motionpi/ftl/ftl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "le.hpp"

namespace motionpi::ftl {

namespace {

// Boot sector field offsets. 0..61 follow the FAT16 BPB; the FTL block at
// 62 lives in what would be boot code and carries the NAND mapping.
constexpr std::size_t kOffOem = 3;
constexpr std::size_t kOffBytesPerSector = 11;
constexpr std::size_t kOffSectorsPerCluster = 13;
constexpr std::size_t kOffReservedSectors = 14;
constexpr std::size_t kOffFatCount = 16;
constexpr std::size_t kOffRootEntries = 17;
constexpr std::size_t kOffTotalSectors16 = 19;
constexpr std::size_t kOffMedia = 21;
constexpr std::size_t kOffSectorsPerFat = 22;
constexpr std::size_t kOffTotalSectors32 = 32;
constexpr std::size_t kOffExtBootSig = 38;
constexpr std::size_t kOffVolumeId = 39;
constexpr std::size_t kOffLabel = 43;
constexpr std::size_t kOffFsType = 54;
constexpr std::size_t kOffFtlMagic = 62;
constexpr std::size_t kOffNorCapacity = 74;
constexpr std::size_t kOffNandCapacity = 82;
constexpr std::size_t kOffNandPageSize = 90;
constexpr std::size_t kOffNandSpareSize = 94;
constexpr std::size_t kOffNandPagesPerBlock = 98;
constexpr std::size_t kOffDataOffset = 102;
constexpr std::size_t kOffClusterCount = 110;
constexpr std::size_t kOffSignature = 510;

constexpr char kFtlMagic[8] = {'M', 'P', 'I', 'F', 'T', 'L', '0', '1'};
constexpr char kFsType[8] = {'F', 'A', 'T', '1', '6', ' ', ' ', ' '};

// NAND spare layout for data pages.
constexpr std::size_t kSpareValid = 1;
constexpr std::size_t kSpareOwner = 5;
constexpr std::size_t kSpareMarker = 9;
constexpr std::uint8_t kDataMarker = 0xA5;

constexpr std::uint16_t kFatEndOfChain = 0xFFFF;
constexpr double kFatEpoch = 315532800.0;  // 1980-01-01T00:00:00Z

bool all_ff(std::span<const std::uint8_t> b) {
    return std::all_of(b.begin(), b.end(), [](std::uint8_t x) { return x == 0xFF; });
}

struct FatTimestamp {
    std::uint16_t date;
    std::uint16_t time;
    std::uint8_t tenth;  // 10 ms units within the 2-second slot
};

FatTimestamp encode_fat_time(double t) {
    if (!(t >= kFatEpoch) || t >= 4354819200.0) {  // FAT dates cover 1980..2107
        throw FtlError("creation time outside the FAT date range");
    }
    const long long centis = std::llround(t * 100.0);
    const long long secs = centis / 100;
    const long long rem = centis % 100;
    using namespace std::chrono;
    const sys_days day{days{secs / 86400}};
    const year_month_day ymd{day};
    const long long sod = secs % 86400;
    FatTimestamp ft{};
    ft.date = static_cast<std::uint16_t>(((static_cast<int>(ymd.year()) - 1980) << 9) |
                                         (static_cast<unsigned>(ymd.month()) << 5) |
                                         static_cast<unsigned>(ymd.day()));
    ft.time = static_cast<std::uint16_t>(((sod / 3600) << 11) | (((sod / 60) % 60) << 5) | ((sod % 60) / 2));
    ft.tenth = static_cast<std::uint8_t>((sod % 2) * 100 + rem);
    return ft;
}

std::optional<double> decode_fat_time(std::uint16_t date, std::uint16_t time, std::uint8_t tenth) {
    using namespace std::chrono;
    const year_month_day ymd{year{1980 + (date >> 9)}, month{static_cast<unsigned>((date >> 5) & 0x0F)},
                             day{static_cast<unsigned>(date & 0x1F)}};
    const unsigned h = time >> 11;
    const unsigned m = (time >> 5) & 0x3F;
    const unsigned s2 = time & 0x1F;
    if (!ymd.ok() || h > 23 || m > 59 || s2 > 29 || tenth > 199) {
        return std::nullopt;
    }
    const auto d = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(d) * 86400.0 + h * 3600.0 + m * 60.0 + s2 * 2.0 + tenth / 100.0;
}

std::string name_from_dirent(std::span<const std::uint8_t> e) {
    std::string base(reinterpret_cast<const char*>(e.data()), 8);
    std::string ext(reinterpret_cast<const char*>(e.data()) + 8, 3);
    while (!base.empty() && base.back() == ' ') base.pop_back();
    while (!ext.empty() && ext.back() == ' ') ext.pop_back();
    return ext.empty() ? base : base + "." + ext;
}

}  // namespace

std::string normalize_83(std::string_view name) {
    const auto dot = name.find('.');
    const std::string_view base = name.substr(0, dot);
    const std::string_view ext = dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
    if (base.empty() || base.size() > 8 || ext.size() > 3 || ext.find('.') != std::string_view::npos) {
        throw FtlError("not an 8.3 file name: '" + std::string(name) + "'");
    }
    std::string out;
    for (char c : name) {
        if (c == '.') {
            out.push_back(c);
            continue;
        }
        const char u = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
        if (!((u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u == '_' || u == '-')) {
            throw FtlError("illegal character in file name: '" + std::string(name) + "'");
        }
        out.push_back(u);
    }
    if (!ext.empty() || dot == std::string_view::npos) {
        return out;
    }
    out.pop_back();  // trailing dot with empty extension
    return out;
}

FtlGeometry FtlGeometry::desk() { return FtlGeometry{}; }

FtlGeometry FtlGeometry::full_scale() {
    FtlGeometry g;
    g.cluster_size = 64 * 1024;
    g.nor_capacity = 8 * kMiB;
    g.nand_capacity = 4096 * kMiB;
    g.data_offset = 1 * kMiB;
    return g;
}

std::uint32_t FtlGeometry::cluster_count() const {
    if (nand_capacity <= data_offset || cluster_size == 0) return 0;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>((nand_capacity - data_offset) / cluster_size,
                                                              std::uint64_t{0xFFFFFFFF}));
}

std::uint32_t FtlGeometry::sectors_per_fat() const {
    return static_cast<std::uint32_t>((2ULL * (cluster_count() + 2ULL) + kSectorSize - 1) / kSectorSize);
}

std::uint32_t FtlGeometry::root_dir_sectors() const {
    return (root_entries * kDirEntrySize + kSectorSize - 1) / kSectorSize;
}

std::uint64_t FtlGeometry::fat_region_bytes() const {
    return std::uint64_t{kSectorSize} * (1ULL + sectors_per_fat() + root_dir_sectors());
}

void FtlGeometry::validate() const {
    const std::uint64_t nand_block = std::uint64_t{nand_page_size} * nand_pages_per_block;
    const std::uint64_t nor_block = std::uint64_t{nor_page_size} * nor_pages_per_block;
    if (nand_capacity == 0) {
        throw FtlError("NAND capacity is zero");
    }
    if (nand_page_size == 0 || nand_pages_per_block == 0 || nor_page_size == 0 || nor_pages_per_block == 0) {
        throw FtlError("flash page geometry must be positive");
    }
    if (nand_spare_size < 10) {
        throw FtlError("NAND spare area too small for page metadata");
    }
    if (cluster_size == 0 || cluster_size % kSectorSize != 0 || cluster_size % nand_page_size != 0 ||
        cluster_size / kSectorSize > 128 || (cluster_size & (cluster_size - 1)) != 0) {
        throw FtlError("cluster size must be a power of two, a multiple of the NAND page and at most 64 KiB");
    }
    if (nand_capacity % nand_block != 0 || data_offset % nand_block != 0) {
        throw FtlError("NAND capacity and data offset must be block aligned");
    }
    if (nand_capacity <= data_offset || (nand_capacity - data_offset) < cluster_size) {
        throw FtlError("NAND data region cannot host a single cluster");
    }
    if ((nand_capacity - data_offset) % cluster_size != 0) {
        throw FtlError("cluster size does not divide the NAND data region");
    }
    if (cluster_count() > kFat16MaxClusters) {
        throw FtlError("data region exceeds the FAT16 cluster limit; use larger clusters");
    }
    if (root_entries == 0 || (root_entries * kDirEntrySize) % kSectorSize != 0) {
        throw FtlError("root directory must fill whole sectors");
    }
    if (nor_capacity % nor_block != 0 || fat_offset % nor_block != 0) {
        throw FtlError("NOR capacity and FAT offset must be sector aligned");
    }
    if (fat_offset + fat_region_bytes() > nor_capacity) {
        throw FtlError("FAT region does not fit the NOR device");
    }
}

std::string WearReport::to_key_value() const {
    std::ostringstream os;
    os << "nand_erases_from_fat_ops=" << nand_erases_from_fat_ops << '\n'
       << "nand_erases_total=" << nand_erases_total << '\n'
       << "nor_erases_total=" << nor_erases_total << '\n'
       << "nor_page_programs=" << nor_page_programs << '\n'
       << "nand_page_programs=" << nand_page_programs << '\n';
    return os.str();
}

FlashImage::FlashImage(const FtlGeometry& g, std::uint32_t runtime_seed)
    : geometry_(g),
      runtime_seed_(runtime_seed),
      nor_(FlashKind::Nor, g.nor_page_size, 0, g.nor_pages_per_block, g.nor_capacity),
      nand_(FlashKind::Nand, g.nand_page_size, g.nand_spare_size, g.nand_pages_per_block, g.nand_capacity) {}

FlashImage FlashImage::format(const FtlGeometry& geometry, std::uint32_t runtime_seed) {
    geometry.validate();
    FlashImage image(geometry, runtime_seed);
    image.write_volume();
    return image;
}

void FlashImage::reformat() { write_volume(); }

void FlashImage::write_volume() {
    const FtlGeometry& g = geometry_;
    const std::uint64_t region_end = g.fat_offset + g.fat_region_bytes();

    Bytes volume(static_cast<std::size_t>(g.fat_region_bytes()), 0x00);
    std::span<std::uint8_t> boot(volume.data(), kSectorSize);
    boot[0] = 0xEB;
    boot[1] = 0x3C;
    boot[2] = 0x90;
    std::memcpy(&boot[kOffOem], "MPIFTL  ", 8);
    le::put16(boot, kOffBytesPerSector, kSectorSize);
    boot[kOffSectorsPerCluster] = static_cast<std::uint8_t>(g.cluster_size / kSectorSize);
    le::put16(boot, kOffReservedSectors, 1);
    boot[kOffFatCount] = 1;
    le::put16(boot, kOffRootEntries, static_cast<std::uint16_t>(g.root_entries));
    const std::uint64_t total_sectors = 1ULL + g.sectors_per_fat() + g.root_dir_sectors() +
                                        std::uint64_t{g.cluster_count()} * (g.cluster_size / kSectorSize);
    if (total_sectors <= 0xFFFF) {
        le::put16(boot, kOffTotalSectors16, static_cast<std::uint16_t>(total_sectors));
    } else {
        le::put32(boot, kOffTotalSectors32, static_cast<std::uint32_t>(total_sectors));
    }
    boot[kOffMedia] = 0xF8;
    le::put16(boot, kOffSectorsPerFat, static_cast<std::uint16_t>(g.sectors_per_fat()));
    boot[36] = 0x80;
    boot[kOffExtBootSig] = 0x29;
    le::put32(boot, kOffVolumeId, runtime_seed_);
    std::memcpy(&boot[kOffLabel], "MOTIONSENSE", 11);
    std::memcpy(&boot[kOffFsType], kFsType, 8);
    std::memcpy(&boot[kOffFtlMagic], kFtlMagic, 8);
    le::put32(boot, 70, 1);
    le::put64(boot, kOffNorCapacity, g.nor_capacity);
    le::put64(boot, kOffNandCapacity, g.nand_capacity);
    le::put32(boot, kOffNandPageSize, g.nand_page_size);
    le::put32(boot, kOffNandSpareSize, g.nand_spare_size);
    le::put32(boot, kOffNandPagesPerBlock, g.nand_pages_per_block);
    le::put64(boot, kOffDataOffset, g.data_offset);
    le::put32(boot, kOffClusterCount, g.cluster_count());
    boot[kOffSignature] = 0x55;
    boot[kOffSignature + 1] = 0xAA;
    // FAT entries 0 and 1 are reserved: media descriptor and end marker.
    volume[kSectorSize + 0] = 0xF8;
    volume[kSectorSize + 1] = 0xFF;
    volume[kSectorSize + 2] = 0xFF;
    volume[kSectorSize + 3] = 0xFF;

    for (std::size_t b = 0; b < nor_.block_count(); ++b) {
        nor_.erase_block(b, EraseCause::Format);
    }
    std::mt19937 runtime(runtime_seed_);
    Bytes page(nor_.page_size());
    for (std::size_t p = 0; p < nor_.page_count(); ++p) {
        const std::uint64_t base = std::uint64_t{p} * nor_.page_size();
        for (std::size_t i = 0; i < page.size(); ++i) {
            const std::uint64_t addr = base + i;
            const auto noise = static_cast<std::uint8_t>(runtime());
            page[i] = (addr >= g.fat_offset && addr < region_end) ? volume[static_cast<std::size_t>(addr - g.fat_offset)]
                                                                  : noise;
        }
        if (!all_ff(page)) {
            nor_.program_page(p, page);
        }
    }

    const std::size_t first_block = static_cast<std::size_t>(g.data_offset / nand_.block_size());
    for (std::size_t b = first_block; b < nand_.block_count(); ++b) {
        nand_.erase_block(b, EraseCause::Format);
    }

    fat_.assign(g.cluster_count() + 2, 0);
    fat_[0] = 0xFFF8;
    fat_[1] = kFatEndOfChain;
    files_.clear();
}

void FlashImage::commit_nor(std::map<std::uint64_t, Bytes>& dirty_blocks) {
    const std::uint32_t ps = nor_.page_size();
    for (auto& [block, content] : dirty_blocks) {
        nor_.erase_block(static_cast<std::size_t>(block), EraseCause::Metadata);
        for (std::uint32_t p = 0; p < nor_.pages_per_block(); ++p) {
            const std::span<const std::uint8_t> page(content.data() + std::size_t{p} * ps, ps);
            if (!all_ff(page)) {
                nor_.program_page(static_cast<std::size_t>(block) * nor_.pages_per_block() + p, page);
            }
        }
    }
}

FileEntry FlashImage::create_file(std::string_view name, std::uint64_t size, double created_t) {
    const std::string norm = normalize_83(name);
    if (lookup(norm) != nullptr) {
        throw FtlError("duplicate file name '" + norm + "'");
    }
    if (size > 0xFFFFFFFFULL) {
        throw FtlError("file size exceeds the FAT16 directory field");
    }
    if (files_.size() >= geometry_.root_entries) {
        throw AllocationError("root directory full");
    }
    const FatTimestamp ts = encode_fat_time(created_t);
    const std::uint32_t need = static_cast<std::uint32_t>((size + geometry_.cluster_size - 1) / geometry_.cluster_size);

    std::uint32_t start = 0;
    if (need > 0) {
        std::uint32_t run = 0;
        for (std::uint32_t c = 2; c < fat_.size(); ++c) {
            run = fat_[c] == 0 ? run + 1 : 0;
            if (run == need) {
                start = c - need + 1;
                break;
            }
        }
        if (start == 0) {
            throw AllocationError("no contiguous run of " + std::to_string(need) + " free clusters");
        }
    }

    const FtlGeometry& g = geometry_;
    const std::uint64_t fat_base = g.fat_offset + kSectorSize;
    const std::uint64_t root_base = fat_base + std::uint64_t{g.sectors_per_fat()} * kSectorSize;
    const auto slot = static_cast<std::uint32_t>(files_.size());

    std::map<std::uint64_t, Bytes> dirty;
    auto stage = [&](std::uint64_t offset, std::span<const std::uint8_t> bytes) {
        const std::uint64_t bs = nor_.block_size();
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            const std::uint64_t addr = offset + i;
            auto it = dirty.find(addr / bs);
            if (it == dirty.end()) {
                Bytes content(static_cast<std::size_t>(bs));
                nor_.read((addr / bs) * bs, content);
                it = dirty.emplace(addr / bs, std::move(content)).first;
            }
            it->second[static_cast<std::size_t>(addr % bs)] = bytes[i];
        }
    };

    if (need > 0) {
        Bytes chain(std::size_t{2} * need);
        for (std::uint32_t i = 0; i < need; ++i) {
            const std::uint16_t next = i + 1 == need ? kFatEndOfChain : static_cast<std::uint16_t>(start + i + 1);
            le::put16(chain, std::size_t{2} * i, next);
        }
        stage(fat_base + std::uint64_t{2} * start, chain);
    }

    Bytes dirent(kDirEntrySize, 0x00);
    std::fill_n(dirent.begin(), 11, static_cast<std::uint8_t>(' '));
    const auto dot = norm.find('.');
    const std::string base = norm.substr(0, dot);
    const std::string ext = dot == std::string::npos ? "" : norm.substr(dot + 1);
    std::memcpy(dirent.data(), base.data(), base.size());
    std::memcpy(dirent.data() + 8, ext.data(), ext.size());
    dirent[11] = 0x20;
    dirent[13] = ts.tenth;
    le::put16(dirent, 14, ts.time);
    le::put16(dirent, 16, ts.date);
    le::put16(dirent, 18, ts.date);
    le::put16(dirent, 22, ts.time);
    le::put16(dirent, 24, ts.date);
    le::put16(dirent, 26, static_cast<std::uint16_t>(start));
    le::put32(dirent, 28, static_cast<std::uint32_t>(size));
    stage(root_base + std::uint64_t{slot} * kDirEntrySize, dirent);

    commit_nor(dirty);

    for (std::uint32_t i = 0; i < need; ++i) {
        fat_[start + i] = i + 1 == need ? kFatEndOfChain : static_cast<std::uint16_t>(start + i + 1);
    }
    OpenFile f;
    f.entry.name = norm;
    f.entry.created_t = decode_fat_time(ts.date, ts.time, ts.tenth).value_or(created_t);
    f.entry.size = size;
    f.entry.start_cluster = start;
    f.dir_slot = slot;
    files_.push_back(std::move(f));
    return files_.back().entry;
}

FlashImage::OpenFile& FlashImage::open_file(std::string_view name) {
    const std::string norm = normalize_83(name);
    for (auto& f : files_) {
        if (f.entry.name == norm) return f;
    }
    throw FtlError("no such file '" + norm + "'");
}

const FlashImage::OpenFile* FlashImage::lookup(std::string_view name) const {
    for (const auto& f : files_) {
        if (f.entry.name == name) return &f;
    }
    return nullptr;
}

void FlashImage::program_data_page(const OpenFile& f, std::uint64_t logical_offset,
                                   std::span<const std::uint8_t> data) {
    const FtlGeometry& g = geometry_;
    const std::uint64_t addr =
        g.data_offset + std::uint64_t{f.entry.start_cluster - 2} * g.cluster_size + logical_offset;
    Bytes spare(g.nand_spare_size, 0xFF);
    le::put32(spare, kSpareValid, static_cast<std::uint32_t>(data.size()));
    le::put32(spare, kSpareOwner, f.entry.start_cluster);
    spare[kSpareMarker] = kDataMarker;
    nand_.program_page(static_cast<std::size_t>(addr / g.nand_page_size), data, spare);
}

std::uint64_t FlashImage::append(const FileEntry& entry, std::span<const std::uint8_t> bytes) {
    return append(entry.name, bytes);
}

std::uint64_t FlashImage::append(std::string_view name, std::span<const std::uint8_t> bytes) {
    OpenFile& f = open_file(name);
    if (bytes.empty()) {
        return f.entry.write_cursor;
    }
    if (f.sealed) {
        throw FtlError("file '" + f.entry.name + "' is sealed");
    }
    if (bytes.size() > f.entry.size - f.entry.write_cursor) {
        throw FtlError("append past the pre-allocated size of '" + f.entry.name + "'");
    }
    const std::size_t page = nand_.page_size();
    std::size_t pos = 0;
    std::uint64_t flushed = f.entry.write_cursor - f.tail.size();
    if (!f.tail.empty()) {
        const std::size_t take = std::min(page - f.tail.size(), bytes.size());
        f.tail.insert(f.tail.end(), bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(take));
        pos = take;
        if (f.tail.size() == page) {
            program_data_page(f, flushed, f.tail);
            flushed += page;
            f.tail.clear();
        }
    }
    while (bytes.size() - pos >= page) {
        program_data_page(f, flushed, bytes.subspan(pos, page));
        flushed += page;
        pos += page;
    }
    f.tail.insert(f.tail.end(), bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    f.entry.write_cursor += bytes.size();
    return f.entry.write_cursor;
}

void FlashImage::close(std::string_view name) {
    OpenFile& f = open_file(name);
    if (f.sealed) return;
    if (!f.tail.empty()) {
        program_data_page(f, f.entry.write_cursor - f.tail.size(), f.tail);
        f.tail.clear();
    }
    f.sealed = true;
}

void FlashImage::close_all() {
    for (auto& f : files_) {
        close(f.entry.name);
    }
}

bool FlashImage::is_sealed(std::string_view name) const {
    const auto* f = lookup(normalize_83(name));
    return f != nullptr && f->sealed;
}

std::vector<FileEntry> FlashImage::files() const {
    std::vector<FileEntry> out;
    out.reserve(files_.size());
    for (const auto& f : files_) out.push_back(f.entry);
    return out;
}

std::optional<FileEntry> FlashImage::find(std::string_view name) const {
    const auto* f = lookup(normalize_83(name));
    return f == nullptr ? std::nullopt : std::optional<FileEntry>(f->entry);
}

std::uint32_t FlashImage::free_clusters() const {
    return static_cast<std::uint32_t>(std::count(fat_.begin() + 2, fat_.end(), std::uint16_t{0}));
}

std::uint32_t FlashImage::largest_free_run() const {
    std::uint32_t best = 0, run = 0;
    for (std::size_t c = 2; c < fat_.size(); ++c) {
        run = fat_[c] == 0 ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

std::uint32_t FlashImage::free_dir_slots() const {
    return geometry_.root_entries - static_cast<std::uint32_t>(files_.size());
}

WearReport FlashImage::wear_report() const {
    WearReport r;
    r.nand_erases_from_fat_ops = nand_.erases_by(EraseCause::Metadata);
    r.nand_erases_total = nand_.erases_total();
    r.nor_erases_total = nor_.erases_total();
    r.nor_page_programs = nor_.programs_total();
    r.nand_page_programs = nand_.programs_total();
    return r;
}

Bytes FlashImage::raw_nor() const { return nor_.raw_image(); }

std::vector<ExtractedFile> mount_and_extract(std::span<const std::uint8_t> raw_nor,
                                             std::span<const std::uint8_t> raw_nand) {
    // Locate the boot sector among runtime data.
    std::optional<std::uint64_t> boot_at;
    for (std::uint64_t off = 0; off + kSectorSize <= raw_nor.size(); off += kSectorSize) {
        const auto s = raw_nor.subspan(static_cast<std::size_t>(off), kSectorSize);
        const bool magic = std::memcmp(&s[kOffFtlMagic], kFtlMagic, 8) == 0;
        const bool sig = s[kOffSignature] == 0x55 && s[kOffSignature + 1] == 0xAA &&
                         std::memcmp(&s[kOffFsType], kFsType, 8) == 0;
        if (magic || sig) {
            boot_at = off;
            break;
        }
    }
    if (!boot_at) {
        throw ParseError(0, "no FAT16 boot sector found in " + std::to_string(raw_nor.size()) + " NOR bytes");
    }
    const std::uint64_t b0 = *boot_at;
    const auto boot = raw_nor.subspan(static_cast<std::size_t>(b0), kSectorSize);
    if (boot[kOffSignature] != 0x55 || boot[kOffSignature + 1] != 0xAA) {
        throw ParseError(b0 + kOffSignature, "boot sector signature is not 0x55AA");
    }
    if (std::memcmp(&boot[kOffFsType], kFsType, 8) != 0) {
        throw ParseError(b0 + kOffFsType, "file system type is not FAT16");
    }
    if (std::memcmp(&boot[kOffFtlMagic], kFtlMagic, 8) != 0) {
        throw ParseError(b0 + kOffFtlMagic, "missing split-flash mapping block");
    }
    if (le::get16(boot, kOffBytesPerSector) != kSectorSize || boot[kOffFatCount] != 1 ||
        le::get16(boot, kOffReservedSectors) != 1) {
        throw ParseError(b0 + kOffBytesPerSector, "unsupported BPB layout");
    }

    FtlGeometry g;
    g.cluster_size = std::uint32_t{boot[kOffSectorsPerCluster]} * kSectorSize;
    g.root_entries = le::get16(boot, kOffRootEntries);
    g.fat_offset = b0;
    g.nor_capacity = le::get64(boot, kOffNorCapacity);
    g.nand_capacity = le::get64(boot, kOffNandCapacity);
    g.nand_page_size = le::get32(boot, kOffNandPageSize);
    g.nand_spare_size = le::get32(boot, kOffNandSpareSize);
    g.nand_pages_per_block = le::get32(boot, kOffNandPagesPerBlock);
    g.data_offset = le::get64(boot, kOffDataOffset);
    const std::uint32_t clusters = le::get32(boot, kOffClusterCount);

    if (raw_nor.size() != g.nor_capacity) {
        throw ParseError(raw_nor.size(), "NOR image is " + std::to_string(raw_nor.size()) +
                                             " bytes but the volume records " + std::to_string(g.nor_capacity));
    }
    if (g.nand_page_size == 0 || g.cluster_size == 0 || g.cluster_size % g.nand_page_size != 0 ||
        g.nand_capacity % g.nand_page_size != 0 || g.nand_spare_size <= kSpareMarker) {
        throw ParseError(b0 + kOffNandPageSize, "inconsistent NAND geometry");
    }
    if (clusters != g.cluster_count() || le::get16(boot, kOffSectorsPerFat) != g.sectors_per_fat()) {
        throw ParseError(b0 + kOffClusterCount, "cluster count does not match the recorded geometry");
    }
    const std::uint64_t stride = std::uint64_t{g.nand_page_size} + g.nand_spare_size;
    const std::uint64_t expected_nand = (g.nand_capacity / g.nand_page_size) * stride;
    if (raw_nand.size() != expected_nand) {
        throw ParseError(raw_nand.size(), "NAND image is " + std::to_string(raw_nand.size()) +
                                              " bytes but the volume records " + std::to_string(expected_nand));
    }
    if (b0 + g.fat_region_bytes() > raw_nor.size()) {
        throw ParseError(raw_nor.size(), "FAT region runs past the end of the NOR image");
    }

    const std::uint64_t fat_base = b0 + kSectorSize;
    const std::uint64_t root_base = fat_base + std::uint64_t{g.sectors_per_fat()} * kSectorSize;
    auto fat_entry = [&](std::uint32_t c) { return le::get16(raw_nor, static_cast<std::size_t>(fat_base + 2ULL * c)); };

    std::vector<ExtractedFile> out;
    for (std::uint32_t slot = 0; slot < g.root_entries; ++slot) {
        const std::uint64_t at = root_base + std::uint64_t{slot} * kDirEntrySize;
        const auto e = raw_nor.subspan(static_cast<std::size_t>(at), kDirEntrySize);
        if (e[0] == 0x00) break;
        if (e[0] == 0xE5 || (e[11] & 0x08) != 0) continue;

        ExtractedFile f;
        f.entry.name = name_from_dirent(e);
        const auto created = decode_fat_time(le::get16(e, 16), le::get16(e, 14), e[13]);
        if (!created) {
            throw ParseError(at + 13, "invalid creation timestamp for '" + f.entry.name + "'");
        }
        f.entry.created_t = *created;
        f.entry.start_cluster = le::get16(e, 26);
        f.entry.size = le::get32(e, 28);
        const std::uint32_t span = f.entry.cluster_span(g.cluster_size);
        if (span > 0) {
            if (f.entry.start_cluster < 2 || std::uint64_t{f.entry.start_cluster} + span > clusters + 2ULL) {
                throw ParseError(at + 26, "start cluster out of range for '" + f.entry.name + "'");
            }
            for (std::uint32_t i = 0; i < span; ++i) {
                const std::uint32_t c = f.entry.start_cluster + i;
                const std::uint16_t next = fat_entry(c);
                const bool last = i + 1 == span;
                if ((last && next < 0xFFF8) || (!last && next != c + 1)) {
                    throw ParseError(fat_base + 2ULL * c, "broken or non-contiguous cluster chain for '" +
                                                              f.entry.name + "'");
                }
            }
        }

        const std::uint64_t first_page =
            (g.data_offset + std::uint64_t{f.entry.start_cluster - 2} * g.cluster_size) / g.nand_page_size;
        const std::uint64_t pages = (f.entry.size + g.nand_page_size - 1) / g.nand_page_size;
        for (std::uint64_t p = 0; span > 0 && p < pages; ++p) {
            const std::uint64_t raw_at = (first_page + p) * stride;
            const auto main = raw_nand.subspan(static_cast<std::size_t>(raw_at), g.nand_page_size);
            const auto spare = raw_nand.subspan(static_cast<std::size_t>(raw_at + g.nand_page_size), g.nand_spare_size);
            if (all_ff(spare)) break;
            const std::uint32_t valid = le::get32(spare, kSpareValid);
            if (spare[kSpareMarker] != kDataMarker || valid == 0 || valid > g.nand_page_size ||
                le::get32(spare, kSpareOwner) != f.entry.start_cluster) {
                throw ParseError(raw_at + g.nand_page_size, "corrupt page metadata in '" + f.entry.name + "'");
            }
            f.data.insert(f.data.end(), main.begin(), main.begin() + valid);
            if (f.data.size() > f.entry.size) {
                throw ParseError(raw_at, "data exceeds pre-allocated size of '" + f.entry.name + "'");
            }
            if (valid < g.nand_page_size) break;
        }
        f.entry.write_cursor = f.data.size();
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace motionpi::ftl
