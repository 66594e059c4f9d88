#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "motionpi/ftl/flash_device.hpp"

namespace motionpi::ftl {

class FtlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No contiguous run of free clusters (or no free directory slot).
class AllocationError : public FtlError {
public:
    using FtlError::FtlError;
};

/// Raw image could not be mounted. offset() points at the offending byte of
/// the NOR image (or of the NAND image for data-area failures).
class ParseError : public FtlError {
public:
    ParseError(std::uint64_t offset, const std::string& what)
        : FtlError("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
    [[nodiscard]] std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

inline constexpr std::uint32_t kSectorSize = 512;
inline constexpr std::uint32_t kDirEntrySize = 32;
inline constexpr std::uint32_t kFat16MaxClusters = 65524;
inline constexpr std::uint64_t kMiB = 1024 * 1024;

/// Split-device volume layout: boot sector, FAT and root directory on NOR
/// at fat_offset; the cluster heap on NAND starting at data_offset.
struct FtlGeometry {
    std::uint32_t cluster_size = 4096;
    std::uint32_t root_entries = 512;

    std::uint64_t nor_capacity = 1 * kMiB;
    std::uint32_t nor_page_size = 256;
    std::uint32_t nor_pages_per_block = 16;  // 4 KiB sectors
    std::uint64_t fat_offset = 128 * 1024;

    std::uint64_t nand_capacity = 16 * kMiB;
    std::uint32_t nand_page_size = 4096;
    std::uint32_t nand_spare_size = 64;
    std::uint32_t nand_pages_per_block = 64;  // 256 KiB blocks
    std::uint64_t data_offset = 0;

    /// NOR 1 MiB / NAND 16 MiB with 4 KiB clusters.
    [[nodiscard]] static FtlGeometry desk();
    /// NOR 8 MiB / NAND 4 GiB. FAT16 tops out at 65524 clusters, so this
    /// layout needs 64 KiB clusters and reserves the first NAND MiB.
    [[nodiscard]] static FtlGeometry full_scale();

    /// Throws FtlError when the layout cannot host a volume.
    void validate() const;

    [[nodiscard]] std::uint32_t cluster_count() const;
    [[nodiscard]] std::uint32_t sectors_per_fat() const;
    [[nodiscard]] std::uint32_t root_dir_sectors() const;
    /// Bytes from fat_offset through the end of the root directory.
    [[nodiscard]] std::uint64_t fat_region_bytes() const;
};

struct FileEntry {
    std::string name;  // 8.3, upper case, e.g. "IMU00001.BIN"
    double created_t = 0.0;
    std::uint64_t size = 0;
    std::uint32_t start_cluster = 0;
    std::uint64_t write_cursor = 0;

    [[nodiscard]] std::uint32_t cluster_span(std::uint32_t cluster_size) const {
        return static_cast<std::uint32_t>((size + cluster_size - 1) / cluster_size);
    }
};

struct WearReport {
    std::uint64_t nand_erases_from_fat_ops = 0;
    std::uint64_t nand_erases_total = 0;
    std::uint64_t nor_erases_total = 0;
    std::uint64_t nor_page_programs = 0;
    std::uint64_t nand_page_programs = 0;

    /// Flat key=value block, one pair per line.
    [[nodiscard]] std::string to_key_value() const;
};

struct ExtractedFile {
    FileEntry entry;
    Bytes data;
};

/// Formatted NOR + NAND pair with the pre-allocating FAT16 on top.
/// create_file touches only NOR; append touches only NAND.
class FlashImage {
public:
    /// Formats fresh devices. runtime_seed fills the NOR outside the volume
    /// with opaque bytes standing in for firmware runtime data.
    [[nodiscard]] static FlashImage format(const FtlGeometry& geometry, std::uint32_t runtime_seed = 0x4D504931);

    /// Re-formats in place. Erase counters keep accumulating.
    void reformat();

    FileEntry create_file(std::string_view name, std::uint64_t size, double created_t);

    /// Programs bytes at the file's cursor; returns the new cursor. Only
    /// whole NAND pages are programmed; a partial trailing page is held
    /// until close().
    std::uint64_t append(const FileEntry& entry, std::span<const std::uint8_t> bytes);
    std::uint64_t append(std::string_view name, std::span<const std::uint8_t> bytes);

    /// Flushes the partial trailing page and seals the file.
    void close(std::string_view name);
    void close_all();
    [[nodiscard]] bool is_sealed(std::string_view name) const;

    [[nodiscard]] std::vector<FileEntry> files() const;
    [[nodiscard]] std::optional<FileEntry> find(std::string_view name) const;
    [[nodiscard]] std::uint32_t free_clusters() const;
    [[nodiscard]] std::uint32_t largest_free_run() const;
    [[nodiscard]] std::uint32_t free_dir_slots() const;

    [[nodiscard]] const FtlGeometry& geometry() const { return geometry_; }
    [[nodiscard]] const FlashDevice& nor() const { return nor_; }
    [[nodiscard]] const FlashDevice& nand() const { return nand_; }
    [[nodiscard]] WearReport wear_report() const;

    /// NOR is dumped as its main area (exact capacity); NAND as
    /// main + spare per page.
    [[nodiscard]] Bytes raw_nor() const;
    [[nodiscard]] Bytes raw_nand() const { return nand_.raw_image(); }

private:
    struct OpenFile {
        FileEntry entry;
        std::uint32_t dir_slot = 0;
        Bytes tail;
        bool sealed = false;
    };

    FlashImage(const FtlGeometry& geometry, std::uint32_t runtime_seed);
    void write_volume();
    void commit_nor(std::map<std::uint64_t, Bytes>& dirty_blocks);
    void program_data_page(const OpenFile& f, std::uint64_t logical_offset, std::span<const std::uint8_t> data);
    OpenFile& open_file(std::string_view name);
    const OpenFile* lookup(std::string_view name) const;

    FtlGeometry geometry_;
    std::uint32_t runtime_seed_;
    FlashDevice nor_;
    FlashDevice nand_;
    std::vector<std::uint16_t> fat_;  // mirror of the on-NOR table
    std::vector<OpenFile> files_;
};

/// Locates the volume on a raw NOR dump by boot-sector scan and returns
/// every file's metadata and bytes up to its write cursor. Fails closed:
/// any inconsistency throws ParseError and nothing is returned.
[[nodiscard]] std::vector<ExtractedFile> mount_and_extract(std::span<const std::uint8_t> raw_nor,
                                                           std::span<const std::uint8_t> raw_nand);

/// Normalizes and validates an 8.3 name. Throws FtlError when invalid.
[[nodiscard]] std::string normalize_83(std::string_view name);

}  // namespace motionpi::ftl
