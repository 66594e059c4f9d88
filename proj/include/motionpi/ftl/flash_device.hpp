#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace motionpi::ftl {

using Bytes = std::vector<std::uint8_t>;

enum class FlashKind { Nor, Nand };

/// Why a block was erased; lets the wear report attribute erases.
enum class EraseCause { Format, Metadata, Data };

class FlashError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Page-programmable, block-erasable flash model. A page must be in the
/// erased state (all 0xFF) before it is programmed; anything else throws.
/// Pages are stored sparsely, so large erased devices cost no memory.
class FlashDevice {
public:
    FlashDevice(FlashKind kind, std::uint32_t page_size, std::uint32_t spare_size, std::uint32_t pages_per_block,
                std::uint64_t capacity);

    [[nodiscard]] FlashKind kind() const { return kind_; }
    [[nodiscard]] std::uint32_t page_size() const { return page_size_; }
    [[nodiscard]] std::uint32_t spare_size() const { return spare_size_; }
    [[nodiscard]] std::uint32_t pages_per_block() const { return pages_per_block_; }
    [[nodiscard]] std::uint64_t block_size() const { return std::uint64_t{page_size_} * pages_per_block_; }
    [[nodiscard]] std::uint64_t capacity() const { return capacity_; }
    [[nodiscard]] std::size_t page_count() const { return pages_.size(); }
    [[nodiscard]] std::size_t block_count() const { return erase_counts_.size(); }

    [[nodiscard]] bool is_erased(std::size_t page) const;
    /// Reads main-area bytes; may span pages. Erased pages read as 0xFF.
    void read(std::uint64_t offset, std::span<std::uint8_t> out) const;
    void read_spare(std::size_t page, std::span<std::uint8_t> out) const;

    /// Programs one page. Short main/spare inputs are padded with 0xFF.
    void program_page(std::size_t page, std::span<const std::uint8_t> main, std::span<const std::uint8_t> spare = {});
    void erase_block(std::size_t block, EraseCause cause);

    [[nodiscard]] const std::vector<std::uint32_t>& erase_counts() const { return erase_counts_; }
    [[nodiscard]] const std::vector<std::uint32_t>& write_counts() const { return write_counts_; }
    [[nodiscard]] std::uint64_t erases_total() const;
    [[nodiscard]] std::uint64_t erases_by(EraseCause cause) const;
    [[nodiscard]] std::uint64_t programs_total() const { return programs_total_; }

    /// Chip-off style dump: each page's main area followed by its spare
    /// area, pages in address order.
    [[nodiscard]] Bytes raw_image() const;
    [[nodiscard]] std::uint64_t raw_size() const {
        return static_cast<std::uint64_t>(pages_.size()) * (page_size_ + spare_size_);
    }

private:
    FlashKind kind_;
    std::uint32_t page_size_;
    std::uint32_t spare_size_;
    std::uint32_t pages_per_block_;
    std::uint64_t capacity_;
    std::vector<Bytes> pages_;  // empty == erased
    std::vector<std::uint32_t> erase_counts_;
    std::vector<std::uint32_t> write_counts_;
    std::uint64_t erases_by_cause_[3] = {0, 0, 0};
    std::uint64_t programs_total_ = 0;
};

}  // namespace motionpi::ftl
