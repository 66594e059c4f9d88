#include "motionpi/ftl/flash_device.hpp"

#include <algorithm>
#include <string>

namespace motionpi::ftl {

FlashDevice::FlashDevice(FlashKind kind, std::uint32_t page_size, std::uint32_t spare_size,
                         std::uint32_t pages_per_block, std::uint64_t capacity)
    : kind_(kind), page_size_(page_size), spare_size_(spare_size), pages_per_block_(pages_per_block),
      capacity_(capacity) {
    if (page_size == 0 || pages_per_block == 0) {
        throw std::invalid_argument("flash page size and pages per block must be positive");
    }
    if (capacity % block_size() != 0) {
        throw std::invalid_argument("flash capacity must be a whole number of blocks");
    }
    const auto pages = static_cast<std::size_t>(capacity / page_size);
    pages_.resize(pages);
    write_counts_.assign(pages, 0);
    erase_counts_.assign(static_cast<std::size_t>(capacity / block_size()), 0);
}

bool FlashDevice::is_erased(std::size_t page) const { return pages_.at(page).empty(); }

void FlashDevice::read(std::uint64_t offset, std::span<std::uint8_t> out) const {
    if (offset > capacity_ || out.size() > capacity_ - offset) {
        throw std::out_of_range("flash read beyond device capacity");
    }
    std::size_t done = 0;
    while (done < out.size()) {
        const std::uint64_t addr = offset + done;
        const auto page = static_cast<std::size_t>(addr / page_size_);
        const auto within = static_cast<std::size_t>(addr % page_size_);
        const std::size_t n = std::min<std::size_t>(page_size_ - within, out.size() - done);
        const Bytes& p = pages_[page];
        if (p.empty()) {
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(done), n, std::uint8_t{0xFF});
        } else {
            std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(within), n,
                        out.begin() + static_cast<std::ptrdiff_t>(done));
        }
        done += n;
    }
}

void FlashDevice::read_spare(std::size_t page, std::span<std::uint8_t> out) const {
    if (out.size() > spare_size_) {
        throw std::out_of_range("spare read larger than spare area");
    }
    const Bytes& p = pages_.at(page);
    if (p.empty()) {
        std::fill(out.begin(), out.end(), std::uint8_t{0xFF});
    } else {
        std::copy_n(p.begin() + page_size_, out.size(), out.begin());
    }
}

void FlashDevice::program_page(std::size_t page, std::span<const std::uint8_t> main,
                               std::span<const std::uint8_t> spare) {
    if (page >= pages_.size()) {
        throw std::out_of_range("program beyond device capacity");
    }
    if (main.size() > page_size_ || spare.size() > spare_size_) {
        throw std::invalid_argument("program data larger than page");
    }
    if (!pages_[page].empty()) {
        throw FlashError("page " + std::to_string(page) + " programmed twice without an erase");
    }
    Bytes p(page_size_ + spare_size_, 0xFF);
    std::copy(main.begin(), main.end(), p.begin());
    std::copy(spare.begin(), spare.end(), p.begin() + page_size_);
    pages_[page] = std::move(p);
    ++write_counts_[page];
    ++programs_total_;
}

void FlashDevice::erase_block(std::size_t block, EraseCause cause) {
    if (block >= erase_counts_.size()) {
        throw std::out_of_range("erase beyond device capacity");
    }
    const std::size_t first = block * pages_per_block_;
    for (std::size_t i = first; i < first + pages_per_block_; ++i) {
        Bytes().swap(pages_[i]);
    }
    ++erase_counts_[block];
    ++erases_by_cause_[static_cast<int>(cause)];
}

std::uint64_t FlashDevice::erases_total() const {
    return erases_by_cause_[0] + erases_by_cause_[1] + erases_by_cause_[2];
}

std::uint64_t FlashDevice::erases_by(EraseCause cause) const { return erases_by_cause_[static_cast<int>(cause)]; }

Bytes FlashDevice::raw_image() const {
    const std::size_t stride = page_size_ + spare_size_;
    Bytes out(pages_.size() * stride, 0xFF);
    for (std::size_t i = 0; i < pages_.size(); ++i) {
        if (!pages_[i].empty()) {
            std::copy(pages_[i].begin(), pages_[i].end(), out.begin() + static_cast<std::ptrdiff_t>(i * stride));
        }
    }
    return out;
}

}  // namespace motionpi::ftl
