#include "motionpi/common/clock.hpp"

#include <chrono>
#include <stdexcept>

namespace motionpi {

void VirtualClock::set(double t) {
    if (t < now_) {
        throw std::logic_error("virtual clock cannot move backwards");
    }
    now_ = t;
}

void VirtualClock::advance(double seconds) {
    if (seconds < 0) {
        throw std::logic_error("virtual clock cannot move backwards");
    }
    now_ += seconds;
}

std::atomic<std::uint64_t> SystemClock::reads_{0};

double SystemClock::now() const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    const auto since = std::chrono::system_clock::now().time_since_epoch();
    return std::chrono::duration<double>(since).count();
}

std::uint64_t SystemClock::read_count() { return reads_.load(std::memory_order_relaxed); }

}  // namespace motionpi
