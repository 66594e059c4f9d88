#pragma once

#include <atomic>
#include <cstdint>

namespace motionpi {

/// Seconds since the UNIX epoch, as a double. Every component reads time
/// through this interface so simulations can drive a virtual clock.
class Clock {
public:
    virtual ~Clock() = default;
    [[nodiscard]] virtual double now() const = 0;
};

/// Manually stepped clock used by tests and the scenario harness.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(double start = 0.0) : now_(start) {}

    [[nodiscard]] double now() const override { return now_; }
    void set(double t);
    void advance(double seconds);

private:
    double now_;
};

/// Wall-clock time. Reads are counted so tests can audit that simulated
/// runs never touch real time.
class SystemClock final : public Clock {
public:
    [[nodiscard]] double now() const override;

    [[nodiscard]] static std::uint64_t read_count();

private:
    static std::atomic<std::uint64_t> reads_;
};

}  // namespace motionpi
