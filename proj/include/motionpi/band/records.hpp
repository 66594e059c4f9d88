#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "motionpi/common/codec.hpp"
#include "motionpi/signal/types.hpp"

// On-flash sample layouts. Timestamps are implicit: record i of a file was
// sampled at created_t + i / rate.
namespace motionpi::band {

inline constexpr int kImuRateHz = 32;
inline constexpr std::size_t kImuRecordSize = 18;  // 9 x int16 LE
inline constexpr double kAccelLsbPerG = 2048.0;    // +-16 g range
inline constexpr int kPpgRateHz = 64;
inline constexpr std::size_t kPpgRecordSize = 9;  // 3 x uint24 LE

struct ImuRecord {
    std::int16_t accel[3];
    std::int16_t gyro[3];
    std::int16_t mag[3];
};

struct PpgRecord {
    std::uint32_t channel[3];  // 24-bit
};

/// Quantizes accelerometer samples and appends IMU records to out.
void encode_imu(std::span<const signal::AccelSample> samples, const std::int16_t (&mag)[3], Bytes& out);
void encode_ppg(std::span<const PpgRecord> records, Bytes& out);

/// Throws std::invalid_argument when the byte count is not a whole number
/// of records.
[[nodiscard]] std::vector<ImuRecord> decode_imu(std::span<const std::uint8_t> bytes);
[[nodiscard]] std::vector<PpgRecord> decode_ppg(std::span<const std::uint8_t> bytes);

/// CSV export used by the extraction tool. Columns are documented in the
/// header line.
void write_imu_csv(std::ostream& os, std::span<const std::uint8_t> bytes, double start_t);
void write_ppg_csv(std::ostream& os, std::span<const std::uint8_t> bytes, double start_t);

/// Deterministic stand-in for the optical front end.
class PpgSynth {
public:
    explicit PpgSynth(std::uint64_t seed) : state_(seed | 1) {}
    PpgRecord next(double t);

private:
    std::uint64_t state_;
};

/// Bytes per second of raw storage for the IMU and PPG streams together.
[[nodiscard]] constexpr std::uint64_t storage_bytes_per_second() {
    return kImuRecordSize * kImuRateHz + kPpgRecordSize * kPpgRateHz;
}

/// Raw storage for days of collection at hours_per_day.
[[nodiscard]] constexpr std::uint64_t storage_bytes_for(std::uint64_t days, std::uint64_t hours_per_day) {
    return storage_bytes_per_second() * 3600 * hours_per_day * days;
}

}  // namespace motionpi::band
