#include "motionpi/band/records.hpp"

#include <cmath>
#include <stdexcept>

#include "motionpi/signal/kernels.hpp"

namespace motionpi::band {

namespace {

void put16(Bytes& out, std::int16_t v) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<std::uint8_t>(u));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
}

std::int16_t get16(const std::uint8_t* p) { return static_cast<std::int16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void encode_imu(std::span<const signal::AccelSample> samples, const std::int16_t (&mag)[3], Bytes& out) {
    std::vector<std::int16_t> q(3 * samples.size());
    signal::kernels::active().quantize(samples, kAccelLsbPerG, q);
    out.reserve(out.size() + samples.size() * kImuRecordSize);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (int a = 0; a < 3; ++a) put16(out, q[3 * i + a]);
        for (int a = 0; a < 3; ++a) put16(out, 0);  // gyro is not modelled
        for (int a = 0; a < 3; ++a) put16(out, mag[a]);
    }
}

void encode_ppg(std::span<const PpgRecord> records, Bytes& out) {
    out.reserve(out.size() + records.size() * kPpgRecordSize);
    for (const auto& r : records) {
        for (auto c : r.channel) {
            out.push_back(static_cast<std::uint8_t>(c));
            out.push_back(static_cast<std::uint8_t>(c >> 8));
            out.push_back(static_cast<std::uint8_t>(c >> 16));
        }
    }
}

std::vector<ImuRecord> decode_imu(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kImuRecordSize != 0) {
        throw std::invalid_argument("IMU data is not a whole number of 18-byte records");
    }
    std::vector<ImuRecord> out(bytes.size() / kImuRecordSize);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * kImuRecordSize;
        for (int a = 0; a < 3; ++a) {
            out[i].accel[a] = get16(p + 2 * a);
            out[i].gyro[a] = get16(p + 6 + 2 * a);
            out[i].mag[a] = get16(p + 12 + 2 * a);
        }
    }
    return out;
}

std::vector<PpgRecord> decode_ppg(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kPpgRecordSize != 0) {
        throw std::invalid_argument("PPG data is not a whole number of 9-byte records");
    }
    std::vector<PpgRecord> out(bytes.size() / kPpgRecordSize);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * kPpgRecordSize;
        for (int c = 0; c < 3; ++c) {
            out[i].channel[c] = p[3 * c] | (p[3 * c + 1] << 8) | (std::uint32_t{p[3 * c + 2]} << 16);
        }
    }
    return out;
}

void write_imu_csv(std::ostream& os, std::span<const std::uint8_t> bytes, double start_t) {
    os << "t,ax_g,ay_g,az_g,gx,gy,gz,mx,my,mz\n";
    const auto records = decode_imu(bytes);
    char buf[160];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::snprintf(buf, sizeof buf, "%.5f,%.6f,%.6f,%.6f,%d,%d,%d,%d,%d,%d\n",
                      start_t + static_cast<double>(i) / kImuRateHz, r.accel[0] / kAccelLsbPerG,
                      r.accel[1] / kAccelLsbPerG, r.accel[2] / kAccelLsbPerG, r.gyro[0], r.gyro[1], r.gyro[2],
                      r.mag[0], r.mag[1], r.mag[2]);
        os << buf;
    }
}

void write_ppg_csv(std::ostream& os, std::span<const std::uint8_t> bytes, double start_t) {
    os << "t,ppg0,ppg1,ppg2\n";
    const auto records = decode_ppg(bytes);
    char buf[96];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::snprintf(buf, sizeof buf, "%.6f,%u,%u,%u\n", start_t + static_cast<double>(i) / kPpgRateHz,
                      r.channel[0], r.channel[1], r.channel[2]);
        os << buf;
    }
}

PpgRecord PpgSynth::next(double t) {
    // xorshift64* noise on top of a 1.2 Hz pulse wave.
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    const std::uint64_t r = state_ * 0x2545F4914F6CDD1DULL;
    // Reduce to a fraction of a cycle first; sin of a raw epoch time is slow.
    const double cycles = 1.2 * t;
    const double pulse = std::sin(2.0 * 3.14159265358979323846 * (cycles - std::floor(cycles)));
    PpgRecord rec{};
    for (int c = 0; c < 3; ++c) {
        const double noise = static_cast<double>((r >> (16 * c)) & 0xFFFF) / 65535.0 - 0.5;
        const double v = 8.0e6 + (200000.0 + 50000.0 * c) * pulse + 4000.0 * noise;
        rec.channel[c] = static_cast<std::uint32_t>(v) & 0xFFFFFF;
    }
    return rec;
}

}  // namespace motionpi::band
