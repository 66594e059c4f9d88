#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionpi/band/protocol.hpp"
#include "motionpi/band/records.hpp"
#include "motionpi/ftl/ftl.hpp"
#include "motionpi/signal/detector.hpp"

namespace motionpi::band {

class BandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Side { Left, Right };

[[nodiscard]] const char* to_string(Side s);

struct BandConfig {
    std::array<std::uint8_t, 6> mac{0x02, 0x4D, 0x50, 0x00, 0x00, 0x01};
    Side side = Side::Left;
    signal::TriggerConfig trigger;
    ftl::FtlGeometry geometry = ftl::FtlGeometry::desk();
    double drain_pct_per_hour = 3.0;
    double low_battery_pct = 20.0;
    double start_battery_pct = 100.0;
    // Each session file holds this much data before a new one is chained.
    int session_file_seconds = 3600;
    bool store_ppg = true;
    std::uint64_t seed = 1;

    /// Throws BandError on nonsensical values.
    void validate() const;
};

/// One wristband: command handling, sample storage through the FTL, on-band
/// MVPA detection and battery/storage telemetry.
class Wristband {
public:
    explicit Wristband(BandConfig cfg);

    /// Throws BandError when the command is not allowed in the current state.
    std::vector<BandNotification> handle(const BandCommand& cmd);

    /// Stores and evaluates samples (timestamps strictly increasing and not
    /// before the session start). Samples arriving while not collecting are
    /// discarded and counted in dropped_samples().
    std::vector<BandNotification> ingest(std::span<const signal::AccelSample> samples);

    /// Closes bouts that ended by t even if no samples arrived.
    std::vector<BandNotification> advance_to(double t);

    /// Drains the battery by elapsed seconds at the configured rate.
    std::vector<BandNotification> tick_battery(double elapsed_s, double t);

    /// Charger attached or removed. Attaching restores a full battery.
    std::vector<BandNotification> set_charging(bool charging, double t);

    [[nodiscard]] const BandConfig& config() const { return cfg_; }
    [[nodiscard]] std::string mac_string() const;
    [[nodiscard]] bool collecting() const { return collecting_; }
    [[nodiscard]] bool clock_set() const { return clock_set_; }
    [[nodiscard]] const std::string& participant_id() const { return participant_id_; }
    [[nodiscard]] double clock() const { return clock_; }
    [[nodiscard]] double battery_pct() const;
    [[nodiscard]] bool charging() const { return charging_; }
    [[nodiscard]] double storage_pct() const;
    [[nodiscard]] std::vector<ftl::FileEntry> files() const { return image_.files(); }
    [[nodiscard]] const ftl::FlashImage& image() const { return image_; }
    [[nodiscard]] std::uint64_t stored_samples() const { return stored_samples_; }
    [[nodiscard]] std::uint64_t dropped_samples() const { return dropped_samples_; }
    [[nodiscard]] std::uint64_t imu_bytes_written() const { return imu_bytes_; }
    [[nodiscard]] bool storage_full() const { return storage_full_; }

private:
    struct Stream {
        std::string prefix;
        std::size_t record_size;
        int rate_hz;
        std::optional<std::string> file;
        std::uint64_t room = 0;
        int next_index = 1;
    };

    void start(std::vector<BandNotification>& out);
    void stop(double t, std::vector<BandNotification>& out);
    bool open_next(Stream& s, double t, std::vector<BandNotification>& out);
    bool write(Stream& s, std::span<const std::uint8_t> bytes, std::span<const double> times, std::vector<BandNotification>& out);
    void on_bouts(const std::vector<signal::BoutEvent>& events, std::vector<BandNotification>& out);
    BandNotification storage_notification(double t) const;

    BandConfig cfg_;
    ftl::FlashImage image_;
    std::string participant_id_;
    double clock_ = 0.0;
    double last_sample_t_ = 0.0;
    bool clock_set_ = false;
    bool collecting_ = false;
    bool storage_full_ = false;
    std::unique_ptr<signal::MvpaDetector> detector_;
    Stream imu_;
    Stream ppg_;
    PpgSynth ppg_synth_;
    std::int16_t mag_[3];

    double battery_at_charge_;
    double drained_seconds_ = 0.0;
    bool below_low_ = false;
    bool charging_ = false;

    std::uint64_t stored_samples_ = 0;
    std::uint64_t dropped_samples_ = 0;
    std::uint64_t imu_bytes_ = 0;
};

}  // namespace motionpi::band
