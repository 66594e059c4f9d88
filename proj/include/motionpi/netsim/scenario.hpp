#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "motionpi/band/wristband.hpp"
#include "motionpi/common/civil_time.hpp"
#include "motionpi/netsim/activity.hpp"
#include "motionpi/netsim/link.hpp"
#include "motionpi/phone/agent.hpp"

// Scenario file (JSON). Times of day are local "HH:MM"; outage times are
// seconds from local midnight of start_date.
//
// {
//   "name": "two-participants",            optional
//   "seed": 42,                            optional, default 1
//   "start_date": "2025-01-06",            optional
//   "days": 1,                             required, 1..60
//   "utc_offset_minutes": 0,               optional
//   "participants": [{                     required, non-empty
//     "participant_id": "p01",             required, unique, 1..32 chars
//     "phone_id": "phone-p01",             optional
//     "rng_seed": 7,                       optional, derived from seed
//     "activity": {...},                   optional, see ActivityProfile
//     "band": {"mac": "02:4D:50:00:01:01", "side": "left", "start_battery_pct": 100}
//   }],
//   "outages": {"drop_mode": "timeout",
//               "intervals": [{"start_s": 36000, "end_s": 39600, "drop_mode": "mid_body_cut"}]},
//   "network": {"latency_s": 0.05, "duplicate_delivery": false},
//   "overrides": {"trigger": {...}, "band_drain_pct_per_hour": 3, "phone_drain_pct_per_hour": 3,
//                 "geometry": "scenario" | "desk" | "full_scale", "store_ppg": true,
//                 "session_file_seconds": 3600},
//   "behavior": {"complete_probability": 0.6, "decline_probability": 0.2,
//                "response_delay_s": {"min": 30, "max": 1500}},
//   "rates": {"gps_interval_s": 60, "battery_interval_s": 3600},
//   "upload": {...},                       agent upload settings
//   "daily": {"connect": "07:30", "stop": "21:30", "charge": "22:00"},
//   "drain_s": 3600                        upload time after the last day or outage
// }
namespace motionpi::netsim {

struct ParticipantSpec {
    std::string participant_id;
    std::string phone_id;
    std::uint64_t rng_seed = 0;
    ActivityProfile activity;
    std::array<std::uint8_t, 6> band_mac{};
    band::Side side = band::Side::Left;
    double band_start_battery_pct = 100.0;
};

struct BehaviorPolicy {
    double complete_probability = 0.6;
    double decline_probability = 0.2;
    double delay_min_s = 30.0;
    double delay_max_s = 1500.0;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    LocalDate start_date{2025, 1, 6};
    int days = 1;
    int utc_offset_minutes = 0;
    std::vector<ParticipantSpec> participants;
    OutageSchedule outages;
    LinkOptions network;
    signal::TriggerConfig trigger;
    double band_drain_pct_per_hour = 3.0;
    double phone_drain_pct_per_hour = 3.0;
    std::string geometry = "scenario";
    bool store_ppg = true;
    int session_file_seconds = 3600;
    BehaviorPolicy behavior;
    double gps_interval_s = 60.0;
    double battery_interval_s = 3600.0;
    phone::UploadConfig upload;
    int connect_s = 7 * 3600 + 30 * 60;
    int stop_s = 21 * 3600 + 30 * 60;
    int charge_s = 22 * 3600;
    double drain_s = 3600.0;

    /// Throws std::invalid_argument with the JSON path of the first problem,
    /// e.g. "scenario.participants[1].activity.kind: ...".
    static Scenario from_json(const Json& doc);
    static Scenario load(const std::filesystem::path& file);
    /// Fully expanded form; from_json(to_json()) reproduces the scenario.
    [[nodiscard]] Json to_json() const;

    [[nodiscard]] ftl::FtlGeometry band_geometry() const;
    /// Local midnight of start_date.
    [[nodiscard]] double start_t() const;
    /// Local midnight after the last day.
    [[nodiscard]] double end_t() const;
};

/// 256 MiB NAND with 8 KiB clusters: two days of IMU and PPG data fit.
[[nodiscard]] ftl::FtlGeometry scenario_geometry();

}  // namespace motionpi::netsim
