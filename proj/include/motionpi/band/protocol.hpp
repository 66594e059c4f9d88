#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "motionpi/common/codec.hpp"

// Band <-> phone messages. Wire form: 1-byte kind tag followed by a
// little-endian payload.
//
//   Commands (phone -> band)
//     0x01 StartCollection   (empty)
//     0x02 StopCollection    (empty)
//     0x03 SetParticipantId  u8 length, UTF-8 bytes (1..32)
//     0x04 SetTime           u64 UNIX milliseconds
//     0x05 EraseStorage      (empty)
//
//   Notifications (band -> phone), all start with u64 UNIX milliseconds
//     0x81 MvpaEpoch         u16 MVPA bouts in the epoch window
//     0x82 BatteryLevel      u16 percent x 100
//     0x83 StorageLevel      u16 percent x 100
//     0x84 ChargingStatus    u8 0/1
//     0x85 BoutSummary       f64 mean ENMO (g), u8 is_mvpa, u16 sample count
namespace motionpi::band {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CommandKind : std::uint8_t {
    StartCollection = 0x01,
    StopCollection = 0x02,
    SetParticipantId = 0x03,
    SetTime = 0x04,
    EraseStorage = 0x05,
};

struct BandCommand {
    CommandKind kind = CommandKind::StartCollection;
    std::string participant_id;  // SetParticipantId
    double time = 0.0;           // SetTime, UNIX seconds

    static BandCommand start() { return {CommandKind::StartCollection, {}, 0.0}; }
    static BandCommand stop() { return {CommandKind::StopCollection, {}, 0.0}; }
    static BandCommand set_participant(std::string id) { return {CommandKind::SetParticipantId, std::move(id), 0.0}; }
    static BandCommand set_time(double t) { return {CommandKind::SetTime, {}, t}; }
    static BandCommand erase() { return {CommandKind::EraseStorage, {}, 0.0}; }
};

enum class NotificationKind : std::uint8_t {
    MvpaEpoch = 0x81,
    BatteryLevel = 0x82,
    StorageLevel = 0x83,
    ChargingStatus = 0x84,
    BoutSummary = 0x85,
};

struct BandNotification {
    NotificationKind kind = NotificationKind::MvpaEpoch;
    double t = 0.0;
    double level_pct = 0.0;   // BatteryLevel, StorageLevel
    bool flag = false;        // ChargingStatus, BoutSummary is_mvpa
    int count = 0;            // MvpaEpoch bouts, BoutSummary samples
    double mean_enmo = 0.0;   // BoutSummary
    double bout_start = 0.0;  // BoutSummary, not on the wire (t - 15 s)
};

[[nodiscard]] const char* to_string(CommandKind k);
[[nodiscard]] const char* to_string(NotificationKind k);

[[nodiscard]] Bytes encode(const BandCommand& cmd);
[[nodiscard]] BandCommand decode_command(std::span<const std::uint8_t> wire);
[[nodiscard]] Bytes encode(const BandNotification& n);
/// bout_seconds restores BoutSummary::bout_start.
[[nodiscard]] BandNotification decode_notification(std::span<const std::uint8_t> wire, int bout_seconds = 15);

}  // namespace motionpi::band
