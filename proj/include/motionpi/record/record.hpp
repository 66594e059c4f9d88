#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

// The record envelope shared by the phone outbox, the upload wire format and
// the server store. Field order on disk and on the wire:
//   record_id, record_type, participant_id, username, phone_id, timestamp, payload
namespace motionpi::record {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

enum class RecordType { Gps, Enmo, Survey, Battery, Event };

inline constexpr std::array<RecordType, 5> kAllTypes{RecordType::Gps, RecordType::Enmo, RecordType::Survey,
                                                     RecordType::Battery, RecordType::Event};

[[nodiscard]] const char* to_string(RecordType t);
[[nodiscard]] std::optional<RecordType> parse_record_type(std::string_view s);

/// Event kinds accepted in event payloads.
inline constexpr std::array<std::string_view, 16> kEventKinds{
    "bluetooth_on",       "bluetooth_off",       "band_connected",   "band_disconnected",
    "collection_enabled", "collection_disabled", "battery_below_20", "survey_triggered",
    "survey_notified",    "survey_declined",     "survey_expired",   "survey_completed",
    "survey_suppressed",  "survey_missed",       "signup",           "upload_quarantined"};

class RecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataRecord {
    std::string record_id;
    RecordType type = RecordType::Event;
    std::string participant_id;
    std::string username;
    std::string phone_id;
    double timestamp = 0.0;
    Json payload = Json::object();

    [[nodiscard]] OrderedJson to_json() const;
    /// Validates first; throws RecordError naming the offending field.
    [[nodiscard]] static DataRecord from_json(const Json& doc);
};

/// Full envelope + payload check. Returns a message of the form
/// "<field path>: <problem>" or nullopt when the document is acceptable.
[[nodiscard]] std::optional<std::string> validate_record(const Json& doc);
[[nodiscard]] std::optional<std::string> validate_payload(RecordType type, const Json& payload);

/// "AA:BB:CC:DD:EE:FF", upper-case hex.
[[nodiscard]] bool is_mac(std::string_view s);

}  // namespace motionpi::record
