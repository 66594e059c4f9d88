#pragma once

#include <array>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "motionpi/common/civil_time.hpp"
#include "motionpi/common/random.hpp"
#include "motionpi/ema/survey.hpp"

namespace motionpi::ema {

class SurveyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Daily collection window in local seconds since midnight, [start, end).
struct CollectionWindow {
    int start_s = 7 * 3600 + 30 * 60;
    int end_s = 21 * 3600 + 30 * 60;

    void validate() const;
    [[nodiscard]] bool contains(double seconds_of_day) const {
        return seconds_of_day >= start_s && seconds_of_day < end_s;
    }
};

struct Block {
    const char* name;
    int start_s;
    int end_s;
};

/// Morning [07:30,12:00), afternoon [12:00,17:00), evening [17:00,21:30).
[[nodiscard]] const std::array<Block, 3>& random_blocks();

/// One uniformly drawn time per block (UNIX seconds, millisecond grid).
/// Same date and seed always give the same times.
[[nodiscard]] std::array<double, 3> plan_random_surveys(LocalDate date, std::uint64_t seed,
                                                        const LocalCalendar& calendar);

enum class SurveyKind { Random, Activity };
enum class SurveyStatus { Pending, Completed, Declined, Expired };

[[nodiscard]] const char* to_string(SurveyKind k);
[[nodiscard]] const char* to_string(SurveyStatus s);

struct SurveyInstance {
    std::string id;
    SurveyKind kind = SurveyKind::Random;
    double triggered_t = 0.0;
    double expires_t = 0.0;
    SurveyStatus status = SurveyStatus::Pending;
    std::vector<Response> responses;  // only when Completed
    std::optional<double> resolved_t;
    int block = -1;  // random surveys only
    std::optional<std::string> band_mac;

    [[nodiscard]] bool terminal() const { return status != SurveyStatus::Pending; }
};

enum class EventKind {
    BluetoothOn,
    BluetoothOff,
    BandConnected,
    BandDisconnected,
    CollectionEnabled,
    CollectionDisabled,
    BatteryBelow20,
    SurveyTriggered,
    SurveyNotified,
    SurveyDeclined,
    SurveyExpired,
    SurveyCompleted,
    SurveySuppressed,
    SurveyMissed,
};

[[nodiscard]] const char* to_string(EventKind k);

struct EventRecord {
    EventKind kind;
    std::string participant_id;
    std::string phone_id;
    double timestamp = 0.0;
    std::optional<std::string> band_mac;
    std::string local_time;
    std::optional<std::string> survey_id;
    Json detail = Json::object();
};

struct SurveyAction {
    enum class Type { Complete, Decline, Clock };
    Type type = Type::Clock;
    double t = 0.0;
    std::vector<Response> responses;

    static SurveyAction complete(double t, std::vector<Response> r) { return {Type::Complete, t, std::move(r)}; }
    static SurveyAction decline(double t) { return {Type::Decline, t, {}}; }
    static SurveyAction clock(double t) { return {Type::Clock, t, {}}; }
};

struct SchedulerConfig {
    CollectionWindow window;
    double expiry_s = 1800.0;
    std::string participant_id;
    std::string phone_id;
    std::uint64_t seed = 1;
    int utc_offset_minutes = 0;
    SurveyDefinition survey = SurveyDefinition::default_instrument();
};

/// Random and activity surveys for one participant. Driven by explicit
/// times; never reads a clock. Random and activity surveys are independent:
/// a pending activity survey does not hold back a random one.
class EmaScheduler {
public:
    EmaScheduler(SchedulerConfig cfg, RandomSource& ids);

    /// Plans the day's three random surveys. Slots before now are skipped
    /// and logged as survey_missed.
    void start_day(LocalDate date, double now);

    /// Fires due random surveys and expires pending ones, each stamped with
    /// its own due time. Calls with t in the past are no-ops.
    void advance_to(double t);

    /// Returns the id of the new activity survey, or nullopt when suppressed
    /// (outside the window, or one already pending).
    std::optional<std::string> on_mvpa_notification(double t, const std::optional<std::string>& band_mac);

    /// Throws SurveyError for unknown or already-terminal surveys and for
    /// responses that do not fit the instrument. An action at or after the
    /// expiry time finds the survey Expired and reports that.
    SurveyStatus resolve(const std::string& id, const SurveyAction& action);

    /// Appends a non-survey event (Bluetooth, band, collection, battery).
    void log(EventKind kind, double t, std::optional<std::string> band_mac = std::nullopt, Json detail = Json::object());

    [[nodiscard]] std::optional<double> next_due() const;
    [[nodiscard]] const SurveyInstance* find(const std::string& id) const;
    [[nodiscard]] const std::deque<SurveyInstance>& surveys() const { return surveys_; }
    [[nodiscard]] bool activity_pending() const;
    [[nodiscard]] std::size_t pending_count() const;
    [[nodiscard]] const SchedulerConfig& config() const { return cfg_; }
    [[nodiscard]] const LocalCalendar& calendar() const { return calendar_; }

    /// Events and newly terminal surveys since the previous call.
    std::vector<EventRecord> take_events();
    std::vector<SurveyInstance> take_resolved();

private:
    struct Slot {
        double t;
        int block;
    };

    SurveyInstance& trigger(SurveyKind kind, double t, int block, const std::optional<std::string>& band_mac);
    void finish(std::size_t index, SurveyStatus status, double t);
    void emit(EventKind kind, double t, const std::optional<std::string>& band_mac,
              const std::optional<std::string>& survey_id, Json detail = Json::object());

    SchedulerConfig cfg_;
    RandomSource& ids_;
    LocalCalendar calendar_;
    std::deque<Slot> slots_;
    std::deque<SurveyInstance> surveys_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<std::size_t> pending_;  // indexes into surveys_
    std::vector<EventRecord> events_;
    std::vector<SurveyInstance> resolved_;
    double now_ = 0.0;
};

}  // namespace motionpi::ema
