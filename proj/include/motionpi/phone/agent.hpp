#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "motionpi/band/protocol.hpp"
#include "motionpi/band/wristband.hpp"
#include "motionpi/common/http.hpp"
#include "motionpi/ema/scheduler.hpp"
#include "motionpi/phone/gps_cipher.hpp"
#include "motionpi/phone/outbox.hpp"
#include "motionpi/signal/types.hpp"

namespace motionpi::phone {

struct UploadConfig {
    std::size_t batch_size = 500;
    double interval_s = 300.0;
    double backoff_initial_s = 1.0;
    double backoff_factor = 2.0;
    double backoff_max_s = 300.0;
    // Each delay is shortened by up to this fraction, drawn uniformly.
    double jitter_fraction = 0.2;
    double request_timeout_s = 30.0;
};

/// Agent configuration file (JSON, every field but the first three optional):
///
///   participant_id      string
///   phone_id            string
///   gps_key_hex         64 hex digits (AES-256 key)
///   key_id              string, default "k1"
///   backend_url         string, default "http://127.0.0.1:8080"
///   drain_pct_per_hour  phone battery drain while collecting, default 3
///   low_battery_pct     battery_below_20 threshold, default 20
///   trigger             {mvpa_threshold_g, bout_seconds, epoch_seconds,
///                        mvpa_required_seconds, sample_rate_hz}, pushed to bands
///   upload              {batch_size, interval_s, backoff_initial_s, backoff_factor,
///                        backoff_max_s, jitter_fraction, request_timeout_s}
///   window              {"start": "07:30", "end": "21:30"}
///   survey_expiry_s     default 1800
///   utc_offset_minutes  default 0
///   seed                RNG seed for survey planning and backoff jitter
///   data_dir            outbox and token location
///   survey_file         optional survey definition; default instrument otherwise
struct AgentConfig {
    std::string participant_id;
    std::string phone_id;
    Bytes gps_key;
    std::string key_id = "k1";
    std::string backend_url = "http://127.0.0.1:8080";
    double drain_pct_per_hour = 3.0;
    double low_battery_pct = 20.0;
    signal::TriggerConfig trigger;
    UploadConfig upload;
    ema::CollectionWindow window;
    double survey_expiry_s = 1800.0;
    int utc_offset_minutes = 0;
    std::uint64_t seed = 1;
    std::filesystem::path data_dir;
    ema::SurveyDefinition survey = ema::SurveyDefinition::default_instrument();

    /// Throws std::invalid_argument with a field path such as "agent.upload.batch_size".
    static AgentConfig from_json(const Json& doc, const std::string& path = "agent");
    static AgentConfig load(const std::filesystem::path& file);
    [[nodiscard]] Json to_json() const;
    void validate(const std::string& path = "agent") const;
};

struct AuthToken {
    std::string token;
    double issued_t = 0.0;
    double expires_t = 0.0;
    std::string device_id;

    [[nodiscard]] Json to_json() const;
    static std::optional<AuthToken> from_json(const Json& doc);
};

struct UploadReport {
    std::size_t batches = 0;
    std::size_t acked = 0;
    std::size_t quarantined = 0;
    std::size_t signups = 0;
    TransportFailure failure = TransportFailure::None;
    std::optional<int> failed_status;
    bool deferred = false;  // called before the next attempt was due
    [[nodiscard]] bool ok() const { return failure == TransportFailure::None && !failed_status && !deferred; }
};

struct PhoneBattery {
    double level_pct = 100.0;
    bool charging = false;
    bool collecting = false;
    double updated_t = 0.0;
};

/// Phone-side coordinator. Never reads a clock: every operation carries its
/// time, so the harness can drive it from a virtual clock.
class PhoneAgent {
public:
    PhoneAgent(AgentConfig cfg, Transport& transport, RandomSource& rng);

    // Recording. Every record is validated before it reaches the outbox;
    // invalid ones throw record::RecordError.
    DataRecord record(RecordType type, Json payload, double t);
    DataRecord record_gps(GpsFix fix, double t);
    DataRecord record_phone_battery(double t);
    DataRecord record_band_battery(const std::string& mac, double level_pct, bool charging, double t);

    // Band link events.
    void bluetooth(bool on, double t);
    /// Connects, then sets time and participant id on the band and starts
    /// collection. Returns false (and logs nothing) if the band refused.
    bool connect_band(band::Wristband& band, double t);
    void stop_band(band::Wristband& band, double t);
    void disconnect_band(const std::string& mac, double t);
    void on_band_notifications(const std::vector<band::BandNotification>& ns, const std::string& mac,
                               band::Side side);

    // Phone power.
    void set_charging(bool charging, double t);
    /// Brings the drain model up to t and logs a low-battery crossing.
    double phone_battery_pct(double t);

    // Surveys.
    void start_day(LocalDate date, double t);
    void advance_to(double t);
    ema::SurveyStatus resolve_survey(const std::string& id, const ema::SurveyAction& action);
    /// Surveys notified to the participant since the previous call.
    std::vector<std::string> take_notified_surveys();

    // Upload.
    [[nodiscard]] double next_upload_t() const { return next_upload_t_; }
    /// Sends every pending record in per-type batches. Stops at the first
    /// transport failure or server error and schedules a backoff.
    UploadReport upload_pending(double t);

    [[nodiscard]] const AgentConfig& config() const { return cfg_; }
    [[nodiscard]] const Outbox& outbox() const { return *outbox_; }
    [[nodiscard]] const GpsCipher& cipher() const { return cipher_; }
    [[nodiscard]] const std::optional<AuthToken>& token() const { return token_; }
    [[nodiscard]] std::size_t signup_requests() const { return signup_requests_; }
    [[nodiscard]] const ema::EmaScheduler& scheduler() const { return scheduler_; }
    [[nodiscard]] const LocalCalendar& calendar() const { return calendar_; }
    [[nodiscard]] std::size_t consecutive_failures() const { return failures_; }

private:
    DataRecord make(RecordType type, Json payload, double t);
    void event(const std::string& kind, double t, const std::optional<std::string>& mac, Json detail = Json::object());
    void drain_scheduler();
    bool signup(double t);
    void schedule_backoff(double t);
    void note_battery(double level, const std::optional<std::string>& mac, bool& below, double t);

    AgentConfig cfg_;
    Transport& transport_;
    RandomSource& rng_;
    LocalCalendar calendar_;
    GpsCipher cipher_;
    std::unique_ptr<Outbox> outbox_;
    ema::EmaScheduler scheduler_;
    std::mt19937_64 jitter_;
    std::optional<AuthToken> token_;
    std::size_t signup_requests_ = 0;
    TransportFailure signup_failure_ = TransportFailure::None;
    std::optional<int> signup_status_;
    std::size_t failures_ = 0;
    double next_upload_t_ = 0.0;
    PhoneBattery battery_;
    bool phone_below_low_ = false;
    std::map<std::string, bool> band_below_low_;
    std::vector<std::string> notified_;
};

}  // namespace motionpi::phone
