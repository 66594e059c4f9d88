#include "motionpi/phone/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace motionpi::phone {

namespace fs = std::filesystem;

namespace {

constexpr double kTokenMargin_s = 60.0;
constexpr const char* kTokenFile = "token.json";

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

double number(const Json& v, const std::string& path) {
    if (!v.is_number()) bad(path, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(path, "must be finite");
    return d;
}

int integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) bad(path, "must be an integer");
    return v.get<int>();
}

std::string string(const Json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "must be a string");
    return v.get<std::string>();
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

AgentConfig AgentConfig::from_json(const Json& doc, const std::string& path) {
    if (!doc.is_object()) bad(path, "must be an object");
    AgentConfig c;
    bool key_seen = false;
    for (const auto& [key, v] : doc.items()) {
        const std::string p = path + "." + key;
        if (key == "participant_id") {
            c.participant_id = string(v, p);
        } else if (key == "phone_id") {
            c.phone_id = string(v, p);
        } else if (key == "gps_key_hex") {
            const auto k = from_hex(string(v, p));
            if (!k || k->size() != 32) bad(p, "must be 64 hex digits");
            c.gps_key = *k;
            key_seen = true;
        } else if (key == "key_id") {
            c.key_id = string(v, p);
        } else if (key == "backend_url") {
            c.backend_url = string(v, p);
        } else if (key == "drain_pct_per_hour") {
            c.drain_pct_per_hour = number(v, p);
        } else if (key == "low_battery_pct") {
            c.low_battery_pct = number(v, p);
        } else if (key == "trigger") {
            if (!v.is_object()) bad(p, "must be an object");
            for (const auto& [tk, tv] : v.items()) {
                const std::string tp = p + "." + tk;
                if (tk == "mvpa_threshold_g") c.trigger.mvpa_threshold_g = number(tv, tp);
                else if (tk == "bout_seconds") c.trigger.bout_seconds = integer(tv, tp);
                else if (tk == "epoch_seconds") c.trigger.epoch_seconds = integer(tv, tp);
                else if (tk == "mvpa_required_seconds") c.trigger.mvpa_required_seconds = integer(tv, tp);
                else if (tk == "sample_rate_hz") c.trigger.sample_rate_hz = integer(tv, tp);
                else bad(tp, "unknown field");
            }
        } else if (key == "upload") {
            if (!v.is_object()) bad(p, "must be an object");
            for (const auto& [uk, uv] : v.items()) {
                const std::string up = p + "." + uk;
                if (uk == "batch_size") {
                    const int n = integer(uv, up);
                    if (n < 1) bad(up, "must be >= 1");
                    c.upload.batch_size = static_cast<std::size_t>(n);
                } else if (uk == "interval_s") c.upload.interval_s = number(uv, up);
                else if (uk == "backoff_initial_s") c.upload.backoff_initial_s = number(uv, up);
                else if (uk == "backoff_factor") c.upload.backoff_factor = number(uv, up);
                else if (uk == "backoff_max_s") c.upload.backoff_max_s = number(uv, up);
                else if (uk == "jitter_fraction") c.upload.jitter_fraction = number(uv, up);
                else if (uk == "request_timeout_s") c.upload.request_timeout_s = number(uv, up);
                else bad(up, "unknown field");
            }
        } else if (key == "window") {
            if (!v.is_object()) bad(p, "must be an object");
            for (const auto& [wk, wv] : v.items()) {
                const std::string wp = p + "." + wk;
                int s = 0;
                try {
                    s = parse_time_of_day(string(wv, wp));
                } catch (const std::invalid_argument&) {
                    bad(wp, "must be HH:MM");
                }
                if (wk == "start") c.window.start_s = s;
                else if (wk == "end") c.window.end_s = s;
                else bad(wp, "unknown field");
            }
        } else if (key == "survey_expiry_s") {
            c.survey_expiry_s = number(v, p);
        } else if (key == "utc_offset_minutes") {
            c.utc_offset_minutes = integer(v, p);
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) bad(p, "must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "data_dir") {
            c.data_dir = string(v, p);
        } else if (key == "survey_file") {
            try {
                c.survey = ema::SurveyDefinition::load(string(v, p));
            } catch (const std::invalid_argument& e) {
                bad(p, e.what());
            }
        } else {
            bad(p, "unknown field");
        }
    }
    if (c.participant_id.empty()) bad(path + ".participant_id", "required");
    if (c.phone_id.empty()) bad(path + ".phone_id", "required");
    if (!key_seen) bad(path + ".gps_key_hex", "required");
    c.validate(path);
    return c;
}

void AgentConfig::validate(const std::string& path) const {
    if (participant_id.empty() || participant_id.size() > 32) bad(path + ".participant_id", "must be 1..32 characters");
    if (phone_id.empty()) bad(path + ".phone_id", "required");
    if (gps_key.size() != 32) bad(path + ".gps_key_hex", "must be 32 bytes");
    if (key_id.empty()) bad(path + ".key_id", "must not be empty");
    if (!(drain_pct_per_hour >= 0.0)) bad(path + ".drain_pct_per_hour", "must be >= 0");
    if (!(low_battery_pct > 0.0 && low_battery_pct < 100.0)) bad(path + ".low_battery_pct", "must be in (0, 100)");
    try {
        trigger.validate();
    } catch (const std::invalid_argument& e) {
        bad(path + ".trigger", e.what());
    }
    if (upload.batch_size < 1) bad(path + ".upload.batch_size", "must be >= 1");
    if (!(upload.interval_s > 0)) bad(path + ".upload.interval_s", "must be positive");
    if (!(upload.backoff_initial_s > 0)) bad(path + ".upload.backoff_initial_s", "must be positive");
    if (!(upload.backoff_factor >= 1)) bad(path + ".upload.backoff_factor", "must be >= 1");
    if (!(upload.backoff_max_s >= upload.backoff_initial_s)) bad(path + ".upload.backoff_max_s", "must be >= backoff_initial_s");
    if (!(upload.jitter_fraction >= 0 && upload.jitter_fraction < 1)) bad(path + ".upload.jitter_fraction", "must be in [0, 1)");
    if (!(upload.request_timeout_s > 0)) bad(path + ".upload.request_timeout_s", "must be positive");
    try {
        window.validate();
    } catch (const std::invalid_argument& e) {
        bad(path + ".window", e.what());
    }
    if (!(survey_expiry_s > 0)) bad(path + ".survey_expiry_s", "must be positive");
    if (std::abs(utc_offset_minutes) > 14 * 60) bad(path + ".utc_offset_minutes", "must be within +-14 h");
    if (data_dir.empty()) bad(path + ".data_dir", "required");
}

AgentConfig AgentConfig::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open " + file.string());
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument(file.string() + ": not valid JSON");
    return from_json(doc);
}

Json AgentConfig::to_json() const {
    return Json{{"participant_id", participant_id},
                {"phone_id", phone_id},
                {"gps_key_hex", to_hex(gps_key)},
                {"key_id", key_id},
                {"backend_url", backend_url},
                {"drain_pct_per_hour", drain_pct_per_hour},
                {"low_battery_pct", low_battery_pct},
                {"trigger",
                 {{"mvpa_threshold_g", trigger.mvpa_threshold_g},
                  {"bout_seconds", trigger.bout_seconds},
                  {"epoch_seconds", trigger.epoch_seconds},
                  {"mvpa_required_seconds", trigger.mvpa_required_seconds},
                  {"sample_rate_hz", trigger.sample_rate_hz}}},
                {"upload",
                 {{"batch_size", upload.batch_size},
                  {"interval_s", upload.interval_s},
                  {"backoff_initial_s", upload.backoff_initial_s},
                  {"backoff_factor", upload.backoff_factor},
                  {"backoff_max_s", upload.backoff_max_s},
                  {"jitter_fraction", upload.jitter_fraction},
                  {"request_timeout_s", upload.request_timeout_s}}},
                {"window",
                 {{"start", format_time_of_day(window.start_s).substr(0, 5)},
                  {"end", format_time_of_day(window.end_s).substr(0, 5)}}},
                {"survey_expiry_s", survey_expiry_s},
                {"utc_offset_minutes", utc_offset_minutes},
                {"seed", seed},
                {"data_dir", data_dir.string()}};
}

Json AuthToken::to_json() const {
    return Json{{"token", token}, {"issued_t", issued_t}, {"expires_t", expires_t}, {"device_id", device_id}};
}

std::optional<AuthToken> AuthToken::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("token") || !doc["token"].is_string() || !doc.contains("expires_t") ||
        !doc["expires_t"].is_number() || !doc.contains("issued_t") || !doc["issued_t"].is_number() ||
        !doc.contains("device_id") || !doc["device_id"].is_string())
        return std::nullopt;
    return AuthToken{doc["token"], doc["issued_t"], doc["expires_t"], doc["device_id"]};
}

PhoneAgent::PhoneAgent(AgentConfig cfg, Transport& transport, RandomSource& rng)
    : cfg_((cfg.validate(), std::move(cfg))),
      transport_(transport),
      rng_(rng),
      calendar_(cfg_.utc_offset_minutes),
      cipher_(cfg_.gps_key, cfg_.key_id),
      outbox_(std::make_unique<Outbox>(cfg_.data_dir / "outbox", calendar_)),
      scheduler_(
          ema::SchedulerConfig{cfg_.window, cfg_.survey_expiry_s, cfg_.participant_id, cfg_.phone_id, cfg_.seed,
                               cfg_.utc_offset_minutes, cfg_.survey},
          rng),
      jitter_(derive_seed(cfg_.seed, 0x6a177e5)) {
    if (std::ifstream in(cfg_.data_dir / kTokenFile); in) {
        const auto doc = Json::parse(in, nullptr, false);
        if (!doc.is_discarded()) token_ = AuthToken::from_json(doc);
        if (token_ && token_->device_id != cfg_.phone_id) token_.reset();
    }
}

DataRecord PhoneAgent::make(RecordType type, Json payload, double t) {
    DataRecord r;
    r.record_id = make_uuid(rng_);
    r.type = type;
    r.participant_id = cfg_.participant_id;
    r.username = cfg_.participant_id;
    r.phone_id = cfg_.phone_id;
    r.timestamp = t;
    r.payload = std::move(payload);
    return r;
}

DataRecord PhoneAgent::record(RecordType type, Json payload, double t) {
    auto r = make(type, std::move(payload), t);
    // Round-trips through the validator exactly as the server will see it.
    if (auto err = record::validate_record(Json(r.to_json()))) throw record::RecordError(*err);
    outbox_->append(r);
    return r;
}

DataRecord PhoneAgent::record_gps(GpsFix fix, double t) { return record(RecordType::Gps, cipher_.encrypt(fix, rng_), t); }

DataRecord PhoneAgent::record_phone_battery(double t) {
    const double level = phone_battery_pct(t);
    return record(RecordType::Battery,
                  Json{{"source", "phone"}, {"level_pct", round2(level)}, {"charging", battery_.charging}}, t);
}

DataRecord PhoneAgent::record_band_battery(const std::string& mac, double level_pct, bool charging, double t) {
    note_battery(level_pct, mac, band_below_low_[mac], t);
    return record(RecordType::Battery,
                  Json{{"source", "band"}, {"level_pct", round2(std::clamp(level_pct, 0.0, 100.0))},
                       {"charging", charging}, {"band_mac", mac}},
                  t);
}

void PhoneAgent::note_battery(double level, const std::optional<std::string>& mac, bool& below, double t) {
    if (level < cfg_.low_battery_pct && !below) {
        below = true;
        scheduler_.log(ema::EventKind::BatteryBelow20, t, mac,
                       Json{{"source", mac ? "band" : "phone"}, {"level_pct", round2(level)}});
        drain_scheduler();
    } else if (level >= cfg_.low_battery_pct) {
        below = false;
    }
}

void PhoneAgent::event(const std::string& kind, double t, const std::optional<std::string>& mac, Json detail) {
    Json p{{"event_kind", kind}, {"band_mac", mac ? Json(*mac) : Json(nullptr)}, {"local_time", calendar_.iso8601(t)}};
    if (!detail.empty()) p["detail"] = std::move(detail);
    record(RecordType::Event, std::move(p), t);
}

void PhoneAgent::drain_scheduler() {
    for (auto& e : scheduler_.take_events()) {
        Json p{{"event_kind", ema::to_string(e.kind)},
               {"band_mac", e.band_mac ? Json(*e.band_mac) : Json(nullptr)},
               {"local_time", e.local_time}};
        if (e.survey_id) p["survey_id"] = *e.survey_id;
        if (!e.detail.empty()) p["detail"] = e.detail;
        if (e.kind == ema::EventKind::SurveyNotified && e.survey_id) notified_.push_back(*e.survey_id);
        record(RecordType::Event, std::move(p), e.timestamp);
    }
    for (auto& s : scheduler_.take_resolved()) {
        Json responses = Json::array();
        for (const auto& r : s.responses) responses.push_back({{"question_id", r.question_id}, {"value", r.value}});
        record(RecordType::Survey,
               Json{{"survey_id", s.id},
                    {"kind", ema::to_string(s.kind)},
                    {"status", ema::to_string(s.status)},
                    {"triggered_t", s.triggered_t},
                    {"resolved_t", *s.resolved_t},
                    {"responses", std::move(responses)}},
               *s.resolved_t);
    }
}

void PhoneAgent::bluetooth(bool on, double t) {
    scheduler_.log(on ? ema::EventKind::BluetoothOn : ema::EventKind::BluetoothOff, t);
    drain_scheduler();
}

bool PhoneAgent::connect_band(band::Wristband& band, double t) {
    const auto mac = band.mac_string();
    scheduler_.log(ema::EventKind::BandConnected, t, mac);
    drain_scheduler();
    std::vector<band::BandNotification> ns;
    try {
        for (const auto& cmd : {band::BandCommand::set_time(t), band::BandCommand::set_participant(cfg_.participant_id),
                                band::BandCommand::start()}) {
            auto out = band.handle(cmd);
            ns.insert(ns.end(), out.begin(), out.end());
        }
    } catch (const band::BandError& e) {
        on_band_notifications(ns, mac, band.config().side);
        return false;
    }
    on_band_notifications(ns, mac, band.config().side);
    if (!band.collecting()) return false;
    phone_battery_pct(t);
    battery_.collecting = true;
    scheduler_.log(ema::EventKind::CollectionEnabled, t, mac);
    drain_scheduler();
    return true;
}

void PhoneAgent::stop_band(band::Wristband& band, double t) {
    const auto mac = band.mac_string();
    if (band.collecting()) {
        on_band_notifications(band.advance_to(t), mac, band.config().side);
        on_band_notifications(band.handle(band::BandCommand::stop()), mac, band.config().side);
        scheduler_.log(ema::EventKind::CollectionDisabled, t, mac);
        drain_scheduler();
    }
    phone_battery_pct(t);
    battery_.collecting = false;
}

void PhoneAgent::disconnect_band(const std::string& mac, double t) {
    scheduler_.log(ema::EventKind::BandDisconnected, t, mac);
    drain_scheduler();
}

void PhoneAgent::on_band_notifications(const std::vector<band::BandNotification>& ns, const std::string& mac,
                                       band::Side side) {
    using band::NotificationKind;
    for (const auto& n : ns) {
        switch (n.kind) {
            case NotificationKind::BoutSummary:
                record(RecordType::Enmo,
                       Json{{"bout_start", n.bout_start},
                            {"duration_s", cfg_.trigger.bout_seconds},
                            {"mean_enmo", n.mean_enmo},
                            {"is_mvpa", n.flag},
                            {"sample_count", n.count},
                            {"band_mac", mac},
                            {"side", band::to_string(side)}},
                       n.t);
                break;
            case NotificationKind::MvpaEpoch:
                scheduler_.on_mvpa_notification(n.t, mac);
                drain_scheduler();
                break;
            case NotificationKind::BatteryLevel:
                record_band_battery(mac, n.level_pct, false, n.t);
                break;
            case NotificationKind::ChargingStatus:
                // Attaching the charger restores a full band battery.
                if (n.flag) record_band_battery(mac, 100.0, true, n.t);
                break;
            case NotificationKind::StorageLevel:
                if (n.level_pct >= 100.0) {
                    scheduler_.log(ema::EventKind::CollectionDisabled, n.t, mac,
                                   Json{{"reason", "storage_full"}, {"storage_pct", 100.0}});
                    drain_scheduler();
                }
                break;
        }
    }
}

double PhoneAgent::phone_battery_pct(double t) {
    if (t > battery_.updated_t) {
        if (battery_.collecting && !battery_.charging)
            battery_.level_pct =
                std::max(0.0, battery_.level_pct - cfg_.drain_pct_per_hour * (t - battery_.updated_t) / 3600.0);
        battery_.updated_t = t;
        note_battery(battery_.level_pct, std::nullopt, phone_below_low_, t);
    }
    return battery_.level_pct;
}

void PhoneAgent::set_charging(bool charging, double t) {
    phone_battery_pct(t);
    battery_.charging = charging;
    if (charging) {
        battery_.level_pct = 100.0;
        phone_below_low_ = false;
    }
    record(RecordType::Battery,
           Json{{"source", "phone"}, {"level_pct", round2(battery_.level_pct)}, {"charging", charging}}, t);
}

void PhoneAgent::start_day(LocalDate date, double t) {
    scheduler_.start_day(date, t);
    drain_scheduler();
}

void PhoneAgent::advance_to(double t) {
    phone_battery_pct(t);
    scheduler_.advance_to(t);
    drain_scheduler();
}

ema::SurveyStatus PhoneAgent::resolve_survey(const std::string& id, const ema::SurveyAction& action) {
    const auto status = scheduler_.resolve(id, action);
    drain_scheduler();
    return status;
}

std::vector<std::string> PhoneAgent::take_notified_surveys() { return std::exchange(notified_, {}); }

bool PhoneAgent::signup(double t) {
    ++signup_requests_;
    HttpRequest req{"POST", "/signup", {{"content-type", "application/json"}},
                    Json{{"device_id", cfg_.phone_id}, {"username", cfg_.participant_id}}.dump()};
    const auto res = transport_.send(req);
    signup_failure_ = res.failure;
    signup_status_ = res.ok() ? std::optional<int>(res.response->status) : std::nullopt;
    if (!res.ok() || res.response->status != 200) return false;
    const auto doc = Json::parse(res.response->body, nullptr, false);
    auto tok = AuthToken::from_json(doc);
    if (!tok || tok->device_id != cfg_.phone_id) return false;
    token_ = std::move(tok);
    std::ofstream out(cfg_.data_dir / kTokenFile, std::ios::trunc);
    out << token_->to_json().dump() << '\n';
    if (!out) throw OutboxError("cannot persist token");
    event("signup", t, std::nullopt, Json{{"expires_t", token_->expires_t}});
    return true;
}

void PhoneAgent::schedule_backoff(double t) {
    ++failures_;
    const double base = std::min(cfg_.upload.backoff_max_s,
                                 cfg_.upload.backoff_initial_s *
                                     std::pow(cfg_.upload.backoff_factor, static_cast<double>(failures_ - 1)));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(jitter_);
    next_upload_t_ = t + base * (1.0 - cfg_.upload.jitter_fraction * u);
}

UploadReport PhoneAgent::upload_pending(double t) {
    UploadReport rep;
    if (t < next_upload_t_) {
        rep.deferred = true;
        return rep;
    }
    const auto fail = [&](TransportFailure f, std::optional<int> status) {
        rep.failure = f;
        rep.failed_status = status;
        schedule_backoff(t);
        return rep;
    };
    if (!token_ || token_->expires_t <= t + kTokenMargin_s) {
        ++rep.signups;
        if (!signup(t)) return fail(signup_failure_, signup_status_);
    }
    bool reauthed = false;
    for (const auto type : record::kAllTypes) {
        const std::string target = std::string("/data/") + record::to_string(type);
        while (outbox_->pending_count(type) > 0) {
            const auto batch = outbox_->pending(type, cfg_.upload.batch_size);
            std::string body = "{\"records\":[";
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (i) body += ',';
                body += batch[i].line;
            }
            body += "]}";
            HttpRequest req{"POST",
                            target,
                            {{"authorization", "Bearer " + token_->token}, {"content-type", "application/json"}},
                            std::move(body)};
            const auto res = transport_.send(req);
            ++rep.batches;
            if (!res.ok()) return fail(res.failure, std::nullopt);
            const int status = res.response->status;
            if (status == 401) {
                if (reauthed) return fail(TransportFailure::None, status);
                reauthed = true;
                ++rep.signups;
                if (!signup(t)) return fail(signup_failure_, signup_status_);
                continue;
            }
            if (status >= 400 && status < 500) {
                // The server could not parse the batch; retrying it unchanged
                // would fail forever.
                std::vector<std::string> ids;
                for (const auto& e : batch) ids.push_back(e.record_id);
                const auto doc = Json::parse(res.response->body, nullptr, false);
                const std::string reason = "HTTP " + std::to_string(status) +
                                           (doc.is_object() && doc.contains("error") && doc["error"].is_string()
                                                ? ": " + doc["error"].get<std::string>()
                                                : std::string());
                rep.quarantined += outbox_->quarantine(type, ids, reason, t);
                if (type != RecordType::Event)
                    event("upload_quarantined", t, std::nullopt,
                          Json{{"record_type", record::to_string(type)}, {"records", ids.size()}, {"reason", reason}});
                continue;
            }
            if (status != 200) return fail(TransportFailure::None, status);

            const auto doc = Json::parse(res.response->body, nullptr, false);
            if (doc.is_discarded() || !doc.is_object() || !doc.contains("acks") || !doc["acks"].is_array())
                return fail(TransportFailure::None, status);
            std::vector<std::string> acked, rejected;
            std::string first_error;
            for (const auto& a : doc["acks"]) {
                if (!a.is_object() || !a.contains("index") || !a["index"].is_number_unsigned()) continue;
                const auto idx = a["index"].get<std::size_t>();
                // Only an ack naming the record's own id counts.
                if (idx >= batch.size() || !a.contains("record_id") || a["record_id"] != batch[idx].record_id) continue;
                const auto st = a.value("status", "");
                if (st == "stored" || st == "duplicate") {
                    acked.push_back(batch[idx].record_id);
                } else if (st == "rejected") {
                    rejected.push_back(batch[idx].record_id);
                    if (first_error.empty()) first_error = a.value("error", "rejected");
                }
            }
            rep.acked += outbox_->mark_acked(type, acked);
            if (!rejected.empty()) {
                rep.quarantined += outbox_->quarantine(type, rejected, first_error, t);
                if (type != RecordType::Event)
                    event("upload_quarantined", t, std::nullopt,
                          Json{{"record_type", record::to_string(type)}, {"records", rejected.size()},
                               {"reason", first_error}});
            }
            if (acked.empty() && rejected.empty()) return fail(TransportFailure::None, status);
        }
    }
    failures_ = 0;
    next_upload_t_ = t + cfg_.upload.interval_s;
    return rep;
}

}  // namespace motionpi::phone
