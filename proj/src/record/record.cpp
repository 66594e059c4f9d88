#include "motionpi/record/record.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "motionpi/common/codec.hpp"
#include "motionpi/common/random.hpp"

namespace motionpi::record {

namespace {

constexpr std::size_t kMaxIdLength = 128;

using Error = std::optional<std::string>;

Error fail(std::string_view path, std::string_view what) { return std::string(path) + ": " + std::string(what); }

// Rejects keys outside the allowed set and any operator-like key.
Error check_keys(const Json& obj, std::string_view path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!key.empty() && key[0] == '$') {
            return fail(std::string(path) + "." + key, "keys starting with '$' are not allowed");
        }
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            return fail(std::string(path) + "." + key, "unknown field");
        }
    }
    return std::nullopt;
}

Error require_string(const Json& obj, std::string_view path, const char* key, bool non_empty = true) {
    const auto it = obj.find(key);
    const std::string p = std::string(path) + "." + key;
    if (it == obj.end()) return fail(p, "required");
    if (!it->is_string()) return fail(p, "must be a string");
    const auto& s = it->get_ref<const std::string&>();
    if (non_empty && s.empty()) return fail(p, "must not be empty");
    if (s.size() > 4096) return fail(p, "too long");
    return std::nullopt;
}

Error require_number(const Json& obj, std::string_view path, const char* key, double lo, double hi) {
    const auto it = obj.find(key);
    const std::string p = std::string(path) + "." + key;
    if (it == obj.end()) return fail(p, "required");
    if (!it->is_number()) return fail(p, "must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) return fail(p, "must be finite");
    if (v < lo || v > hi) return fail(p, "out of range");
    return std::nullopt;
}

Error require_integer(const Json& obj, std::string_view path, const char* key, std::int64_t lo, std::int64_t hi) {
    const auto it = obj.find(key);
    const std::string p = std::string(path) + "." + key;
    if (it == obj.end()) return fail(p, "required");
    if (!it->is_number_integer()) return fail(p, "must be an integer");
    const auto v = it->get<std::int64_t>();
    if (v < lo || v > hi) return fail(p, "out of range");
    return std::nullopt;
}

Error require_bool(const Json& obj, std::string_view path, const char* key) {
    const auto it = obj.find(key);
    const std::string p = std::string(path) + "." + key;
    if (it == obj.end()) return fail(p, "required");
    if (!it->is_boolean()) return fail(p, "must be a boolean");
    return std::nullopt;
}

Error require_enum(const Json& obj, std::string_view path, const char* key,
                   std::initializer_list<std::string_view> values) {
    if (auto e = require_string(obj, path, key)) return e;
    const auto& s = obj.at(key).get_ref<const std::string&>();
    if (std::find(values.begin(), values.end(), s) == values.end()) {
        return fail(std::string(path) + "." + key, "unexpected value '" + s + "'");
    }
    return std::nullopt;
}

Error require_uuid(const Json& obj, std::string_view path, const char* key) {
    if (auto e = require_string(obj, path, key)) return e;
    if (!is_uuid(obj.at(key).get_ref<const std::string&>())) {
        return fail(std::string(path) + "." + key, "must be a lowercase UUID");
    }
    return std::nullopt;
}

Error require_mac(const Json& obj, std::string_view path, const char* key) {
    if (auto e = require_string(obj, path, key)) return e;
    if (!is_mac(obj.at(key).get_ref<const std::string&>())) {
        return fail(std::string(path) + "." + key, "must be a MAC address");
    }
    return std::nullopt;
}

Error validate_gps(const Json& p) {
    if (auto e = check_keys(p, "payload", {"iv", "ciphertext", "key_id"})) return e;
    if (auto e = require_string(p, "payload", "iv")) return e;
    if (auto e = require_string(p, "payload", "ciphertext")) return e;
    if (auto e = require_string(p, "payload", "key_id")) return e;
    const auto iv = base64_decode(p.at("iv").get_ref<const std::string&>());
    if (!iv || iv->size() != 16) return fail("payload.iv", "must be 16 base64-encoded bytes");
    const auto ct = base64_decode(p.at("ciphertext").get_ref<const std::string&>());
    if (!ct || ct->empty() || ct->size() % 16 != 0) {
        return fail("payload.ciphertext", "must be base64 of whole cipher blocks");
    }
    return std::nullopt;
}

Error validate_enmo(const Json& p) {
    if (auto e = check_keys(p, "payload",
                            {"bout_start", "duration_s", "mean_enmo", "is_mvpa", "sample_count", "band_mac", "side"}))
        return e;
    if (auto e = require_number(p, "payload", "bout_start", 1e-9, 1e12)) return e;
    if (auto e = require_integer(p, "payload", "duration_s", 1, 86400)) return e;
    if (auto e = require_number(p, "payload", "mean_enmo", 0.0, 64.0)) return e;
    if (auto e = require_bool(p, "payload", "is_mvpa")) return e;
    if (auto e = require_integer(p, "payload", "sample_count", 0, 1'000'000)) return e;
    if (auto e = require_mac(p, "payload", "band_mac")) return e;
    if (auto e = require_enum(p, "payload", "side", {"left", "right"})) return e;
    return std::nullopt;
}

Error validate_survey(const Json& p) {
    if (auto e = check_keys(p, "payload",
                            {"survey_id", "kind", "status", "triggered_t", "resolved_t", "responses"}))
        return e;
    if (auto e = require_uuid(p, "payload", "survey_id")) return e;
    if (auto e = require_enum(p, "payload", "kind", {"random", "activity"})) return e;
    if (auto e = require_enum(p, "payload", "status", {"completed", "declined", "expired"})) return e;
    if (auto e = require_number(p, "payload", "triggered_t", 1e-9, 1e12)) return e;
    if (auto e = require_number(p, "payload", "resolved_t", 1e-9, 1e12)) return e;
    if (p.at("resolved_t").get<double>() < p.at("triggered_t").get<double>()) {
        return fail("payload.resolved_t", "precedes triggered_t");
    }
    const auto it = p.find("responses");
    if (it == p.end()) return fail("payload.responses", "required");
    if (!it->is_array()) return fail("payload.responses", "must be an array");
    const bool completed = p.at("status") == "completed";
    if (completed == it->empty()) {
        return fail("payload.responses", completed ? "completed survey without responses"
                                                   : "responses present on an unanswered survey");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& r = (*it)[i];
        const std::string path = "payload.responses[" + std::to_string(i) + "]";
        if (!r.is_object()) return fail(path, "must be an object");
        if (auto e = check_keys(r, path, {"question_id", "value"})) return e;
        if (auto e = require_string(r, path, "question_id")) return e;
        const auto v = r.find("value");
        if (v == r.end()) return fail(path + ".value", "required");
        if (!(v->is_string() || v->is_boolean() || (v->is_number() && std::isfinite(v->get<double>())))) {
            return fail(path + ".value", "must be a string, boolean or finite number");
        }
    }
    return std::nullopt;
}

Error validate_battery(const Json& p) {
    if (auto e = check_keys(p, "payload", {"source", "level_pct", "charging", "band_mac"})) return e;
    if (auto e = require_enum(p, "payload", "source", {"phone", "band"})) return e;
    if (auto e = require_number(p, "payload", "level_pct", 0.0, 100.0)) return e;
    if (auto e = require_bool(p, "payload", "charging")) return e;
    const bool band = p.at("source") == "band";
    if (band) {
        if (auto e = require_mac(p, "payload", "band_mac")) return e;
    } else if (p.contains("band_mac")) {
        return fail("payload.band_mac", "only allowed for band batteries");
    }
    return std::nullopt;
}

Error validate_event(const Json& p) {
    if (auto e = check_keys(p, "payload", {"event_kind", "band_mac", "local_time", "survey_id", "detail"})) return e;
    if (auto e = require_string(p, "payload", "event_kind")) return e;
    const auto& kind = p.at("event_kind").get_ref<const std::string&>();
    if (std::find(kEventKinds.begin(), kEventKinds.end(), kind) == kEventKinds.end()) {
        return fail("payload.event_kind", "unknown event kind '" + kind + "'");
    }
    const auto mac = p.find("band_mac");
    if (mac == p.end()) return fail("payload.band_mac", "required (null when not applicable)");
    if (!mac->is_null()) {
        if (auto e = require_mac(p, "payload", "band_mac")) return e;
    }
    if (auto e = require_string(p, "payload", "local_time")) return e;
    const auto& lt = p.at("local_time").get_ref<const std::string&>();
    if (lt.size() < 25 || lt[4] != '-' || lt[10] != 'T') return fail("payload.local_time", "must be ISO-8601 with offset");
    if (p.contains("survey_id")) {
        if (auto e = require_uuid(p, "payload", "survey_id")) return e;
    }
    if (const auto d = p.find("detail"); d != p.end()) {
        if (!d->is_object()) return fail("payload.detail", "must be an object");
        for (const auto& [key, value] : d->items()) {
            if (!key.empty() && key[0] == '$') return fail("payload.detail." + key, "keys starting with '$' are not allowed");
            if (!(value.is_string() || value.is_boolean() || value.is_number())) {
                return fail("payload.detail." + key, "must be a scalar");
            }
        }
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(RecordType t) {
    switch (t) {
        case RecordType::Gps: return "gps";
        case RecordType::Enmo: return "enmo";
        case RecordType::Survey: return "survey";
        case RecordType::Battery: return "battery";
        case RecordType::Event: return "event";
    }
    return "?";
}

std::optional<RecordType> parse_record_type(std::string_view s) {
    for (auto t : kAllTypes) {
        if (s == to_string(t)) return t;
    }
    return std::nullopt;
}

bool is_mac(std::string_view s) {
    if (s.size() != 17) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (i % 3 == 2) {
            if (c != ':') return false;
        } else if (!((c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'))) {
            return false;
        }
    }
    return true;
}

std::optional<std::string> validate_payload(RecordType type, const Json& payload) {
    if (!payload.is_object()) return fail("payload", "must be an object");
    switch (type) {
        case RecordType::Gps: return validate_gps(payload);
        case RecordType::Enmo: return validate_enmo(payload);
        case RecordType::Survey: return validate_survey(payload);
        case RecordType::Battery: return validate_battery(payload);
        case RecordType::Event: return validate_event(payload);
    }
    return fail("record_type", "unknown");
}

std::optional<std::string> validate_record(const Json& doc) {
    if (!doc.is_object()) return fail("record", "must be an object");
    if (auto e = check_keys(doc, "record",
                            {"record_id", "record_type", "participant_id", "username", "phone_id", "timestamp",
                             "payload"}))
        return e;
    if (auto e = require_uuid(doc, "record", "record_id")) return e;
    if (auto e = require_string(doc, "record", "record_type")) return e;
    const auto type = parse_record_type(doc.at("record_type").get_ref<const std::string&>());
    if (!type) return fail("record.record_type", "unknown record type");
    for (const char* key : {"participant_id", "username", "phone_id"}) {
        if (auto e = require_string(doc, "record", key)) return e;
        if (doc.at(key).get_ref<const std::string&>().size() > kMaxIdLength) return fail(std::string("record.") + key, "too long");
    }
    const auto ts = doc.find("timestamp");
    if (ts == doc.end()) return fail("record.timestamp", "required");
    if (!ts->is_number()) return fail("record.timestamp", "must be a floating-point UNIX timestamp");
    const double t = ts->get<double>();
    if (!std::isfinite(t) || t <= 0.0) return fail("record.timestamp", "must be finite and positive");
    const auto payload = doc.find("payload");
    if (payload == doc.end()) return fail("record.payload", "required");
    return validate_payload(*type, *payload);
}

OrderedJson DataRecord::to_json() const {
    OrderedJson j;
    j["record_id"] = record_id;
    j["record_type"] = to_string(type);
    j["participant_id"] = participant_id;
    j["username"] = username;
    j["phone_id"] = phone_id;
    j["timestamp"] = timestamp;
    j["payload"] = payload;
    return j;
}

DataRecord DataRecord::from_json(const Json& doc) {
    if (auto e = validate_record(doc)) throw RecordError(*e);
    DataRecord r;
    r.record_id = doc.at("record_id").get<std::string>();
    r.type = *parse_record_type(doc.at("record_type").get<std::string>());
    r.participant_id = doc.at("participant_id").get<std::string>();
    r.username = doc.at("username").get<std::string>();
    r.phone_id = doc.at("phone_id").get<std::string>();
    r.timestamp = doc.at("timestamp").get<double>();
    r.payload = doc.at("payload");
    return r;
}

}  // namespace motionpi::record
