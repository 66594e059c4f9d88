#include <gtest/gtest.h>

#include "motionpi/record/record.hpp"

using namespace motionpi::record;

namespace {

Json enmo_record() {
    return Json::parse(R"({
      "record_id": "0f8fad5b-d9cb-469f-a165-70867728950e",
      "record_type": "enmo",
      "participant_id": "motionpi088",
      "username": "motionpi088",
      "phone_id": "phone-088",
      "timestamp": 1736173815.0,
      "payload": {"bout_start": 1736173800.0, "duration_s": 15, "mean_enmo": 0.15, "is_mvpa": true,
                  "sample_count": 480, "band_mac": "02:4D:50:00:00:01", "side": "left"}
    })");
}

}  // namespace

TEST(RecordSchema, AcceptsWellFormedRecords) {
    EXPECT_EQ(validate_record(enmo_record()), std::nullopt);
    const auto r = DataRecord::from_json(enmo_record());
    EXPECT_EQ(r.type, RecordType::Enmo);
    const auto back = r.to_json();
    EXPECT_EQ(back.begin().key(), "record_id");
    EXPECT_EQ(Json(back), enmo_record());
}

TEST(RecordSchema, TimestampMustBeNumber) {
    auto doc = enmo_record();
    doc["timestamp"] = "2024-01-01";
    EXPECT_EQ(validate_record(doc), "record.timestamp: must be a floating-point UNIX timestamp");
    doc["timestamp"] = "abc";
    EXPECT_THROW((void)DataRecord::from_json(doc), RecordError);
    doc["timestamp"] = true;
    EXPECT_TRUE(validate_record(doc).has_value());
    doc["timestamp"] = -5.0;
    EXPECT_TRUE(validate_record(doc).has_value());
    doc["timestamp"] = nullptr;
    EXPECT_TRUE(validate_record(doc).has_value());
}

TEST(RecordSchema, IdentityFieldsRequired) {
    for (const char* key : {"participant_id", "username", "phone_id", "record_id", "payload"}) {
        auto doc = enmo_record();
        doc.erase(key);
        EXPECT_TRUE(validate_record(doc).has_value()) << key;
        doc = enmo_record();
        doc[key] = "";
        EXPECT_TRUE(validate_record(doc).has_value()) << key;
    }
}

TEST(RecordSchema, RejectsUnknownAndOperatorKeys) {
    auto doc = enmo_record();
    doc["extra"] = 1;
    EXPECT_EQ(validate_record(doc), "record.extra: unknown field");
    doc = enmo_record();
    doc["payload"]["$where"] = "1";
    EXPECT_TRUE(validate_record(doc).has_value());
}

TEST(RecordSchema, PayloadShapes) {
    auto doc = enmo_record();
    doc["payload"]["sample_count"] = 1.5;
    EXPECT_EQ(validate_record(doc), "payload.sample_count: must be an integer");
    doc = enmo_record();
    doc["payload"]["side"] = "middle";
    EXPECT_TRUE(validate_record(doc).has_value());

    Json survey = enmo_record();
    survey["record_type"] = "survey";
    survey["payload"] = Json::parse(R"({"survey_id": "0f8fad5b-d9cb-469f-a165-70867728950f", "kind": "random",
        "status": "completed", "triggered_t": 100.0, "resolved_t": 160.0,
        "responses": [{"question_id": "intensity", "value": 3}]})");
    EXPECT_EQ(validate_record(survey), std::nullopt);
    survey["payload"]["responses"][0]["value"] = Json::array({1});
    EXPECT_EQ(validate_record(survey), "payload.responses[0].value: must be a string, boolean or finite number");
    survey["payload"]["responses"] = Json::array();
    EXPECT_TRUE(validate_record(survey).has_value());
    survey["payload"]["status"] = "expired";
    EXPECT_EQ(validate_record(survey), std::nullopt);

    Json gps = enmo_record();
    gps["record_type"] = "gps";
    gps["payload"] = Json{{"iv", "AAAAAAAAAAAAAAAAAAAAAA=="}, {"ciphertext", "AAAAAAAAAAAAAAAAAAAAAA=="}, {"key_id", "k1"}};
    EXPECT_EQ(validate_record(gps), std::nullopt);
    gps["payload"]["iv"] = "AAAA";
    EXPECT_TRUE(validate_record(gps).has_value());
    gps["payload"] = Json{{"lat", 40.76}, {"lon", -111.89}};
    EXPECT_TRUE(validate_record(gps).has_value());

    Json battery = enmo_record();
    battery["record_type"] = "battery";
    battery["payload"] = Json{{"source", "phone"}, {"level_pct", 97.0}, {"charging", false}};
    EXPECT_EQ(validate_record(battery), std::nullopt);
    battery["payload"]["level_pct"] = 101;
    EXPECT_TRUE(validate_record(battery).has_value());

    Json event = enmo_record();
    event["record_type"] = "event";
    event["payload"] = Json{{"event_kind", "bluetooth_on"}, {"band_mac", nullptr},
                            {"local_time", "2025-01-06T07:30:00.000-07:00"}};
    EXPECT_EQ(validate_record(event), std::nullopt);
    event["payload"]["event_kind"] = "reboot";
    EXPECT_TRUE(validate_record(event).has_value());
}

TEST(RecordSchema, Names) {
    for (auto t : kAllTypes) EXPECT_EQ(parse_record_type(to_string(t)), t);
    EXPECT_EQ(parse_record_type("GPS"), std::nullopt);
    EXPECT_TRUE(is_mac("02:4D:50:00:00:01"));
    EXPECT_FALSE(is_mac("02:4d:50:00:00:01"));
}
