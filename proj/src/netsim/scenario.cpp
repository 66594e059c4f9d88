#include "motionpi/netsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "motionpi/common/random.hpp"

namespace motionpi::netsim {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) bad(path, "must be an object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* allowed : keys) ok |= k == allowed;
        if (!ok) bad(path + "." + k, "unknown field");
    }
}

double num(const Json& v, const std::string& path, double lo, double hi) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) bad(path, "must be a number");
    const double d = v.get<double>();
    if (d < lo || d > hi) bad(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return d;
}

int integer(const Json& v, const std::string& path, int lo, int hi) {
    if (!v.is_number_integer()) bad(path, "must be an integer");
    const auto d = v.get<long long>();
    if (d < lo || d > hi) bad(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(d);
}

std::uint64_t u64(const Json& v, const std::string& path) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        bad(path, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

bool boolean(const Json& v, const std::string& path) {
    if (!v.is_boolean()) bad(path, "must be true or false");
    return v.get<bool>();
}

std::string str(const Json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "must be a string");
    return v.get<std::string>();
}

int time_of_day(const Json& v, const std::string& path) {
    try {
        return parse_time_of_day(str(v, path));
    } catch (const std::invalid_argument&) {
        bad(path, "must be HH:MM");
    }
}

std::string hhmm(int s) { return format_time_of_day(s).substr(0, 5); }

std::array<std::uint8_t, 6> parse_mac(const std::string& s, const std::string& path) {
    if (!record::is_mac(s)) bad(path, "must be an upper-case MAC such as 02:4D:50:00:00:01");
    std::array<std::uint8_t, 6> mac{};
    for (std::size_t i = 0; i < 6; ++i) mac[i] = static_cast<std::uint8_t>(std::stoi(s.substr(i * 3, 2), nullptr, 16));
    return mac;
}

std::string mac_string(const std::array<std::uint8_t, 6>& mac) {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", mac[0], mac[1], mac[2], mac[3], mac[4], mac[5]);
    return buf;
}

}  // namespace

ftl::FtlGeometry scenario_geometry() {
    auto g = ftl::FtlGeometry::desk();
    g.nand_capacity = 256 * ftl::kMiB;
    g.cluster_size = 8192;
    return g;
}

Scenario Scenario::from_json(const Json& doc) {
    const std::string root = "scenario";
    only_keys(doc, root,
              {"name", "seed", "start_date", "days", "utc_offset_minutes", "participants", "outages", "network",
               "overrides", "behavior", "rates", "upload", "daily", "drain_s"});
    Scenario s;
    if (doc.contains("name")) s.name = str(doc["name"], root + ".name");
    if (doc.contains("seed")) s.seed = u64(doc["seed"], root + ".seed");
    if (doc.contains("start_date")) {
        try {
            s.start_date = LocalDate::parse(str(doc["start_date"], root + ".start_date"));
        } catch (const std::invalid_argument&) {
            bad(root + ".start_date", "must be YYYY-MM-DD");
        }
    }
    if (!doc.contains("days")) bad(root + ".days", "required");
    s.days = integer(doc["days"], root + ".days", 1, 60);
    if (doc.contains("utc_offset_minutes"))
        s.utc_offset_minutes = integer(doc["utc_offset_minutes"], root + ".utc_offset_minutes", -14 * 60, 14 * 60);

    if (doc.contains("daily")) {
        const auto& d = doc["daily"];
        const std::string p = root + ".daily";
        only_keys(d, p, {"connect", "stop", "charge"});
        if (d.contains("connect")) s.connect_s = time_of_day(d["connect"], p + ".connect");
        if (d.contains("stop")) s.stop_s = time_of_day(d["stop"], p + ".stop");
        if (d.contains("charge")) s.charge_s = time_of_day(d["charge"], p + ".charge");
        if (!(s.connect_s < s.stop_s && s.stop_s <= s.charge_s)) bad(p, "must satisfy connect < stop <= charge");
    }

    if (!doc.contains("participants")) bad(root + ".participants", "required");
    const auto& ps = doc["participants"];
    if (!ps.is_array() || ps.empty()) bad(root + ".participants", "must be a non-empty array");
    std::set<std::string> ids, phones, macs;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string p = root + ".participants[" + std::to_string(i) + "]";
        const auto& pj = ps[i];
        only_keys(pj, p, {"participant_id", "phone_id", "rng_seed", "activity", "band"});
        ParticipantSpec spec;
        if (!pj.contains("participant_id")) bad(p + ".participant_id", "required");
        spec.participant_id = str(pj["participant_id"], p + ".participant_id");
        if (spec.participant_id.empty() || spec.participant_id.size() > 32)
            bad(p + ".participant_id", "must be 1..32 characters");
        if (!ids.insert(spec.participant_id).second) bad(p + ".participant_id", "duplicate");
        spec.phone_id = pj.contains("phone_id") ? str(pj["phone_id"], p + ".phone_id") : "phone-" + spec.participant_id;
        if (spec.phone_id.empty()) bad(p + ".phone_id", "must not be empty");
        if (!phones.insert(spec.phone_id).second) bad(p + ".phone_id", "duplicate");
        spec.rng_seed = pj.contains("rng_seed") ? u64(pj["rng_seed"], p + ".rng_seed") : derive_seed(s.seed, i + 1);
        if (pj.contains("activity")) spec.activity = ActivityProfile::from_json(pj["activity"], p + ".activity");
        spec.band_mac = {0x02, 0x4D, 0x50, 0x00, static_cast<std::uint8_t>((i + 1) >> 8),
                         static_cast<std::uint8_t>((i + 1) & 0xFF)};
        if (pj.contains("band")) {
            const auto& b = pj["band"];
            const std::string bp = p + ".band";
            only_keys(b, bp, {"mac", "side", "start_battery_pct"});
            if (b.contains("mac")) spec.band_mac = parse_mac(str(b["mac"], bp + ".mac"), bp + ".mac");
            if (b.contains("side")) {
                const auto side = str(b["side"], bp + ".side");
                if (side != "left" && side != "right") bad(bp + ".side", "must be left or right");
                spec.side = side == "left" ? band::Side::Left : band::Side::Right;
            }
            if (b.contains("start_battery_pct"))
                spec.band_start_battery_pct = num(b["start_battery_pct"], bp + ".start_battery_pct", 0.0, 100.0);
        }
        if (!macs.insert(mac_string(spec.band_mac)).second) bad(p + ".band.mac", "duplicate");
        s.participants.push_back(std::move(spec));
    }

    if (doc.contains("outages")) {
        const auto& o = doc["outages"];
        const std::string p = root + ".outages";
        only_keys(o, p, {"drop_mode", "intervals"});
        if (o.contains("drop_mode")) {
            const auto m = parse_drop_mode(str(o["drop_mode"], p + ".drop_mode"));
            if (!m) bad(p + ".drop_mode", "must be refuse_connection, timeout or mid_body_cut");
            s.outages.drop_mode = *m;
        }
        if (o.contains("intervals")) {
            if (!o["intervals"].is_array()) bad(p + ".intervals", "must be an array");
            for (std::size_t i = 0; i < o["intervals"].size(); ++i) {
                const auto& iv = o["intervals"][i];
                const std::string ip = p + ".intervals[" + std::to_string(i) + "]";
                only_keys(iv, ip, {"start_s", "end_s", "drop_mode"});
                if (!iv.contains("start_s")) bad(ip + ".start_s", "required");
                if (!iv.contains("end_s")) bad(ip + ".end_s", "required");
                OutageInterval out{num(iv["start_s"], ip + ".start_s", 0.0, 86400.0 * 120),
                                   num(iv["end_s"], ip + ".end_s", 0.0, 86400.0 * 120), std::nullopt};
                if (iv.contains("drop_mode")) {
                    out.mode = parse_drop_mode(str(iv["drop_mode"], ip + ".drop_mode"));
                    if (!out.mode) bad(ip + ".drop_mode", "must be refuse_connection, timeout or mid_body_cut");
                }
                s.outages.intervals.push_back(out);
            }
        }
        s.outages.validate(p);
    }

    if (doc.contains("network")) {
        const auto& n = doc["network"];
        const std::string p = root + ".network";
        only_keys(n, p, {"latency_s", "duplicate_delivery"});
        if (n.contains("latency_s")) s.network.latency_s = num(n["latency_s"], p + ".latency_s", 0.0, 60.0);
        if (n.contains("duplicate_delivery"))
            s.network.duplicate_delivery = boolean(n["duplicate_delivery"], p + ".duplicate_delivery");
    }

    if (doc.contains("overrides")) {
        const auto& o = doc["overrides"];
        const std::string p = root + ".overrides";
        only_keys(o, p, {"trigger", "band_drain_pct_per_hour", "phone_drain_pct_per_hour", "geometry", "store_ppg",
                         "session_file_seconds"});
        if (o.contains("trigger")) {
            const auto& t = o["trigger"];
            const std::string tp = p + ".trigger";
            only_keys(t, tp, {"mvpa_threshold_g", "bout_seconds", "epoch_seconds", "mvpa_required_seconds", "sample_rate_hz"});
            if (t.contains("mvpa_threshold_g")) s.trigger.mvpa_threshold_g = num(t["mvpa_threshold_g"], tp + ".mvpa_threshold_g", 0.0, 16.0);
            if (t.contains("bout_seconds")) s.trigger.bout_seconds = integer(t["bout_seconds"], tp + ".bout_seconds", 1, 3600);
            if (t.contains("epoch_seconds")) s.trigger.epoch_seconds = integer(t["epoch_seconds"], tp + ".epoch_seconds", 1, 86400);
            if (t.contains("mvpa_required_seconds"))
                s.trigger.mvpa_required_seconds = integer(t["mvpa_required_seconds"], tp + ".mvpa_required_seconds", 1, 86400);
            if (t.contains("sample_rate_hz")) s.trigger.sample_rate_hz = integer(t["sample_rate_hz"], tp + ".sample_rate_hz", 1, 1000);
            try {
                s.trigger.validate();
            } catch (const std::invalid_argument& e) {
                bad(tp, e.what());
            }
        }
        if (o.contains("band_drain_pct_per_hour"))
            s.band_drain_pct_per_hour = num(o["band_drain_pct_per_hour"], p + ".band_drain_pct_per_hour", 0.0, 100.0);
        if (o.contains("phone_drain_pct_per_hour"))
            s.phone_drain_pct_per_hour = num(o["phone_drain_pct_per_hour"], p + ".phone_drain_pct_per_hour", 0.0, 100.0);
        if (o.contains("geometry")) {
            s.geometry = str(o["geometry"], p + ".geometry");
            if (s.geometry != "scenario" && s.geometry != "desk" && s.geometry != "full_scale")
                bad(p + ".geometry", "must be scenario, desk or full_scale");
        }
        if (o.contains("store_ppg")) s.store_ppg = boolean(o["store_ppg"], p + ".store_ppg");
        if (o.contains("session_file_seconds"))
            s.session_file_seconds = integer(o["session_file_seconds"], p + ".session_file_seconds", 60, 86400);
    }

    if (doc.contains("behavior")) {
        const auto& b = doc["behavior"];
        const std::string p = root + ".behavior";
        only_keys(b, p, {"complete_probability", "decline_probability", "response_delay_s"});
        if (b.contains("complete_probability"))
            s.behavior.complete_probability = num(b["complete_probability"], p + ".complete_probability", 0.0, 1.0);
        if (b.contains("decline_probability"))
            s.behavior.decline_probability = num(b["decline_probability"], p + ".decline_probability", 0.0, 1.0);
        if (s.behavior.complete_probability + s.behavior.decline_probability > 1.0 + 1e-12)
            bad(p, "complete_probability + decline_probability must not exceed 1");
        if (b.contains("response_delay_s")) {
            const auto& d = b["response_delay_s"];
            const std::string dp = p + ".response_delay_s";
            only_keys(d, dp, {"min", "max"});
            if (d.contains("min")) s.behavior.delay_min_s = num(d["min"], dp + ".min", 0.0, 86400.0);
            if (d.contains("max")) s.behavior.delay_max_s = num(d["max"], dp + ".max", 0.0, 86400.0);
            if (s.behavior.delay_max_s < s.behavior.delay_min_s) bad(dp + ".max", "must be >= min");
        }
    }

    if (doc.contains("rates")) {
        const auto& r = doc["rates"];
        const std::string p = root + ".rates";
        only_keys(r, p, {"gps_interval_s", "battery_interval_s"});
        if (r.contains("gps_interval_s")) s.gps_interval_s = num(r["gps_interval_s"], p + ".gps_interval_s", 60.0, 86400.0);
        if (r.contains("battery_interval_s"))
            s.battery_interval_s = num(r["battery_interval_s"], p + ".battery_interval_s", 60.0, 86400.0);
        if (std::fmod(s.gps_interval_s, 60.0) != 0.0) bad(p + ".gps_interval_s", "must be a whole number of minutes");
        if (std::fmod(s.battery_interval_s, 60.0) != 0.0) bad(p + ".battery_interval_s", "must be a whole number of minutes");
    }

    if (doc.contains("upload")) {
        // Reuse the agent parser for the upload block so the rules match.
        Json probe{{"participant_id", "x"}, {"phone_id", "x"}, {"gps_key_hex", std::string(64, '0')},
                   {"data_dir", "x"}, {"upload", doc["upload"]}};
        s.upload = phone::AgentConfig::from_json(probe, root).upload;
    }
    if (doc.contains("drain_s")) s.drain_s = num(doc["drain_s"], root + ".drain_s", 0.0, 86400.0 * 7);
    return s;
}

Scenario Scenario::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open " + file.string());
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument(file.string() + ": not valid JSON");
    return from_json(doc);
}

Json Scenario::to_json() const {
    Json ps = Json::array();
    for (const auto& p : participants) {
        ps.push_back({{"participant_id", p.participant_id},
                      {"phone_id", p.phone_id},
                      {"rng_seed", p.rng_seed},
                      {"activity", p.activity.to_json()},
                      {"band",
                       {{"mac", mac_string(p.band_mac)},
                        {"side", band::to_string(p.side)},
                        {"start_battery_pct", p.band_start_battery_pct}}}});
    }
    Json ivs = Json::array();
    for (const auto& iv : outages.intervals) {
        Json j{{"start_s", iv.start_t}, {"end_s", iv.end_t}};
        if (iv.mode) j["drop_mode"] = to_string(*iv.mode);
        ivs.push_back(j);
    }
    return Json{
        {"name", name},
        {"seed", seed},
        {"start_date", start_date.to_string()},
        {"days", days},
        {"utc_offset_minutes", utc_offset_minutes},
        {"participants", ps},
        {"outages", {{"drop_mode", to_string(outages.drop_mode)}, {"intervals", ivs}}},
        {"network", {{"latency_s", network.latency_s}, {"duplicate_delivery", network.duplicate_delivery}}},
        {"overrides",
         {{"trigger",
           {{"mvpa_threshold_g", trigger.mvpa_threshold_g},
            {"bout_seconds", trigger.bout_seconds},
            {"epoch_seconds", trigger.epoch_seconds},
            {"mvpa_required_seconds", trigger.mvpa_required_seconds},
            {"sample_rate_hz", trigger.sample_rate_hz}}},
          {"band_drain_pct_per_hour", band_drain_pct_per_hour},
          {"phone_drain_pct_per_hour", phone_drain_pct_per_hour},
          {"geometry", geometry},
          {"store_ppg", store_ppg},
          {"session_file_seconds", session_file_seconds}}},
        {"behavior",
         {{"complete_probability", behavior.complete_probability},
          {"decline_probability", behavior.decline_probability},
          {"response_delay_s", {{"min", behavior.delay_min_s}, {"max", behavior.delay_max_s}}}}},
        {"rates", {{"gps_interval_s", gps_interval_s}, {"battery_interval_s", battery_interval_s}}},
        {"upload",
         {{"batch_size", upload.batch_size},
          {"interval_s", upload.interval_s},
          {"backoff_initial_s", upload.backoff_initial_s},
          {"backoff_factor", upload.backoff_factor},
          {"backoff_max_s", upload.backoff_max_s},
          {"jitter_fraction", upload.jitter_fraction},
          {"request_timeout_s", upload.request_timeout_s}}},
        {"daily", {{"connect", hhmm(connect_s)}, {"stop", hhmm(stop_s)}, {"charge", hhmm(charge_s)}}},
        {"drain_s", drain_s}};
}

ftl::FtlGeometry Scenario::band_geometry() const {
    if (geometry == "desk") return ftl::FtlGeometry::desk();
    if (geometry == "full_scale") return ftl::FtlGeometry::full_scale();
    return scenario_geometry();
}

double Scenario::start_t() const { return LocalCalendar(utc_offset_minutes).midnight(start_date); }

double Scenario::end_t() const { return LocalCalendar(utc_offset_minutes).midnight(start_date.plus_days(days)); }

}  // namespace motionpi::netsim
