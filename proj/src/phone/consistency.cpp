#include "motionpi/phone/consistency.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace motionpi::phone {

Json ConsistencyReport::to_json() const {
    return Json{{"local_records", local_records},
                {"server_records", server_records},
                {"missing_on_server", missing_on_server},
                {"missing_locally", missing_locally},
                {"mismatched", mismatched}};
}

std::string content_hash(const Json& record, const GpsCipher& cipher) {
    Json canon = Json::object();
    for (const char* key : {"record_id", "record_type", "participant_id", "username", "phone_id", "timestamp", "payload"}) {
        if (record.contains(key)) canon[key] = record[key];
    }
    if (canon.value("record_type", "") == "gps" && canon.contains("payload")) {
        try {
            const auto fix = cipher.decrypt(canon["payload"]);
            canon["payload"] = Json{{"lat", fix.lat}, {"lon", fix.lon}};
        } catch (const CipherError&) {
            canon["payload"] = Json{{"undecryptable", canon["payload"]}};
        }
    }
    return to_hex(sha256(canon.dump()));
}

ConsistencyReport verify_consistency(const std::vector<Json>& local, const std::vector<Json>& server,
                                     const GpsCipher& cipher) {
    const auto index = [&](const std::vector<Json>& recs) {
        std::map<std::string, std::string> out;
        for (const auto& r : recs) {
            if (!r.is_object() || !r.contains("record_id") || !r["record_id"].is_string()) continue;
            out.emplace(r["record_id"].get<std::string>(), content_hash(r, cipher));
        }
        return out;
    };
    const auto l = index(local);
    const auto s = index(server);
    ConsistencyReport rep;
    rep.local_records = l.size();
    rep.server_records = s.size();
    for (const auto& [id, h] : l) {
        const auto it = s.find(id);
        if (it == s.end()) rep.missing_on_server.push_back(id);
        else if (it->second != h) rep.mismatched.push_back(id);
    }
    for (const auto& [id, h] : s)
        if (!l.count(id)) rep.missing_locally.push_back(id);
    return rep;
}

std::vector<Json> fetch_server_records(Transport& transport, const std::string& token,
                                       const std::string& participant_id) {
    HttpRequest req{"GET", "/records?participant_id=" + url_encode(participant_id),
                    {{"authorization", "Bearer " + token}}, ""};
    const auto res = transport.send(req);
    if (!res.ok()) throw std::runtime_error(std::string("query failed: ") + to_string(res.failure));
    if (res.response->status != 200)
        throw std::runtime_error("query failed: HTTP " + std::to_string(res.response->status));
    auto doc = Json::parse(res.response->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("records") || !doc["records"].is_array())
        throw std::runtime_error("query failed: malformed response");
    return doc["records"].get<std::vector<Json>>();
}

}  // namespace motionpi::phone
