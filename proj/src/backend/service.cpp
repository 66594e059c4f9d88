#include "motionpi/backend/service.hpp"

#include <cmath>

namespace motionpi::backend {

namespace {

HttpResponse json_response(int status, const Json& body) { return {status, body.dump()}; }

HttpResponse error(int status, std::string_view message) { return json_response(status, Json{{"error", message}}); }

HttpResponse unauthorized() { return {401, ""}; }

std::optional<double> parse_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

BackendService::BackendService(ServiceConfig cfg, DocumentStore& store, const Clock& clock, RandomSource& nonces)
    : cfg_(std::move(cfg)),
      store_(store),
      clock_(clock),
      signer_(Bytes(cfg_.token_secret.begin(), cfg_.token_secret.end()), cfg_.token_lifetime_s),
      nonces_(nonces) {}

HttpResponse BackendService::handle(const HttpRequest& req) {
    const auto q = req.target.find('?');
    const std::string path = req.target.substr(0, q);
    const std::string_view query =
        q == std::string::npos ? std::string_view{} : std::string_view(req.target).substr(q + 1);

    if (req.body.size() > cfg_.max_body_bytes) {
        ++bad_requests_;
        return error(413, "body too large");
    }
    if (path == "/signup") {
        if (req.method != "POST") return error(405, "method not allowed");
        return signup(req);
    }
    if (path.rfind("/data/", 0) == 0) {
        if (req.method != "POST") return error(405, "method not allowed");
        return ingest(req, path.substr(6));
    }
    if (path == "/records") {
        if (req.method != "GET") return error(405, "method not allowed");
        return records(req, query);
    }
    if (path == "/health") {
        if (req.method != "GET") return error(405, "method not allowed");
        return json_response(200, Json{{"status", "ok"}, {"records", store_.count()}});
    }
    return error(404, "no such route");
}

std::optional<TokenClaims> BackendService::authorize(const HttpRequest& req) const {
    const auto h = req.header("authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (!h || h->size() <= kBearer.size() || h->compare(0, kBearer.size(), kBearer) != 0) return std::nullopt;
    auto claims = signer_.verify(std::string_view(*h).substr(kBearer.size()), clock_.now());
    if (!claims) return std::nullopt;
    std::lock_guard lock(accounts_mu_);
    if (!accounts_.count(claims->device_id)) return std::nullopt;
    return claims;
}

HttpResponse BackendService::signup(const HttpRequest& req) {
    const auto body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        ++bad_requests_;
        return error(400, "body must be a JSON object");
    }
    for (const auto& [key, value] : body.items()) {
        if (key != "device_id" && key != "username") {
            ++bad_requests_;
            return error(400, "unknown field '" + key + "'");
        }
    }
    for (const char* key : {"device_id", "username"}) {
        if (!body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty() ||
            body[key].get<std::string>().size() > 128) {
            ++bad_requests_;
            return error(400, std::string(key) + " must be a non-empty string");
        }
    }
    const auto device_id = body["device_id"].get<std::string>();
    const double now = clock_.now();
    TokenClaims claims;
    {
        std::lock_guard lock(accounts_mu_);
        auto [it, created] = accounts_.try_emplace(device_id, DeviceAccount{device_id, body["username"], now});
        claims.device_id = device_id;
        claims.username = it->second.username;
        Bytes nonce(12);
        nonces_.fill(nonce);
        claims.nonce = to_hex(nonce);
    }
    claims.issued_t = std::floor(now);
    claims.expires_t = claims.issued_t + signer_.lifetime_s();
    ++signups_;
    return json_response(200, Json{{"token", signer_.issue(claims)},
                                   {"issued_t", claims.issued_t},
                                   {"expires_t", claims.expires_t},
                                   {"device_id", device_id}});
}

HttpResponse BackendService::ingest(const HttpRequest& req, const std::string& type_name) {
    const auto claims = authorize(req);
    if (!claims) {
        ++unauthorized_;
        return unauthorized();
    }
    const auto type = record::parse_record_type(type_name);
    if (!type) return error(404, "unknown record type");

    // The whole body is parsed before anything is stored, so a truncated
    // body persists nothing.
    const auto body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || body.size() != 1 || !body.contains("records") ||
        !body["records"].is_array()) {
        ++bad_requests_;
        return error(400, "body must be {\"records\": [...]}");
    }
    const auto& recs = body["records"];
    if (recs.size() > cfg_.max_batch_records) {
        ++bad_requests_;
        return error(400, "batch too large");
    }
    ++batches_;
    const double now = clock_.now();
    Json acks = Json::array();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        Json ack{{"index", i}};
        const bool has_id = r.is_object() && r.contains("record_id") && r["record_id"].is_string();
        ack["record_id"] = has_id ? r["record_id"] : Json(nullptr);
        std::optional<std::string> err = record::validate_record(r);
        if (!err && r["record_type"] != type_name) err = "record.record_type: does not match the route";
        if (!err && r["phone_id"] != claims->device_id) err = "record.phone_id: does not match the token's device";
        if (!err && r["username"] != claims->username) err = "record.username: does not match the account";
        if (!err) {
            switch (store_.upsert({r, now, claims->device_id})) {
                case UpsertResult::Inserted:
                    ack["status"] = "stored";
                    ++stored_;
                    break;
                case UpsertResult::Duplicate:
                    ack["status"] = "duplicate";
                    ++duplicates_;
                    break;
                case UpsertResult::Conflict:
                    err = "record.record_id: already stored with different content";
                    break;
            }
        }
        if (err) {
            ack["status"] = "rejected";
            ack["error"] = *err;
            ++rejected_;
        }
        acks.push_back(std::move(ack));
    }
    return json_response(200, Json{{"acks", std::move(acks)}});
}

HttpResponse BackendService::records(const HttpRequest& req, std::string_view query) {
    if (!authorize(req)) {
        ++unauthorized_;
        return unauthorized();
    }
    const auto params = parse_query(query);
    if (!params) return error(400, "malformed query string");
    RecordFilter f;
    for (const auto& [key, value] : *params) {
        if (key == "record_type") {
            f.type = record::parse_record_type(value);
            if (!f.type) return error(400, "unknown record_type");
        } else if (key == "participant_id") {
            f.participant_id = value;
        } else if (key == "from" || key == "to") {
            const auto v = parse_number(value);
            if (!v) return error(400, key + " must be a number");
            (key == "from" ? f.from : f.to) = v;
        } else {
            return error(400, "unknown query parameter '" + key + "'");
        }
    }
    Json out = Json::array();
    for (const auto& rec : store_.query(f)) out.push_back(rec.to_json());
    return json_response(200, Json{{"records", std::move(out)}});
}

ServiceStats BackendService::stats() const {
    return {signups_.load(), unauthorized_.load(), bad_requests_.load(), batches_.load(),
            stored_.load(),  duplicates_.load(),   rejected_.load()};
}

std::size_t BackendService::account_count() const {
    std::lock_guard lock(accounts_mu_);
    return accounts_.size();
}

}  // namespace motionpi::backend
