#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>

#include "motionpi/backend/store.hpp"
#include "motionpi/backend/token.hpp"
#include "motionpi/common/clock.hpp"
#include "motionpi/common/http.hpp"
#include "motionpi/common/random.hpp"

namespace motionpi::backend {

struct ServiceConfig {
    std::string token_secret;
    double token_lifetime_s = 30.0 * 86400.0;
    std::size_t max_body_bytes = 32u << 20;
    std::size_t max_batch_records = 5000;
};

struct DeviceAccount {
    std::string device_id;
    std::string username;
    double created_t = 0.0;
};

struct ServiceStats {
    std::uint64_t signups = 0;
    std::uint64_t unauthorized = 0;
    std::uint64_t bad_requests = 0;
    std::uint64_t batches = 0;
    std::uint64_t stored = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t rejected = 0;
};

/// Ingestion service. Routes (bodies are JSON):
///
///   POST /signup          {"device_id", "username"}
///                         -> 200 {"token", "issued_t", "expires_t", "device_id"}
///   POST /data/<type>     Authorization: Bearer <token>; {"records": [DataRecord...]}
///                         -> 200 {"acks": [{"index", "record_id", "status", "error"?}]}
///                            status is "stored", "duplicate" or "rejected"
///   GET  /records         Authorization: Bearer <token>;
///                         query: record_type, participant_id, from, to
///                         -> 200 {"records": [DataRecord + received_t + device_id]}
///   GET  /health          -> 200 {"status": "ok", "records": n}
///
/// 401 responses have an empty body; 400 responses carry {"error"}.
/// handle() is safe to call from many threads.
class BackendService {
public:
    BackendService(ServiceConfig cfg, DocumentStore& store, const Clock& clock, RandomSource& nonces);

    HttpResponse handle(const HttpRequest& request);

    [[nodiscard]] ServiceStats stats() const;
    [[nodiscard]] std::size_t account_count() const;
    [[nodiscard]] const TokenSigner& signer() const { return signer_; }

private:
    HttpResponse signup(const HttpRequest& req);
    HttpResponse ingest(const HttpRequest& req, const std::string& type);
    HttpResponse records(const HttpRequest& req, std::string_view query);
    std::optional<TokenClaims> authorize(const HttpRequest& req) const;

    ServiceConfig cfg_;
    DocumentStore& store_;
    const Clock& clock_;
    TokenSigner signer_;

    mutable std::mutex accounts_mu_;
    std::map<std::string, DeviceAccount> accounts_;
    RandomSource& nonces_;

    std::atomic<std::uint64_t> signups_{0}, unauthorized_{0}, bad_requests_{0}, batches_{0}, stored_{0},
        duplicates_{0}, rejected_{0};
};

/// In-process transport straight into a service; never fails.
class LocalTransport final : public Transport {
public:
    explicit LocalTransport(BackendService& service) : service_(service) {}
    TransportResult send(const HttpRequest& request) override { return TransportResult::of(service_.handle(request)); }

private:
    BackendService& service_;
};

}  // namespace motionpi::backend
