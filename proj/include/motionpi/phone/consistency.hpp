#pragma once

#include <string>
#include <vector>

#include "motionpi/common/http.hpp"
#include "motionpi/phone/gps_cipher.hpp"

namespace motionpi::phone {

struct ConsistencyReport {
    std::vector<std::string> missing_on_server;
    std::vector<std::string> missing_locally;
    std::vector<std::string> mismatched;
    std::size_t local_records = 0;
    std::size_t server_records = 0;

    [[nodiscard]] bool empty() const {
        return missing_on_server.empty() && missing_locally.empty() && mismatched.empty();
    }
    [[nodiscard]] Json to_json() const;
};

/// SHA-256 (hex) over the envelope fields with GPS payloads replaced by
/// their decrypted coordinates. Server-side fields (received_t, device_id)
/// are ignored. Undecryptable GPS payloads hash their raw form with a
/// distinct prefix, so they never match a decryptable copy.
[[nodiscard]] std::string content_hash(const Json& record, const GpsCipher& cipher);

/// Compares by record_id and content hash. All three lists are sorted.
[[nodiscard]] ConsistencyReport verify_consistency(const std::vector<Json>& local, const std::vector<Json>& server,
                                                   const GpsCipher& cipher);

/// GET /records?participant_id=... through a transport. Throws
/// std::runtime_error on transport failure or a non-200 answer.
[[nodiscard]] std::vector<Json> fetch_server_records(Transport& transport, const std::string& token,
                                                     const std::string& participant_id);

}  // namespace motionpi::phone
