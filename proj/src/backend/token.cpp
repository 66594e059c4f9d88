#include "motionpi/backend/token.hpp"

#include <stdexcept>

#include "json.hpp"

namespace motionpi::backend {

namespace {

const std::string& encoded_header() {
    static const std::string h = base64url_encode(as_bytes(R"({"alg":"HS256","typ":"JWT"})"));
    return h;
}

}  // namespace

TokenSigner::TokenSigner(Bytes secret, double lifetime_s) : secret_(std::move(secret)), lifetime_s_(lifetime_s) {
    if (secret_.size() < 16) throw std::invalid_argument("token secret must be at least 16 bytes");
    if (!(lifetime_s_ > 0.0)) throw std::invalid_argument("token lifetime must be positive");
}

std::string TokenSigner::issue(const TokenClaims& c) const {
    const nlohmann::ordered_json claims{
        {"sub", c.device_id}, {"usr", c.username}, {"iat", c.issued_t}, {"exp", c.expires_t}, {"jti", c.nonce}};
    std::string signing_input = encoded_header() + "." + base64url_encode(as_bytes(claims.dump()));
    const auto mac = hmac_sha256(secret_, signing_input);
    return signing_input + "." + base64url_encode(mac);
}

std::optional<TokenClaims> TokenSigner::verify(std::string_view token, double now) const {
    const auto d1 = token.find('.');
    if (d1 == std::string_view::npos) return std::nullopt;
    const auto d2 = token.find('.', d1 + 1);
    if (d2 == std::string_view::npos || token.find('.', d2 + 1) != std::string_view::npos) return std::nullopt;

    const auto sig = base64url_decode(token.substr(d2 + 1));
    if (!sig) return std::nullopt;
    const auto expected = hmac_sha256(secret_, token.substr(0, d2));
    if (!digest_equal(*sig, expected)) return std::nullopt;

    const auto header = base64url_decode(token.substr(0, d1));
    const auto body = base64url_decode(token.substr(d1 + 1, d2 - d1 - 1));
    if (!header || !body) return std::nullopt;
    const auto h = nlohmann::json::parse(header->begin(), header->end(), nullptr, false);
    const auto b = nlohmann::json::parse(body->begin(), body->end(), nullptr, false);
    if (!h.is_object() || h.value("alg", "") != "HS256" || !b.is_object()) return std::nullopt;
    if (!b.contains("sub") || !b["sub"].is_string() || !b.contains("exp") || !b["exp"].is_number() ||
        !b.contains("iat") || !b["iat"].is_number()) {
        return std::nullopt;
    }
    TokenClaims c;
    c.device_id = b["sub"].get<std::string>();
    c.username = b.value("usr", "");
    c.issued_t = b["iat"].get<double>();
    c.expires_t = b["exp"].get<double>();
    c.nonce = b.value("jti", "");
    if (c.device_id.empty() || !(now < c.expires_t)) return std::nullopt;
    return c;
}

}  // namespace motionpi::backend
