#pragma once

#include <optional>
#include <string>

#include "motionpi/common/codec.hpp"

// Compact HS256 web tokens: base64url(header).base64url(claims).base64url(mac)
namespace motionpi::backend {

struct TokenClaims {
    std::string device_id;  // "sub"
    std::string username;   // "usr"
    double issued_t = 0.0;  // "iat"
    double expires_t = 0.0; // "exp"
    std::string nonce;      // "jti"
};

class TokenSigner {
public:
    TokenSigner(Bytes secret, double lifetime_s);

    [[nodiscard]] std::string issue(const TokenClaims& claims) const;
    /// nullopt for malformed, wrongly signed, non-HS256 or expired tokens.
    [[nodiscard]] std::optional<TokenClaims> verify(std::string_view token, double now) const;
    [[nodiscard]] double lifetime_s() const { return lifetime_s_; }

private:
    Bytes secret_;
    double lifetime_s_;
};

}  // namespace motionpi::backend
