#pragma once

#include <stdexcept>
#include <string>

#include "motionpi/common/codec.hpp"
#include "motionpi/common/random.hpp"
#include "motionpi/record/record.hpp"

namespace motionpi::phone {

using record::Json;

class CipherError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GpsFix {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

/// AES-256-CBC with PKCS#7 padding over "lat,lon" written with six
/// decimals. Every call draws a fresh 16-byte IV.
class GpsCipher {
public:
    /// key must be 32 bytes.
    GpsCipher(Bytes key, std::string key_id);

    /// {"iv": base64, "ciphertext": base64, "key_id": ...}. Coordinates are
    /// rounded to six decimals before encryption.
    [[nodiscard]] Json encrypt(GpsFix fix, RandomSource& rng) const;
    /// Throws CipherError on a wrong key id, bad padding or a plaintext that
    /// is not two in-range decimals.
    [[nodiscard]] GpsFix decrypt(const Json& payload) const;

    [[nodiscard]] const std::string& key_id() const { return key_id_; }

    /// The exact plaintext encrypted for a fix.
    [[nodiscard]] static std::string plaintext(GpsFix fix);

private:
    Bytes key_;
    std::string key_id_;
};

}  // namespace motionpi::phone
