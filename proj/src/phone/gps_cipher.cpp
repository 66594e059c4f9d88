#include "motionpi/phone/gps_cipher.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>

namespace motionpi::phone {

namespace {

using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

Bytes run_cipher(bool encrypt, const Bytes& key, std::span<const std::uint8_t> iv, std::span<const std::uint8_t> in) {
    CtxPtr ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
    if (!ctx || EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), iv.data(), encrypt ? 1 : 0) != 1)
        throw CipherError("cipher init failed");
    Bytes out(in.size() + 16);
    int n1 = 0, n2 = 0;
    if (EVP_CipherUpdate(ctx.get(), out.data(), &n1, in.data(), static_cast<int>(in.size())) != 1)
        throw CipherError("cipher update failed");
    if (EVP_CipherFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) throw CipherError("bad padding");
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
}

std::optional<double> parse_coordinate(std::string_view s, double limit) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v) || std::fabs(v) > limit)
        return std::nullopt;
    return v;
}

}  // namespace

GpsCipher::GpsCipher(Bytes key, std::string key_id) : key_(std::move(key)), key_id_(std::move(key_id)) {
    if (key_.size() != 32) throw CipherError("AES-256 key must be 32 bytes");
    if (key_id_.empty()) throw CipherError("key_id must not be empty");
}

std::string GpsCipher::plaintext(GpsFix fix) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.6f,%.6f", fix.lat, fix.lon);
    return {buf, static_cast<std::size_t>(n)};
}

Json GpsCipher::encrypt(GpsFix fix, RandomSource& rng) const {
    if (!std::isfinite(fix.lat) || !std::isfinite(fix.lon) || std::fabs(fix.lat) > 90.0 || std::fabs(fix.lon) > 180.0)
        throw CipherError("coordinates out of range");
    std::array<std::uint8_t, 16> iv{};
    rng.fill(iv);
    const auto ct = run_cipher(true, key_, iv, as_bytes(plaintext(fix)));
    return Json{{"iv", base64_encode(iv)}, {"ciphertext", base64_encode(ct)}, {"key_id", key_id_}};
}

GpsFix GpsCipher::decrypt(const Json& payload) const {
    if (!payload.is_object() || payload.value("key_id", "") != key_id_) throw CipherError("unknown key_id");
    const auto iv = base64_decode(payload.value("iv", ""));
    const auto ct = base64_decode(payload.value("ciphertext", ""));
    if (!iv || iv->size() != 16 || !ct || ct->empty() || ct->size() % 16 != 0) throw CipherError("malformed payload");
    const auto pt = run_cipher(false, key_, *iv, *ct);
    const std::string_view text(reinterpret_cast<const char*>(pt.data()), pt.size());
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw CipherError("plaintext is not lat,lon");
    const auto lat = parse_coordinate(text.substr(0, comma), 90.0);
    const auto lon = parse_coordinate(text.substr(comma + 1), 180.0);
    if (!lat || !lon) throw CipherError("plaintext is not lat,lon");
    return {*lat, *lon};
}

}  // namespace motionpi::phone
