#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace motionpi {

/// Source of random bytes for IVs and record identifiers.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// Reproducible byte stream for simulation runs. Not suitable for key
/// material outside a simulator.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
    void fill(std::span<std::uint8_t> out) override;

private:
    std::mt19937_64 engine_;
};

/// OpenSSL CSPRNG.
class SecureRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

/// RFC 4122 version-4 UUID in canonical lowercase 8-4-4-4-12 form.
[[nodiscard]] std::string make_uuid(RandomSource& rng);

[[nodiscard]] bool is_uuid(std::string_view s);

/// Stable 64-bit seed derivation (splitmix64 over the inputs).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace motionpi
