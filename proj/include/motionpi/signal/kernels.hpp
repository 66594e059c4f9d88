#pragma once

#include <cstdint>
#include <span>

#include "motionpi/signal/types.hpp"

// Data-parallel inner loops of the signal path. Every kernel has a scalar
// reference; vector variants must produce bit-identical output and are
// chosen once at startup from the host CPU features.
namespace motionpi::signal::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelSet {
    Isa isa;
    const char* name;
    /// out[i] = max(|s_i| - 1, 0). Non-finite input yields non-finite output.
    void (*enmo)(std::span<const AccelSample> in, std::span<double> out);
    /// Writes 3 int16 values per sample: round-half-even(axis * lsb_per_g),
    /// saturated to the int16 range.
    void (*quantize)(std::span<const AccelSample> in, double lsb_per_g, std::span<std::int16_t> out);
};

[[nodiscard]] const KernelSet& scalar();
/// nullptr when not compiled in or not supported by this CPU.
[[nodiscard]] const KernelSet* avx2();
[[nodiscard]] const KernelSet* neon();

/// Best available set. MOTIONPI_SIMD=scalar in the environment forces the
/// reference path.
[[nodiscard]] const KernelSet& active();

}  // namespace motionpi::signal::kernels
