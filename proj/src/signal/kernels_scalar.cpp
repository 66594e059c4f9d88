#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "motionpi/signal/kernels.hpp"

namespace motionpi::signal::kernels {

namespace {

void enmo_scalar(std::span<const AccelSample> in, std::span<double> out) {
    if (out.size() < in.size()) {
        throw std::length_error("enmo: output span too small");
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& s = in[i];
        const double sq = (s.ax * s.ax + s.ay * s.ay) + s.az * s.az;
        out[i] = std::max(std::sqrt(sq) - 1.0, 0.0);
    }
}

std::int16_t saturate_round(double v) {
    const double r = std::nearbyint(v);
    return static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
}

void quantize_scalar(std::span<const AccelSample> in, double lsb_per_g, std::span<std::int16_t> out) {
    if (out.size() < 3 * in.size()) {
        throw std::length_error("quantize: output span too small");
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[3 * i + 0] = saturate_round(in[i].ax * lsb_per_g);
        out[3 * i + 1] = saturate_round(in[i].ay * lsb_per_g);
        out[3 * i + 2] = saturate_round(in[i].az * lsb_per_g);
    }
}

constexpr KernelSet kScalar{Isa::Scalar, "scalar", &enmo_scalar, &quantize_scalar};

}  // namespace

const KernelSet& scalar() { return kScalar; }

#if !defined(MOTIONPI_HAVE_AVX2)
const KernelSet* avx2() { return nullptr; }
#endif

#if !defined(MOTIONPI_HAVE_NEON)
const KernelSet* neon() { return nullptr; }
#endif

const KernelSet& active() {
    static const KernelSet& chosen = [] () -> const KernelSet& {
        if (const char* env = std::getenv("MOTIONPI_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
            return kScalar;
        }
        if (const auto* k = avx2()) return *k;
        if (const auto* k = neon()) return *k;
        return kScalar;
    }();
    return chosen;
}

}  // namespace motionpi::signal::kernels
