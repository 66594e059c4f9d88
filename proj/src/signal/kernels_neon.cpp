// AArch64 only: Advanced SIMD is part of the base ISA there.
#include <arm_neon.h>

#include <stdexcept>

#include "motionpi/signal/kernels.hpp"

namespace motionpi::signal::kernels {

namespace {

void enmo_neon(std::span<const AccelSample> in, std::span<double> out) {
    if (out.size() < in.size()) {
        throw std::length_error("enmo: output span too small");
    }
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t zero = vdupq_n_f64(0.0);
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // ld4 de-interleaves (t, ax, ay, az) rows of two samples.
        const float64x2x4_t rows = vld4q_f64(&in[i].t);
        const float64x2_t x = rows.val[1];
        const float64x2_t y = rows.val[2];
        const float64x2_t z = rows.val[3];
        const float64x2_t sq = vaddq_f64(vaddq_f64(vmulq_f64(x, x), vmulq_f64(y, y)), vmulq_f64(z, z));
        const float64x2_t e = vsubq_f64(vsqrtq_f64(sq), one);
        // NaN must propagate like std::max(e, 0.0); vmaxq_f64 already does.
        vst1q_f64(out.data() + i, vmaxq_f64(e, zero));
    }
    if (i < n) {
        scalar().enmo(in.subspan(i), out.subspan(i));
    }
}

void quantize_neon(std::span<const AccelSample> in, double lsb_per_g, std::span<std::int16_t> out) {
    if (out.size() < 3 * in.size()) {
        throw std::length_error("quantize: output span too small");
    }
    const float64x2_t scale = vdupq_n_f64(lsb_per_g);
    const float64x2_t lo = vdupq_n_f64(-32768.0);
    const float64x2_t hi = vdupq_n_f64(32767.0);
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2x4_t rows = vld4q_f64(&in[i].t);
        std::int64_t lanes[3][2];
        for (int c = 0; c < 3; ++c) {
            float64x2_t v = vrndnq_f64(vmulq_f64(rows.val[c + 1], scale));
            v = vminq_f64(vmaxq_f64(v, lo), hi);
            vst1q_s64(lanes[c], vcvtq_s64_f64(v));
        }
        for (int k = 0; k < 2; ++k) {
            out[3 * (i + k) + 0] = static_cast<std::int16_t>(lanes[0][k]);
            out[3 * (i + k) + 1] = static_cast<std::int16_t>(lanes[1][k]);
            out[3 * (i + k) + 2] = static_cast<std::int16_t>(lanes[2][k]);
        }
    }
    if (i < n) {
        scalar().quantize(in.subspan(i), lsb_per_g, out.subspan(3 * i));
    }
}

constexpr KernelSet kNeon{Isa::Neon, "neon", &enmo_neon, &quantize_neon};

}  // namespace

const KernelSet* neon() { return &kNeon; }

}  // namespace motionpi::signal::kernels
