// Compiled with -mavx2 only; callers reach it through avx2() after a CPU check.
#include <immintrin.h>

#include <stdexcept>

#include "motionpi/signal/kernels.hpp"

namespace motionpi::signal::kernels {

namespace {

// Loads four AoS samples and returns the x, y, z columns.
inline void load_xyz(const AccelSample* p, __m256d& x, __m256d& y, __m256d& z) {
    const __m256d r0 = _mm256_loadu_pd(&p[0].t);
    const __m256d r1 = _mm256_loadu_pd(&p[1].t);
    const __m256d r2 = _mm256_loadu_pd(&p[2].t);
    const __m256d r3 = _mm256_loadu_pd(&p[3].t);
    // 4x4 transpose; rows are (t, ax, ay, az).
    const __m256d t0 = _mm256_unpacklo_pd(r0, r1);  // t0 t1 ay0 ay1
    const __m256d t1 = _mm256_unpackhi_pd(r0, r1);  // ax0 ax1 az0 az1
    const __m256d t2 = _mm256_unpacklo_pd(r2, r3);  // t2 t3 ay2 ay3
    const __m256d t3 = _mm256_unpackhi_pd(r2, r3);  // ax2 ax3 az2 az3
    x = _mm256_permute2f128_pd(t1, t3, 0x20);
    y = _mm256_permute2f128_pd(t0, t2, 0x31);
    z = _mm256_permute2f128_pd(t1, t3, 0x31);
}

void enmo_avx2(std::span<const AccelSample> in, std::span<double> out) {
    if (out.size() < in.size()) {
        throw std::length_error("enmo: output span too small");
    }
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x, y, z;
        load_xyz(in.data() + i, x, y, z);
        // Same association as the scalar path: (x*x + y*y) + z*z, no FMA.
        const __m256d sq = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y)),
                                         _mm256_mul_pd(z, z));
        const __m256d e = _mm256_sub_pd(_mm256_sqrt_pd(sq), one);
        // max(zero, e) returns e when e is NaN, matching std::max(e, 0.0).
        _mm256_storeu_pd(out.data() + i, _mm256_max_pd(zero, e));
    }
    if (i < n) {
        scalar().enmo(in.subspan(i), out.subspan(i));
    }
}

void quantize_avx2(std::span<const AccelSample> in, double lsb_per_g, std::span<std::int16_t> out) {
    if (out.size() < 3 * in.size()) {
        throw std::length_error("quantize: output span too small");
    }
    const __m256d scale = _mm256_set1_pd(lsb_per_g);
    const __m256d lo = _mm256_set1_pd(-32768.0);
    const __m256d hi = _mm256_set1_pd(32767.0);
    const std::size_t n = in.size();
    std::size_t i = 0;
    alignas(16) std::int32_t lanes[3][4];
    for (; i + 4 <= n; i += 4) {
        __m256d cols[3];
        load_xyz(in.data() + i, cols[0], cols[1], cols[2]);
        for (int c = 0; c < 3; ++c) {
            __m256d v = _mm256_round_pd(_mm256_mul_pd(cols[c], scale), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
            v = _mm256_min_pd(_mm256_max_pd(v, lo), hi);
            _mm_store_si128(reinterpret_cast<__m128i*>(lanes[c]), _mm256_cvtpd_epi32(v));
        }
        std::int16_t* dst = out.data() + 3 * i;
        for (int k = 0; k < 4; ++k) {
            dst[3 * k + 0] = static_cast<std::int16_t>(lanes[0][k]);
            dst[3 * k + 1] = static_cast<std::int16_t>(lanes[1][k]);
            dst[3 * k + 2] = static_cast<std::int16_t>(lanes[2][k]);
        }
    }
    if (i < n) {
        scalar().quantize(in.subspan(i), lsb_per_g, out.subspan(3 * i));
    }
}

constexpr KernelSet kAvx2{Isa::Avx2, "avx2", &enmo_avx2, &quantize_avx2};

}  // namespace

const KernelSet* avx2() {
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kAvx2 : nullptr;
}

}  // namespace motionpi::signal::kernels
