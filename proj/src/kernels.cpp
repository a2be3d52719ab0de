#include "chartattack/kernels.hpp"

#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace chartattack::kernels {

float dot_ref(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float norm_sq_ref(const float* a, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void blend_row_ref(uint8_t* row, std::size_t n_px, const uint8_t rgba[4]) {
    const unsigned a = rgba[3];
    if (a == 255) {
        for (std::size_t i = 0; i < n_px; ++i) std::memcpy(row + i * 4, rgba, 4);
        return;
    }
    if (a == 0) return;
    const unsigned inv = 255 - a;
    for (std::size_t i = 0; i < n_px; ++i) {
        uint8_t* px = row + i * 4;
        for (int c = 0; c < 3; ++c)
            px[c] = static_cast<uint8_t>((rgba[c] * a + px[c] * inv + 127) / 255);
        px[3] = static_cast<uint8_t>((255 * a + px[3] * inv + 127) / 255);
    }
}

#if defined(__x86_64__) || defined(_M_X64)

__attribute__((target("avx2,fma")))
float dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 sum = _mm_add_ps(lo, hi);
    sum = _mm_hadd_ps(sum, sum);
    sum = _mm_hadd_ps(sum, sum);
    float out = _mm_cvtss_f32(sum);
    for (; i < n; ++i) out += a[i] * b[i];
    return out;
}

__attribute__((target("avx2,fma")))
float norm_sq_avx2(const float* a, std::size_t n) {
    return dot_avx2(a, a, n);
}

namespace {

// (x + 1 + (x >> 8)) >> 8 == x / 255 for x <= 65152, covering
// s*a + d*inv + 127 with 8-bit inputs
__attribute__((target("avx2")))
inline __m256i mix16(__m256i dst16, __m256i src16, __m256i va, __m256i vinv, __m256i bias) {
    __m256i x = _mm256_add_epi16(_mm256_mullo_epi16(src16, va),
                                 _mm256_add_epi16(_mm256_mullo_epi16(dst16, vinv), bias));
    __m256i t = _mm256_add_epi16(_mm256_add_epi16(x, _mm256_set1_epi16(1)),
                                 _mm256_srli_epi16(x, 8));
    return _mm256_srli_epi16(t, 8);
}

}  // namespace

__attribute__((target("avx2")))
void blend_row_avx2(uint8_t* row, std::size_t n_px, const uint8_t rgba[4]) {
    const unsigned a = rgba[3];
    if (a == 255) {
        uint32_t px;
        std::memcpy(&px, rgba, 4);
        __m256i v = _mm256_set1_epi32(static_cast<int>(px));
        std::size_t i = 0;
        for (; i + 8 <= n_px; i += 8)
            _mm256_storeu_si256(reinterpret_cast<__m256i*>(row + i * 4), v);
        for (; i < n_px; ++i) std::memcpy(row + i * 4, rgba, 4);
        return;
    }
    if (a == 0) return;

    // widen to 16-bit lanes; (s*a + d*inv + 127)/255 via the exact
    // (x + 1 + (x >> 8)) >> 8 reduction of x = s*a + d*inv + 127
    const __m256i va = _mm256_set1_epi16(static_cast<short>(a));
    const __m256i vinv = _mm256_set1_epi16(static_cast<short>(255 - a));
    alignas(32) uint8_t src8[32];
    for (int i = 0; i < 8; ++i) {
        src8[i * 4 + 0] = rgba[0];
        src8[i * 4 + 1] = rgba[1];
        src8[i * 4 + 2] = rgba[2];
        src8[i * 4 + 3] = 255;
    }
    const __m256i vsrc = _mm256_load_si256(reinterpret_cast<const __m256i*>(src8));
    const __m256i vsrc_lo = _mm256_unpacklo_epi8(vsrc, _mm256_setzero_si256());
    const __m256i vsrc_hi = _mm256_unpackhi_epi8(vsrc, _mm256_setzero_si256());
    const __m256i bias = _mm256_set1_epi16(127);

    std::size_t i = 0;
    for (; i + 8 <= n_px; i += 8) {
        __m256i dst = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + i * 4));
        __m256i dst_lo = _mm256_unpacklo_epi8(dst, _mm256_setzero_si256());
        __m256i dst_hi = _mm256_unpackhi_epi8(dst, _mm256_setzero_si256());
        __m256i out = _mm256_packus_epi16(mix16(dst_lo, vsrc_lo, va, vinv, bias),
                                          mix16(dst_hi, vsrc_hi, va, vinv, bias));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(row + i * 4), out);
    }
    if (i < n_px) blend_row_ref(row + i * 4, n_px - i, rgba);
}

#endif  // x86_64

namespace {

bool have_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const char* g_variant = "scalar";

bool apply_variant(const char* name) {
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(name, "avx2") == 0 && have_avx2()) {
        dot = dot_avx2;
        norm_sq = norm_sq_avx2;
        blend_row = blend_row_avx2;
        g_variant = "avx2";
        return true;
    }
#endif
    if (std::strcmp(name, "scalar") == 0) {
        dot = dot_ref;
        norm_sq = norm_sq_ref;
        blend_row = blend_row_ref;
        g_variant = "scalar";
        return true;
    }
    return false;
}

struct Init {
    Init() { apply_variant(have_avx2() ? "avx2" : "scalar"); }
};

}  // namespace

DotFn dot = dot_ref;
NormSqFn norm_sq = norm_sq_ref;
BlendRowFn blend_row = blend_row_ref;

namespace {
Init g_init;
}

const char* active_variant() { return g_variant; }

bool select_variant(const char* name) { return apply_variant(name); }

}  // namespace chartattack::kernels
