#pragma once

#include <cstddef>
#include <cstdint>

namespace chartattack::kernels {

// Inner-loop primitives with scalar reference implementations and AVX2
// variants selected once at startup. The scalar forms are the source of
// truth; SIMD variants are equivalence-tested against them.

// dot product / squared L2 norm over float vectors (retrieval cosine scan)
using DotFn = float (*)(const float*, const float*, std::size_t);
using NormSqFn = float (*)(const float*, std::size_t);

// src-over blend of a constant RGBA color into a pixel row, integer
// exact: out = (src * a + dst * (255 - a) + 127) / 255 per channel.
using BlendRowFn = void (*)(uint8_t* row, std::size_t n_px, const uint8_t rgba[4]);

float dot_ref(const float* a, const float* b, std::size_t n);
float norm_sq_ref(const float* a, std::size_t n);
void blend_row_ref(uint8_t* row, std::size_t n_px, const uint8_t rgba[4]);

#if defined(__x86_64__) || defined(_M_X64)
float dot_avx2(const float* a, const float* b, std::size_t n);
float norm_sq_avx2(const float* a, std::size_t n);
void blend_row_avx2(uint8_t* row, std::size_t n_px, const uint8_t rgba[4]);
#endif

extern DotFn dot;
extern NormSqFn norm_sq;
extern BlendRowFn blend_row;

// Active variant name ("scalar" or "avx2"); dispatch happens during
// static initialization, this is informational.
const char* active_variant();

// Force a specific variant (tests); returns false if unavailable.
bool select_variant(const char* name);

}  // namespace chartattack::kernels
