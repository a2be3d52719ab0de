#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "chartattack/kernels.hpp"
#include "chartattack/rng.hpp"

using namespace chartattack;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("dot and norm agree between scalar and the active variant") {
    Rng rng(17);
    for (std::size_t n : {0ul, 1ul, 7ul, 8ul, 9ul, 31ul, 64ul, 257ul, 1000ul}) {
        std::vector<float> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
            b[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
        }
        float ref = kernels::dot_ref(a.data(), b.data(), n);
        float active = kernels::dot(a.data(), b.data(), n);
        // FP reassociation allows small drift
        CHECK(std::fabs(active - ref) <= 1e-4f * (1.0f + std::fabs(ref)));
        CHECK(std::fabs(kernels::norm_sq(a.data(), n) - kernels::norm_sq_ref(a.data(), n)) <=
              1e-4f * (1.0f + kernels::norm_sq_ref(a.data(), n)));
    }
}

TEST_CASE("row blend variants are bit-identical") {
    if (!kernels::select_variant("avx2")) {
        MESSAGE("avx2 unavailable; scalar-only environment");
        return;
    }
    Rng rng(99);
    for (int round = 0; round < 50; ++round) {
        std::size_t n = 1 + rng.below(40);
        std::vector<uint8_t> base(n * 4);
        for (auto& v : base) v = static_cast<uint8_t>(rng.below(256));
        uint8_t color[4];
        for (auto& v : color) v = static_cast<uint8_t>(rng.below(256));

        std::vector<uint8_t> scalar_out = base;
        std::vector<uint8_t> simd_out = base;
        kernels::blend_row_ref(scalar_out.data(), n, color);
        kernels::blend_row_avx2(simd_out.data(), n, color);
        CHECK(std::memcmp(scalar_out.data(), simd_out.data(), n * 4) == 0);
    }
    // opaque and transparent fast paths
    std::vector<uint8_t> row(64, 7);
    uint8_t opaque[4] = {1, 2, 3, 255};
    std::vector<uint8_t> r1 = row, r2 = row;
    kernels::blend_row_ref(r1.data(), 16, opaque);
    kernels::blend_row_avx2(r2.data(), 16, opaque);
    CHECK(r1 == r2);
    uint8_t clear[4] = {9, 9, 9, 0};
    kernels::blend_row_avx2(r2.data(), 16, clear);
    CHECK(r1 == r2);
    kernels::select_variant(kernels::active_variant());
}

TEST_CASE("variant selection reports what it applies") {
    const char* before = kernels::active_variant();
    CHECK(kernels::select_variant("scalar"));
    CHECK(std::strcmp(kernels::active_variant(), "scalar") == 0);
    CHECK_FALSE(kernels::select_variant("sse999"));
    kernels::select_variant(before);
}

TEST_SUITE_END();
