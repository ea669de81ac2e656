#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "t1bs/t1bs.hpp"

using namespace t1bs;
using Catch::Approx;

TEST_CASE("splitmix64 reference value")
{
    // first output of the reference splitmix64 stream seeded with 0
    REQUIRE(splitmix64(0) == UINT64_C(0xE220A8397B1DCDAF));
}

TEST_CASE("streams are reproducible and distinct")
{
    Rng a(123, 5), b(123, 5), c(123, 6), d(124, 5);
    bool all_equal_c = true, all_equal_d = true;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t x = a.next_u64();
        REQUIRE(x == b.next_u64());
        all_equal_c = all_equal_c && x == c.next_u64();
        all_equal_d = all_equal_d && x == d.next_u64();
    }
    REQUIRE_FALSE(all_equal_c);
    REQUIRE_FALSE(all_equal_d);
}

TEST_CASE("uniform ranges")
{
    Rng rng(77);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo < 0.01);
    REQUIRE(hi > 0.99);

    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-3.0, 2.0);
        REQUIRE(v >= -3.0);
        REQUIRE(v < 2.0);
    }
}

TEST_CASE("gaussian pairs have the right moments")
{
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        const auto [g1, g2] = rng.gaussian_pair();
        sum += g1 + g2;
        sumsq += g1 * g1 + g2 * g2;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(mean == Approx(0.0).margin(0.01));
    REQUIRE(var == Approx(1.0).epsilon(0.02));
}

TEST_CASE("below never reaches its bound")
{
    Rng rng(5);
    for (int i = 0; i < 5000; ++i) REQUIRE(rng.below(7) < 7);
    // every residue appears
    bool seen[7] = {};
    for (int i = 0; i < 1000; ++i) seen[rng.below(7)] = true;
    for (bool s : seen) REQUIRE(s);
}
