#ifndef T1BS_RNG_HPP
#define T1BS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace t1bs {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seedable stream RNG. Distinct (seed, stream) pairs give statistically
/// independent substreams, so per-voxel generation can run on any number of
/// workers and still match a serial run bit for bit.
///
/// Engine: mt19937_64 seeded through splitmix64. Uniform and Gaussian draws
/// are produced by explicit formulas (53-bit mantissa scaling, Box-Muller)
/// rather than std::*_distribution, so sequences do not depend on the
/// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9E3779B97F4A7C15ULL + 1)))
    {
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b); returns exactly a when a == b.
    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    /// Integer uniform on [0, n) by rejection (unbiased).
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Two independent N(0, 1) draws (Box-Muller).
    std::pair<double, double> gaussian_pair()
    {
        const double u1 = 1.0 - uniform01();  // (0, 1]: log is safe
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.28318530717958647692;
        return {r * std::cos(two_pi * u2), r * std::sin(two_pi * u2)};
    }

    double gaussian() { return gaussian_pair().first; }

private:
    std::mt19937_64 engine_;
};

/// Identifier recorded in run metadata so outputs are reproducible.
inline const char* rng_id() { return "mt19937_64/splitmix64/box-muller"; }

}  // namespace t1bs

#endif  // T1BS_RNG_HPP
