#ifndef T1BS_PRESETS_HPP
#define T1BS_PRESETS_HPP

#include <cmath>
#include <vector>

#include "t1bs/acquisition.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

/// n near-uniform unit directions over the full sphere (golden-angle spiral).
inline std::vector<Vec3> fibonacci_sphere_directions(std::size_t n)
{
    if (n < 1) throw ValidationError("need at least 1 direction");
    constexpr double golden_conj = 0.6180339887498949;
    constexpr double two_pi = 6.283185307179586476925;
    std::vector<Vec3> dirs(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double frac = static_cast<double>(k) * golden_conj;
        frac -= std::floor(frac);
        const double phi = two_pi * frac;
        dirs[k] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return dirs;
}

/// Combined inversion-recovery / diffusion protocol shaped like the MUDI
/// acquisition: per inversion time one b=0 volume plus diffusion volumes
/// cycling shells {0.5, 1, 2, 3} ms/um^2 over rotating directions; TE 80 ms,
/// TR 7.5 s. Inversion times are geometrically spaced over [176, 4673] ms.
/// include_ti_outliers adds a 20 ms and a 7322 ms block, the two ends that a
/// [0.176, 4.673] s filter later removes. Defaults give 26 x 16 = 416 rows.
inline AcquisitionProtocol make_mudi_like_protocol(std::size_t n_ti = 26, std::size_t per_ti = 16,
                                                   bool include_ti_outliers = false)
{
    if (n_ti < 2) throw ValidationError("need at least 2 inversion times");
    if (per_ti < 1) throw ValidationError("need at least 1 measurement per inversion time");

    std::vector<double> tis(n_ti);
    const double lo = 0.176, hi = 4.673;
    const double span = std::log(hi / lo);
    for (std::size_t k = 0; k < n_ti; ++k)
        tis[k] = lo * std::exp(span * static_cast<double>(k) / static_cast<double>(n_ti - 1));
    tis.front() = lo;
    tis.back() = hi;
    if (include_ti_outliers) {
        tis.insert(tis.begin(), 0.020);
        tis.push_back(7.322);
    }

    const double shells[4] = {0.5, 1.0, 2.0, 3.0};
    const std::size_t n_dirs = per_ti > 1 ? per_ti - 1 : 1;
    const std::vector<Vec3> dirs = fibonacci_sphere_directions(n_dirs);

    std::vector<Measurement> rows;
    rows.reserve(tis.size() * per_ti);
    for (std::size_t it = 0; it < tis.size(); ++it) {
        Measurement b0;
        b0.b = 0.0;
        b0.g = {0.0, 0.0, 0.0};
        b0.ti = tis[it];
        b0.te = 0.08;
        b0.tr = 7.5;
        rows.push_back(b0);
        for (std::size_t r = 1; r < per_ti; ++r) {
            Measurement m;
            m.b = shells[(r - 1) % 4];
            m.g = dirs[(r - 1 + 3 * it) % n_dirs];
            m.ti = tis[it];
            m.te = 0.08;
            m.tr = 7.5;
            rows.push_back(m);
        }
    }
    return make_protocol(std::move(rows));
}

}  // namespace t1bs

#endif  // T1BS_PRESETS_HPP
