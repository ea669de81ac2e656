#ifndef T1BS_EVALUATION_HPP
#define T1BS_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "t1bs/signal_model.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw ValidationError("pearson_r: length mismatch");
    if (x.size() < 2) throw ValidationError("pearson_r: need at least 2 samples");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("pearson_r: undefined for zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

/// Angle between undirected orientations: arccos(|n1.n2|), in [0, pi/2].
inline double angular_error(double theta1, double phi1, double theta2, double phi2)
{
    const Vec3 n1 = orientation_from_polar(theta1, phi1);
    const Vec3 n2 = orientation_from_polar(theta2, phi2);
    double d = std::fabs(dot3(n1, n2));
    if (d > 1.0) d = 1.0;
    return std::acos(d);
}

struct Rgb {
    unsigned char r = 0, g = 0, b = 0;
};

/// Direction-encoded colour: round(255 * weight * |n_i|) per channel.
inline Rgb dec_color(double theta, double phi, double weight)
{
    if (!(weight >= 0.0 && weight <= 1.0)) throw ValidationError("DEC weight must be in [0, 1]");
    const Vec3 n = orientation_from_polar(theta, phi);
    Rgb c;
    c.r = static_cast<unsigned char>(std::lround(255.0 * weight * std::fabs(n[0])));
    c.g = static_cast<unsigned char>(std::lround(255.0 * weight * std::fabs(n[1])));
    c.b = static_cast<unsigned char>(std::lround(255.0 * weight * std::fabs(n[2])));
    return c;
}

struct FitReport {
    std::string fitter;
    std::array<double, kNumScalarParams> r{};  // per scalar parameter, canonical order
    double mean_angular_error = 0.0;
    double median_angular_error = 0.0;
    double wall_seconds = 0.0;
    std::size_t n_voxels = 0;
};

inline FitReport evaluate_fit(const std::vector<TissueParams>& truth,
                              const std::vector<TissueParams>& est, double wall_seconds,
                              const std::string& fitter_name)
{
    if (truth.size() != est.size()) throw ValidationError("truth and estimate lengths differ");
    if (truth.size() < 2) throw ValidationError("need at least 2 voxels to evaluate");

    FitReport rep;
    rep.fitter = fitter_name;
    rep.wall_seconds = wall_seconds;
    rep.n_voxels = truth.size();

    std::vector<double> a(truth.size()), b(truth.size());
    for (int p = 0; p < kNumScalarParams; ++p) {
        for (std::size_t v = 0; v < truth.size(); ++v) {
            a[v] = truth[v][p];
            b[v] = est[v][p];
        }
        // a degenerate estimate (every voxel on the same bound) has no
        // defined correlation; report NaN instead of refusing the whole fit
        try {
            rep.r[static_cast<std::size_t>(p)] = pearson_r(a, b);
        } catch (const ValidationError&) {
            rep.r[static_cast<std::size_t>(p)] = std::numeric_limits<double>::quiet_NaN();
        }
    }

    std::vector<double> ang(truth.size());
    double sum = 0.0;
    for (std::size_t v = 0; v < truth.size(); ++v) {
        ang[v] = angular_error(truth[v].theta, truth[v].phi, est[v].theta, est[v].phi);
        sum += ang[v];
    }
    rep.mean_angular_error = sum / static_cast<double>(ang.size());
    std::sort(ang.begin(), ang.end());
    const std::size_t mid = ang.size() / 2;
    rep.median_angular_error =
        ang.size() % 2 == 1 ? ang[mid] : 0.5 * (ang[mid - 1] + ang[mid]);
    return rep;
}

/// Side-by-side report for two fitters over the same truth.
inline std::pair<FitReport, FitReport> compare_fits(const std::vector<TissueParams>& truth,
                                                    const std::vector<TissueParams>& est_a,
                                                    const std::vector<TissueParams>& est_b,
                                                    double wall_a, double wall_b,
                                                    const std::string& name_a = "a",
                                                    const std::string& name_b = "b")
{
    return {evaluate_fit(truth, est_a, wall_a, name_a), evaluate_fit(truth, est_b, wall_b, name_b)};
}

}  // namespace t1bs

#endif  // T1BS_EVALUATION_HPP
