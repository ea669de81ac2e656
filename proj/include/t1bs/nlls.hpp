#ifndef T1BS_NLLS_HPP
#define T1BS_NLLS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "t1bs/parallel.hpp"
#include "t1bs/signal_model.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

struct GridSpec {
    std::size_t points_per_scalar_param = 5;
    std::size_t n_orientations = 30;

    void validate() const
    {
        if (points_per_scalar_param < 2)
            throw ValidationError("grid needs at least 2 points per scalar parameter");
        if (n_orientations < 1) throw ValidationError("grid needs at least 1 orientation");
    }
};

struct NllsConfig {
    GridSpec grid;
    std::size_t max_iterations = 200;  // 0 is allowed: refinement becomes a no-op
    double convergence_tol = 1e-8;
    ParamBounds bounds = ParamBounds::defaults();
    ModelOptions opts;

    void validate() const
    {
        grid.validate();
        if (!(convergence_tol > 0.0)) throw ValidationError("convergence_tol must be positive");
        bounds.validate();
    }
};

/// k evenly spaced values covering [lo, hi], endpoints exact.
inline std::vector<double> grid_axis_values(double lo, double hi, std::size_t k)
{
    if (k < 2) throw ValidationError("axis needs at least 2 points");
    std::vector<double> v(k);
    const double step = (hi - lo) / static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) v[i] = lo + static_cast<double>(i) * step;
    v.front() = lo;
    v.back() = hi;
    return v;
}

/// Near-uniform directions on the upper hemisphere (golden-angle spiral),
/// returned as (theta, phi) with theta in (0, pi/2) and phi in [-pi, pi).
inline std::vector<std::array<double, 2>> hemisphere_angles(std::size_t n)
{
    if (n < 1) throw ValidationError("need at least 1 orientation");
    constexpr double golden_conj = 0.6180339887498949;
    constexpr double two_pi = 6.283185307179586476925;
    std::vector<std::array<double, 2>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double z = 1.0 - (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        double frac = static_cast<double>(k) * golden_conj;
        frac -= std::floor(frac);
        double phi = two_pi * frac;
        if (phi >= two_pi / 2.0) phi -= two_pi;
        out[k] = {std::acos(z), phi};
    }
    return out;
}

inline Eigen::VectorXd residuals(const TissueParams& params, const Eigen::VectorXd& signal,
                                 const AcquisitionProtocol& protocol, const ModelOptions& opts)
{
    if (signal.size() != static_cast<Eigen::Index>(protocol.size()))
        throw ValidationError("signal length does not match protocol");
    return predict_signals(params, protocol, opts) - signal;
}

namespace detail {

inline double half_sumsq(const Eigen::VectorXd& r)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) acc += r[i] * r[i];
    return 0.5 * acc;
}

}  // namespace detail

inline double nlls_cost(const TissueParams& params, const Eigen::VectorXd& signal,
                        const AcquisitionProtocol& protocol, const ModelOptions& opts)
{
    return detail::half_sumsq(residuals(params, signal, protocol, opts));
}

/// Model values factored for the grid scan. fp holds f * stick_component and
/// gq holds (1-f) * ball_component for every axis combination, laid out so
/// the innermost orientation loop walks consecutive rows. The arithmetic per
/// entry is grouped exactly as in predict_signals, so a scan cost equals the
/// naive per-point evaluation bit for bit.
struct GridTables {
    std::vector<double> f_axis, lpar_axis, liso_axis, t1s_axis, t1b_axis;
    std::vector<std::array<double, 2>> orientations;
    std::vector<double> fp;  // [((i_f*k + i_lpar)*k + i_t1s)*n_ori + i_ori] x n_meas
    std::vector<double> gq;  // [(i_f*k + i_liso)*k + i_t1b] x n_meas
    std::size_t k = 0, n_ori = 0, n_meas = 0;
};

inline GridTables make_grid_tables(const AcquisitionProtocol& protocol, const GridSpec& grid,
                                   const ParamBounds& bounds, const ModelOptions& opts)
{
    grid.validate();
    bounds.validate();
    const std::size_t n_meas = protocol.size();
    if (n_meas == 0) throw ValidationError("protocol has no measurements");

    GridTables t;
    t.k = grid.points_per_scalar_param;
    t.n_ori = grid.n_orientations;
    t.n_meas = n_meas;
    t.f_axis = grid_axis_values(bounds.lo[0], bounds.hi[0], t.k);
    t.lpar_axis = grid_axis_values(bounds.lo[1], bounds.hi[1], t.k);
    t.liso_axis = grid_axis_values(bounds.lo[2], bounds.hi[2], t.k);
    t.t1s_axis = grid_axis_values(bounds.lo[3], bounds.hi[3], t.k);
    t.t1b_axis = grid_axis_values(bounds.lo[4], bounds.hi[4], t.k);
    t.orientations = hemisphere_angles(t.n_ori);

    // stick_component per (lambda_par, t1_stick, orientation)
    std::vector<double> stick(t.k * t.k * t.n_ori * n_meas);
    for (std::size_t io = 0; io < t.n_ori; ++io) {
        const Vec3 n = orientation_from_polar(t.orientations[io][0], t.orientations[io][1]);
        for (std::size_t il = 0; il < t.k; ++il)
            for (std::size_t it = 0; it < t.k; ++it) {
                double* row = &stick[((il * t.k + it) * t.n_ori + io) * n_meas];
                for (std::size_t m = 0; m < n_meas; ++m) {
                    const Measurement& meas = protocol.measurements[m];
                    row[m] = stick_component(meas.b, t.lpar_axis[il], t.t1s_axis[it],
                                             dot3(meas.g, n), meas.ti, meas.tr, opts);
                }
            }
    }
    std::vector<double> ball(t.k * t.k * n_meas);
    for (std::size_t il = 0; il < t.k; ++il)
        for (std::size_t it = 0; it < t.k; ++it) {
            double* row = &ball[(il * t.k + it) * n_meas];
            for (std::size_t m = 0; m < n_meas; ++m) {
                const Measurement& meas = protocol.measurements[m];
                row[m] =
                    ball_component(meas.b, t.liso_axis[il], t.t1b_axis[it], meas.ti, meas.tr, opts);
            }
        }

    t.fp.resize(t.k * stick.size());
    for (std::size_t i_f = 0; i_f < t.k; ++i_f) {
        const double f = t.f_axis[i_f];
        double* dst = &t.fp[i_f * stick.size()];
        for (std::size_t i = 0; i < stick.size(); ++i) dst[i] = f * stick[i];
    }
    t.gq.resize(t.k * ball.size());
    for (std::size_t i_f = 0; i_f < t.k; ++i_f) {
        const double one_minus_f = 1.0 - t.f_axis[i_f];
        double* dst = &t.gq[i_f * ball.size()];
        for (std::size_t i = 0; i < ball.size(); ++i) dst[i] = one_minus_f * ball[i];
    }
    return t;
}

/// Scans every grid point in canonical order
/// [f][lambda_par][lambda_iso][t1_stick][t1_ball][orientation] and returns
/// the first point attaining the minimal cost. The running sum of squares is
/// accumulated in measurement order; a partial sum already above the best is
/// abandoned early, which cannot change the winner.
inline TissueParams grid_search_tables(const Eigen::VectorXd& signal, const GridTables& t)
{
    if (signal.size() != static_cast<Eigen::Index>(t.n_meas))
        throw ValidationError("signal length does not match grid tables");
    const double* y = signal.data();
    const std::size_t k = t.k, n_ori = t.n_ori, n_meas = t.n_meas;

    double best_acc = std::numeric_limits<double>::infinity();
    std::size_t bi_f = 0, bi_lpar = 0, bi_liso = 0, bi_t1s = 0, bi_t1b = 0, bi_ori = 0;

    for (std::size_t i_f = 0; i_f < k; ++i_f) {
        const double* fp_f = &t.fp[i_f * (k * k * n_ori * n_meas)];
        const double* gq_f = &t.gq[i_f * (k * k * n_meas)];
        for (std::size_t i_lpar = 0; i_lpar < k; ++i_lpar)
            for (std::size_t i_liso = 0; i_liso < k; ++i_liso)
                for (std::size_t i_t1s = 0; i_t1s < k; ++i_t1s) {
                    const double* fp_block = &fp_f[(i_lpar * k + i_t1s) * n_ori * n_meas];
                    for (std::size_t i_t1b = 0; i_t1b < k; ++i_t1b) {
                        const double* gq_row = &gq_f[(i_liso * k + i_t1b) * n_meas];
                        for (std::size_t i_ori = 0; i_ori < n_ori; ++i_ori) {
                            const double* fp_row = &fp_block[i_ori * n_meas];
                            double acc = 0.0;
                            bool abandoned = false;
                            for (std::size_t m0 = 0; m0 < n_meas && !abandoned; m0 += 16) {
                                const std::size_t me = std::min(m0 + 16, n_meas);
                                for (std::size_t m = m0; m < me; ++m) {
                                    const double s = fp_row[m] + gq_row[m];
                                    const double r = s - y[m];
                                    acc += r * r;
                                }
                                abandoned = acc > best_acc;
                            }
                            if (!abandoned && acc < best_acc) {
                                best_acc = acc;
                                bi_f = i_f;
                                bi_lpar = i_lpar;
                                bi_liso = i_liso;
                                bi_t1s = i_t1s;
                                bi_t1b = i_t1b;
                                bi_ori = i_ori;
                            }
                        }
                    }
                }
    }

    TissueParams p;
    p.f = t.f_axis[bi_f];
    p.lambda_par = t.lpar_axis[bi_lpar];
    p.lambda_iso = t.liso_axis[bi_liso];
    p.t1_stick = t.t1s_axis[bi_t1s];
    p.t1_ball = t.t1b_axis[bi_t1b];
    p.theta = t.orientations[bi_ori][0];
    p.phi = t.orientations[bi_ori][1];
    return p;
}

inline TissueParams grid_search(const Eigen::VectorXd& signal, const AcquisitionProtocol& protocol,
                                const GridSpec& grid, const ParamBounds& bounds,
                                const ModelOptions& opts)
{
    const GridTables t = make_grid_tables(protocol, grid, bounds, opts);
    return grid_search_tables(signal, t);
}

struct RefineResult {
    TissueParams params;
    double cost = 0.0;
    std::size_t n_iter = 0;  // accepted steps
    bool aborted = false;    // non-finite cost encountered; params = init
};

/// Levenberg-Marquardt with box constraints by projection: each trial point
/// is clamped before evaluation and accepted only on strict cost decrease,
/// so the final cost never exceeds the initial one. Damping 1e-3, x10 on
/// rejection, /10 on acceptance.
inline RefineResult refine(const Eigen::VectorXd& signal, const AcquisitionProtocol& protocol,
                           const TissueParams& init, const NllsConfig& config)
{
    config.validate();
    if (signal.size() != static_cast<Eigen::Index>(protocol.size()))
        throw ValidationError("signal length does not match protocol");

    const TissueParams start = clamp_params(init, config.bounds);
    TissueParams x = start;
    Eigen::VectorXd s;
    RowMatrixXd J;
    predict_with_jacobian(x, protocol, config.opts, s, J);
    Eigen::VectorXd r = s - signal;
    double cost = detail::half_sumsq(r);

    RefineResult out;
    out.params = x;
    out.cost = cost;
    if (!std::isfinite(cost)) {
        out.aborted = true;
        return out;
    }
    if (cost == 0.0) return out;

    double lambda = 1e-3;
    for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() <= 1e-12) break;
        const Eigen::MatrixXd A = J.transpose() * J;
        Eigen::VectorXd D = A.diagonal();
        for (int i = 0; i < kNumParams; ++i) D[i] = std::max(D[i], 1e-12);

        bool accepted = false;
        while (true) {
            Eigen::MatrixXd M = A;
            M.diagonal() += lambda * D;
            const Eigen::VectorXd delta = M.ldlt().solve(-g);

            auto xa = x.as_array();
            for (int i = 0; i < kNumParams; ++i) xa[i] += delta[i];
            const TissueParams trial =
                clamp_params(TissueParams::from_array(xa), config.bounds);

            Eigen::VectorXd s2;
            RowMatrixXd J2;
            predict_with_jacobian(trial, protocol, config.opts, s2, J2);
            Eigen::VectorXd r2 = s2 - signal;
            const double cost2 = detail::half_sumsq(r2);

            if (!std::isfinite(cost2)) {
                out.params = start;
                out.cost = detail::half_sumsq(residuals(start, signal, protocol, config.opts));
                out.aborted = true;
                return out;
            }
            if (cost2 < cost) {
                const double rel = (cost - cost2) / cost;
                x = trial;
                r = std::move(r2);
                J = std::move(J2);
                cost = cost2;
                lambda = std::max(lambda / 10.0, 1e-15);
                ++out.n_iter;
                accepted = true;
                out.params = x;
                out.cost = cost;
                if (rel < config.convergence_tol || cost == 0.0) return out;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e14) break;
        }
        if (!accepted) break;  // damping overflow: no direction improves
    }
    out.params = x;
    out.cost = cost;
    return out;
}

struct NllsVolumeFit {
    std::vector<TissueParams> params;
    std::vector<double> cost;
    std::vector<std::size_t> failed_voxels;  // aborted refinements (kept grid/init values)
    double wall_seconds = 0.0;
};

/// Grid search then refinement per voxel. Results are written by voxel index
/// and the grid tables are shared read-only, so any worker count gives the
/// same output.
inline NllsVolumeFit fit_volume_nlls(const SignalMatrix& signals,
                                     const AcquisitionProtocol& protocol, const NllsConfig& config,
                                     unsigned n_workers = 1)
{
    config.validate();
    if (signals.n_voxels == 0) throw ValidationError("no voxels to fit");
    if (signals.n_meas != protocol.size())
        throw ValidationError("signals and protocol measurement counts differ");

    const auto t0 = std::chrono::steady_clock::now();
    const GridTables tables = make_grid_tables(protocol, config.grid, config.bounds, config.opts);

    NllsVolumeFit out;
    out.params.resize(signals.n_voxels);
    out.cost.resize(signals.n_voxels);
    std::vector<unsigned char> failed(signals.n_voxels, 0);

    parallel_for(signals.n_voxels, n_workers, [&](std::size_t v) {
        const Eigen::VectorXd y = signals.values.row(static_cast<Eigen::Index>(v)).transpose();
        const TissueParams init = grid_search_tables(y, tables);
        const RefineResult rr = refine(y, protocol, init, config);
        out.params[v] = rr.params;
        out.cost[v] = rr.cost;
        failed[v] = rr.aborted ? 1 : 0;
    });
    for (std::size_t v = 0; v < signals.n_voxels; ++v)
        if (failed[v]) out.failed_voxels.push_back(v);

    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace t1bs

#endif  // T1BS_NLLS_HPP
