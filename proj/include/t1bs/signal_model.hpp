#ifndef T1BS_SIGNAL_MODEL_HPP
#define T1BS_SIGNAL_MODEL_HPP

#include <cmath>

#include <Eigen/Dense>

#include "t1bs/types.hpp"

namespace t1bs {

inline Vec3 orientation_from_polar(double theta, double phi)
{
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

/// Inverse of orientation_from_polar for unit vectors; theta in [0, pi],
/// phi in [-pi, pi].
inline void polar_from_orientation(const Vec3& n, double& theta, double& phi)
{
    double z = n[2];
    if (z > 1.0) z = 1.0;
    if (z < -1.0) z = -1.0;
    theta = std::acos(z);
    phi = (n[0] == 0.0 && n[1] == 0.0) ? 0.0 : std::atan2(n[1], n[0]);
}

inline TissueParams clamp_params(const TissueParams& p, const ParamBounds& bounds)
{
    auto a = p.as_array();
    for (int i = 0; i < kNumParams; ++i) {
        if (a[i] < bounds.lo[i]) a[i] = bounds.lo[i];
        if (a[i] > bounds.hi[i]) a[i] = bounds.hi[i];
    }
    return TissueParams::from_array(a);
}

/// Per-parameter derivative of clamp_params: 1 inside or on a bound, 0 outside.
inline std::array<double, kNumParams> clamp_gate(const TissueParams& p, const ParamBounds& bounds)
{
    const auto a = p.as_array();
    std::array<double, kNumParams> gate{};
    for (int i = 0; i < kNumParams; ++i)
        gate[i] = (a[i] >= bounds.lo[i] && a[i] <= bounds.hi[i]) ? 1.0 : 0.0;
    return gate;
}

/// Inversion-recovery factor before the magnitude is taken.
inline double inversion_factor(double ti, double tr, double t1, IrForm form)
{
    if (form == IrForm::product) return 1.0 - 2.0 * std::exp(-ti / t1) * std::exp(-tr / t1);
    return 1.0 - 2.0 * std::exp(-ti / t1) + std::exp(-tr / t1);
}

inline double inversion_factor_dt1(double ti, double tr, double t1, IrForm form)
{
    const double t1sq = t1 * t1;
    if (form == IrForm::product)
        return -2.0 * std::exp(-ti / t1) * std::exp(-tr / t1) * ((ti + tr) / t1sq);
    return -2.0 * std::exp(-ti / t1) * (ti / t1sq) + std::exp(-tr / t1) * (tr / t1sq);
}

inline double stick_direction_factor(double dot, StickExponent se)
{
    return se == StickExponent::squared ? dot * dot : dot;
}

/// Diffusion attenuation along the stick times |IR factor|; multiply by f.
inline double stick_component(double b, double lambda_par, double t1_stick, double dot,
                              double ti, double tr, const ModelOptions& opts)
{
    const double att = std::exp(-b * lambda_par * stick_direction_factor(dot, opts.stick_exponent));
    return att * std::fabs(inversion_factor(ti, tr, t1_stick, opts.ir_form));
}

/// Isotropic attenuation times |IR factor|; multiply by 1 - f.
inline double ball_component(double b, double lambda_iso, double t1_ball,
                             double ti, double tr, const ModelOptions& opts)
{
    const double att = std::exp(-b * lambda_iso);
    return att * std::fabs(inversion_factor(ti, tr, t1_ball, opts.ir_form));
}

/// Two-compartment signal for one measurement. Parameters are used as given
/// (no clamping); callers own bound handling.
inline double predict_signal(const TissueParams& p, const Measurement& m,
                             const ModelOptions& opts = {})
{
    const Vec3 n = orientation_from_polar(p.theta, p.phi);
    const double dot = dot3(m.g, n);
    const double stick = p.f * stick_component(m.b, p.lambda_par, p.t1_stick, dot, m.ti, m.tr, opts);
    const double ball = (1.0 - p.f) * ball_component(m.b, p.lambda_iso, p.t1_ball, m.ti, m.tr, opts);
    return stick + ball;
}

inline void validate_params_finite(const TissueParams& p)
{
    if (!p.all_finite()) throw ValidationError("tissue parameters must be finite");
}

inline Eigen::VectorXd predict_signals(const TissueParams& p, const AcquisitionProtocol& protocol,
                                       const ModelOptions& opts = {})
{
    validate_params_finite(p);
    if (protocol.size() == 0) throw ValidationError("protocol has no measurements");
    Eigen::VectorXd s(static_cast<Eigen::Index>(protocol.size()));
    const Vec3 n = orientation_from_polar(p.theta, p.phi);
    for (std::size_t i = 0; i < protocol.size(); ++i) {
        const Measurement& m = protocol.measurements[i];
        const double dot = dot3(m.g, n);
        const double stick =
            p.f * stick_component(m.b, p.lambda_par, p.t1_stick, dot, m.ti, m.tr, opts);
        const double ball =
            (1.0 - p.f) * ball_component(m.b, p.lambda_iso, p.t1_ball, m.ti, m.tr, opts);
        s[static_cast<Eigen::Index>(i)] = stick + ball;
    }
    return s;
}

namespace detail {

inline double sign_or_zero(double x)
{
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return 0.0;
}

}  // namespace detail

/// Signal and analytic Jacobian in one pass. J is n_meas x 7 with columns in
/// canonical parameter order. Rows of J are contiguous.
inline void predict_with_jacobian(const TissueParams& p, const AcquisitionProtocol& protocol,
                                  const ModelOptions& opts, Eigen::VectorXd& s, RowMatrixXd& J)
{
    validate_params_finite(p);
    const std::size_t n_meas = protocol.size();
    if (n_meas == 0) throw ValidationError("protocol has no measurements");
    s.resize(static_cast<Eigen::Index>(n_meas));
    J.resize(static_cast<Eigen::Index>(n_meas), kNumParams);

    const double st = std::sin(p.theta);
    const double ct = std::cos(p.theta);
    const double sp = std::sin(p.phi);
    const double cp = std::cos(p.phi);
    const Vec3 n = {st * cp, st * sp, ct};
    const Vec3 dn_dtheta = {ct * cp, ct * sp, -st};
    const Vec3 dn_dphi = {-st * sp, st * cp, 0.0};

    for (std::size_t i = 0; i < n_meas; ++i) {
        const Measurement& m = protocol.measurements[i];
        const auto row = static_cast<Eigen::Index>(i);

        const double dot = dot3(m.g, n);
        const double dir = stick_direction_factor(dot, opts.stick_exponent);
        const double att_s = std::exp(-m.b * p.lambda_par * dir);
        const double att_b = std::exp(-m.b * p.lambda_iso);
        const double rs = inversion_factor(m.ti, m.tr, p.t1_stick, opts.ir_form);
        const double rb = inversion_factor(m.ti, m.tr, p.t1_ball, opts.ir_form);
        const double abs_rs = std::fabs(rs);
        const double abs_rb = std::fabs(rb);

        s[row] = p.f * (att_s * abs_rs) + (1.0 - p.f) * (att_b * abs_rb);

        J(row, 0) = att_s * abs_rs - att_b * abs_rb;
        J(row, 1) = p.f * att_s * (-m.b * dir) * abs_rs;
        J(row, 2) = (1.0 - p.f) * att_b * (-m.b) * abs_rb;
        J(row, 3) = p.f * att_s * detail::sign_or_zero(rs) *
                    inversion_factor_dt1(m.ti, m.tr, p.t1_stick, opts.ir_form);
        J(row, 4) = (1.0 - p.f) * att_b * detail::sign_or_zero(rb) *
                    inversion_factor_dt1(m.ti, m.tr, p.t1_ball, opts.ir_form);

        const double ddir_ddot = opts.stick_exponent == StickExponent::squared ? 2.0 * dot : 1.0;
        const double ds_ddot = p.f * att_s * (-m.b * p.lambda_par * ddir_ddot) * abs_rs;
        J(row, 5) = ds_ddot * dot3(m.g, dn_dtheta);
        J(row, 6) = ds_ddot * dot3(m.g, dn_dphi);
    }
}

inline RowMatrixXd signal_jacobian(const TissueParams& p, const AcquisitionProtocol& protocol,
                                   const ModelOptions& opts = {})
{
    Eigen::VectorXd s;
    RowMatrixXd J;
    predict_with_jacobian(p, protocol, opts, s, J);
    return J;
}

}  // namespace t1bs

#endif  // T1BS_SIGNAL_MODEL_HPP
