// Shared test fixtures: an independently coded long-double reference model,
// finite differences, tiny protocols, and a scoped temp directory.

#ifndef T1BS_TESTS_SUPPORT_HPP
#define T1BS_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "t1bs/t1bs.hpp"

namespace support {

// Reference signal computed in extended precision with its own formula
// layout, so agreement with the library is evidence rather than tautology.
inline double reference_signal(const t1bs::TissueParams& p, const t1bs::Measurement& m,
                               const t1bs::ModelOptions& opts = {})
{
    const long double st = std::sin((long double)p.theta), ct = std::cos((long double)p.theta);
    const long double sp = std::sin((long double)p.phi), cp = std::cos((long double)p.phi);
    const long double nx = st * cp, ny = st * sp, nz = ct;
    long double dot = nx * (long double)m.g[0] + ny * (long double)m.g[1] + nz * (long double)m.g[2];
    if (opts.stick_exponent == t1bs::StickExponent::squared) dot *= dot;

    const long double b = m.b, ti = m.ti, tr = m.tr;
    auto ir = [&](long double t1) {
        if (opts.ir_form == t1bs::IrForm::product)
            return std::fabs(1.0L - 2.0L * std::exp(-ti / t1) * std::exp(-tr / t1));
        return std::fabs(1.0L - 2.0L * std::exp(-ti / t1) + std::exp(-tr / t1));
    };
    const long double stick = std::exp(-b * (long double)p.lambda_par * dot) * ir(p.t1_stick);
    const long double ball = std::exp(-b * (long double)p.lambda_iso) * ir(p.t1_ball);
    return (double)((long double)p.f * stick + (1.0L - (long double)p.f) * ball);
}

inline std::vector<double> reference_signals(const t1bs::TissueParams& p,
                                             const t1bs::AcquisitionProtocol& protocol,
                                             const t1bs::ModelOptions& opts = {})
{
    std::vector<double> out;
    out.reserve(protocol.size());
    for (const auto& m : protocol.measurements) out.push_back(reference_signal(p, m, opts));
    return out;
}

// Central-difference derivative of predict_signal in one parameter.
inline double fd_derivative(const t1bs::TissueParams& p, int param, const t1bs::Measurement& m,
                            const t1bs::ModelOptions& opts, double h)
{
    auto a = p.as_array();
    auto lo = a, hi = a;
    lo[param] -= h;
    hi[param] += h;
    const double s_lo = t1bs::predict_signal(t1bs::TissueParams::from_array(lo), m, opts);
    const double s_hi = t1bs::predict_signal(t1bs::TissueParams::from_array(hi), m, opts);
    return (s_hi - s_lo) / (2.0 * h);
}

inline t1bs::Measurement meas(double b, double gx, double gy, double gz, double ti,
                              double te = 0.08, double tr = 7.5)
{
    t1bs::Measurement m;
    m.b = b;
    m.g = {gx, gy, gz};
    m.ti = ti;
    m.te = te;
    m.tr = tr;
    return m;
}

// Small mixed protocol: 2 b=0 at different TI plus six DWI directions.
inline t1bs::AcquisitionProtocol small_protocol()
{
    const double s = std::sqrt(0.5);
    std::vector<t1bs::Measurement> ms{
        meas(0, 0, 0, 0, 1.0),         meas(0, 0, 0, 0, 2.5),
        meas(1.0, 0, 0, 1, 1.0),       meas(1.0, 1, 0, 0, 1.0),
        meas(2.0, 0, 1, 0, 2.5),       meas(2.0, s, s, 0, 0.5),
        meas(3.0, s, 0, s, 1.5),       meas(0.5, 0, s, s, 2.0),
    };
    return t1bs::make_protocol(std::move(ms));
}

inline t1bs::TissueParams typical_params()
{
    t1bs::TissueParams p;
    p.f = 0.5;
    p.lambda_par = 2.0;
    p.lambda_iso = 1.0;
    p.t1_stick = 0.8;
    p.t1_ball = 4.0;
    p.theta = 0.0;
    p.phi = 0.0;
    return p;
}

inline bool same_values(const t1bs::RowMatrixXd& a, const t1bs::RowMatrixXd& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

inline bool same_values(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

class TempDir {
public:
    TempDir()
    {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / ("t1bs_test_" + std::to_string(std::rand()) + "_" +
                                     std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate.string();
                return;
            }
        }
        throw std::runtime_error("could not create temp directory");
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

}  // namespace support

#endif
