#ifndef T1BS_TYPES_HPP
#define T1BS_TYPES_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace t1bs {

inline constexpr const char* kToolVersion = "0.1.0";

/// Bad input data or arguments: CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure during computation: CLI maps this to exit code 2.
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec3 = std::array<double, 3>;

inline double dot3(const Vec3& a, const Vec3& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm3(const Vec3& a)
{
    return std::sqrt(dot3(a, a));
}

/// One volume of a combined inversion-recovery / diffusion acquisition.
/// Canonical units: b in ms/um^2, all times in seconds, g dimensionless.
struct Measurement {
    double b = 0.0;
    Vec3 g{0.0, 0.0, 0.0};
    double ti = 0.0;
    double te = 0.0;
    double tr = 0.0;
};

struct AcquisitionProtocol {
    std::vector<Measurement> measurements;
    /// Index of the b=0 measurement with the highest TI (normalization target).
    std::size_t reference_index = 0;

    std::size_t size() const { return measurements.size(); }
};

/// Voxels x measurements signal amplitudes, row-major.
struct SignalMatrix {
    std::size_t n_voxels = 0;
    std::size_t n_meas = 0;
    RowMatrixXd values;
    bool normalized = false;
};

constexpr int kNumParams = 7;
constexpr int kNumScalarParams = 5;  // f, lambda_par, lambda_iso, t1_stick, t1_ball

inline constexpr std::array<const char*, kNumParams> kParamNames{
    "f", "lambda_par", "lambda_iso", "t1_stick", "t1_ball", "theta", "phi"};

/// The two-compartment directional model parameters.
/// f: stick volume fraction; lambda_par, lambda_iso: diffusivities in um^2/ms;
/// t1_stick, t1_ball: longitudinal relaxation times in s; theta, phi: stick
/// orientation in polar coordinates (radians).
struct TissueParams {
    double f = 0.0;
    double lambda_par = 0.0;
    double lambda_iso = 0.0;
    double t1_stick = 0.0;
    double t1_ball = 0.0;
    double theta = 0.0;
    double phi = 0.0;

    std::array<double, kNumParams> as_array() const
    {
        return {f, lambda_par, lambda_iso, t1_stick, t1_ball, theta, phi};
    }

    static TissueParams from_array(const std::array<double, kNumParams>& a)
    {
        return TissueParams{a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }

    double operator[](int i) const { return as_array()[static_cast<std::size_t>(i)]; }

    bool all_finite() const
    {
        for (double v : as_array())
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Per-parameter [min, max] boxes. Defaults are the physically-plausible
/// ranges used for both simulation and fitting.
struct ParamBounds {
    std::array<double, kNumParams> lo{};
    std::array<double, kNumParams> hi{};

    static ParamBounds defaults()
    {
        constexpr double pi = 3.14159265358979323846;
        ParamBounds b;
        b.lo = {0.0, 0.1, 0.1, 0.01, 0.01, 0.0, -pi};
        b.hi = {1.0, 3.0, 3.0, 5.0, 5.0, pi, pi};
        return b;
    }

    void validate() const
    {
        for (int i = 0; i < kNumParams; ++i) {
            if (!(lo[static_cast<std::size_t>(i)] < hi[static_cast<std::size_t>(i)]))
                throw ValidationError(std::string("parameter bounds: min >= max for ") +
                                      kParamNames[static_cast<std::size_t>(i)]);
        }
    }
};

enum class StickExponent { squared, linear };
enum class IrForm { product, standard };

/// Switches between the two printed readings of the signal equation.
struct ModelOptions {
    StickExponent stick_exponent = StickExponent::squared;
    IrForm ir_form = IrForm::product;
};

inline const char* to_string(StickExponent e)
{
    return e == StickExponent::squared ? "squared" : "linear";
}

inline const char* to_string(IrForm f)
{
    return f == IrForm::product ? "product" : "standard";
}

inline StickExponent stick_exponent_from_string(const std::string& s)
{
    if (s == "squared") return StickExponent::squared;
    if (s == "linear") return StickExponent::linear;
    throw ValidationError("unknown stick exponent '" + s + "' (want squared|linear)");
}

inline IrForm ir_form_from_string(const std::string& s)
{
    if (s == "product") return IrForm::product;
    if (s == "standard") return IrForm::standard;
    throw ValidationError("unknown IR form '" + s + "' (want product|standard)");
}

}  // namespace t1bs

#endif  // T1BS_TYPES_HPP
