#ifndef T1BS_SIMULATOR_HPP
#define T1BS_SIMULATOR_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "t1bs/parallel.hpp"
#include "t1bs/rng.hpp"
#include "t1bs/signal_model.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

struct SimulationConfig {
    std::size_t n_voxels = 0;
    double sigma = 0.02;
    std::uint64_t seed = 0;
    ParamBounds bounds = ParamBounds::defaults();
    ModelOptions opts;

    void validate() const
    {
        if (n_voxels == 0) throw ValidationError("n_voxels must be positive");
        if (!(sigma >= 0.0)) throw ValidationError("sigma must be non-negative");
        bounds.validate();
    }
};

struct SyntheticDataset {
    SignalMatrix signals;
    std::vector<TissueParams> truth;
    SimulationConfig config;
};

/// One parameter set, each coordinate uniform on its bounds interval.
/// Draws exactly 7 uniforms in canonical parameter order.
inline TissueParams sample_params(Rng& rng, const ParamBounds& bounds)
{
    std::array<double, kNumParams> a{};
    for (int i = 0; i < kNumParams; ++i) a[i] = rng.uniform(bounds.lo[i], bounds.hi[i]);
    return TissueParams::from_array(a);
}

/// Magnitude of the signal after complex Gaussian noise: sqrt((S+er)^2 + ei^2).
/// Draws one Gaussian pair per entry, in order.
inline Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& signal, double sigma, Rng& rng)
{
    if (!(sigma >= 0.0)) throw ValidationError("sigma must be non-negative");
    Eigen::VectorXd out(signal.size());
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
        const auto [g1, g2] = rng.gaussian_pair();
        const double re = signal[i] + sigma * g1;
        const double im = sigma * g2;
        out[i] = std::sqrt(re * re + im * im);
    }
    return out;
}

/// Per voxel: draw truth, evaluate the model, add noise. The RNG substream is
/// (seed, voxel index), so results do not depend on the worker count.
inline SyntheticDataset generate_dataset(const AcquisitionProtocol& protocol,
                                         const SimulationConfig& config, unsigned n_workers = 1)
{
    config.validate();
    if (protocol.size() == 0) throw ValidationError("protocol has no measurements");

    SyntheticDataset ds;
    ds.config = config;
    ds.truth.resize(config.n_voxels);
    ds.signals.n_voxels = config.n_voxels;
    ds.signals.n_meas = protocol.size();
    ds.signals.normalized = true;  // generated in normalized signal units
    ds.signals.values.resize(static_cast<Eigen::Index>(config.n_voxels),
                             static_cast<Eigen::Index>(protocol.size()));

    parallel_for(config.n_voxels, n_workers, [&](std::size_t v) {
        Rng rng(config.seed, v);
        const TissueParams truth = sample_params(rng, config.bounds);
        Eigen::VectorXd s = predict_signals(truth, protocol, config.opts);
        if (config.sigma > 0.0) s = add_rician_noise(s, config.sigma, rng);
        ds.truth[v] = truth;
        ds.signals.values.row(static_cast<Eigen::Index>(v)) = s.transpose();
    });
    return ds;
}

}  // namespace t1bs

#endif  // T1BS_SIMULATOR_HPP
