// Minimal end-to-end use of the library API: build a protocol, simulate a few
// noisy voxels, fit them with grid search + refinement, and report recovery.

#include <cstdio>

#include "t1bs/t1bs.hpp"

int main()
{
    // 26 inversion times, 16 measurements each (one b=0 + 15 DWI)
    const t1bs::AcquisitionProtocol protocol = t1bs::make_mudi_like_protocol();
    std::printf("protocol: %zu measurements, reference index %zu\n", protocol.size(),
                protocol.reference_index);

    t1bs::SimulationConfig sim;
    sim.n_voxels = 20;
    sim.sigma = 0.02;
    sim.seed = 7;
    const t1bs::SyntheticDataset ds = t1bs::generate_dataset(protocol, sim);

    t1bs::NllsConfig cfg;
    const t1bs::NllsVolumeFit fit = t1bs::fit_volume_nlls(ds.signals, protocol, cfg);

    std::printf("fitted %zu voxels in %.2f s\n\n", fit.params.size(), fit.wall_seconds);
    std::printf("%-12s %10s %10s\n", "parameter", "true", "fitted");
    const auto truth = ds.truth[0].as_array();
    const auto est = fit.params[0].as_array();
    for (int p = 0; p < t1bs::kNumParams; ++p)
        std::printf("%-12s %10.4f %10.4f\n", t1bs::kParamNames[p], truth[p], est[p]);

    const t1bs::FitReport report = t1bs::evaluate_fit(ds.truth, fit.params, fit.wall_seconds, "nlls");
    std::printf("\nmedian angular error: %.3f rad over %zu voxels\n", report.median_angular_error,
                report.n_voxels);
    return 0;
}
