// Command-line front end: simulate | fit nlls | fit ann | evaluate | render-maps.
// Exit codes: 0 success, 1 bad input or usage, 2 runtime failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "t1bs/t1bs.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join_path(const std::string& dir, const std::string& name)
{
    return dir.empty() ? name : dir + "/" + name;
}

void ensure_dir(const std::string& dir)
{
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw t1bs::ComputeError("cannot create output directory " + dir);
}

// Digest the named file plus its JSON sidecar when one exists (.f32 signal
// and mask files carry their shape in a sidecar).
void add_input_with_sidecar(t1bs::RunManifest& m, const std::string& path)
{
    m.add_input(path);
    const std::string sidecar = t1bs::swap_extension(path, ".json");
    if (sidecar != path && t1bs::file_exists(sidecar)) m.add_input(sidecar);
}

struct ModelOptionFlags {
    std::string stick_exponent = "squared";
    std::string ir_form = "product";

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--stick-exponent", stick_exponent,
                        "Stick attenuation exponent: squared | linear")
            ->check(CLI::IsMember({"squared", "linear"}));
        cmd->add_option("--ir-form", ir_form,
                        "Inversion-recovery magnitude form: product | standard")
            ->check(CLI::IsMember({"product", "standard"}));
    }

    t1bs::ModelOptions resolve() const
    {
        t1bs::ModelOptions o;
        o.stick_exponent = t1bs::stick_exponent_from_string(stick_exponent);
        o.ir_form = t1bs::ir_form_from_string(ir_form);
        return o;
    }
};

nlohmann::json model_options_json(const t1bs::ModelOptions& o)
{
    return {{"stick_exponent", t1bs::to_string(o.stick_exponent)},
            {"ir_form", t1bs::to_string(o.ir_form)}};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string protocol_path, out_dir, format = "f32";
    std::size_t n_voxels = 0;
    double sigma = 0.02;
    std::uint64_t seed = 0;
    std::vector<std::size_t> dims;
    unsigned workers = 1;
    ModelOptionFlags model;
};

int run_simulate(const SimulateArgs& a)
{
    const auto t0 = Clock::now();
    t1bs::RunManifest manifest("simulate");
    manifest.add_input(a.protocol_path);

    const t1bs::AcquisitionProtocol protocol = t1bs::load_protocol(a.protocol_path);

    t1bs::SimulationConfig config;
    config.n_voxels = a.n_voxels;
    config.sigma = a.sigma;
    config.seed = a.seed;
    config.opts = a.model.resolve();
    if (!a.dims.empty() && a.dims[0] * a.dims[1] * a.dims[2] != a.n_voxels)
        throw t1bs::ValidationError("--dims volume must equal --n");

    const t1bs::SyntheticDataset ds = t1bs::generate_dataset(protocol, config, a.workers);

    ensure_dir(a.out_dir);
    if (a.format == "csv") {
        const std::string p = join_path(a.out_dir, "signals.csv");
        t1bs::save_signals_csv(ds.signals, p);
        manifest.add_output(p);
    } else {
        const std::string p = join_path(a.out_dir, "signals.f32");
        t1bs::save_signals_f32(ds.signals, p);
        manifest.add_output(p);
        manifest.add_output(t1bs::swap_extension(p, ".json"));
    }
    const std::string truth_path = join_path(a.out_dir, "truth.csv");
    t1bs::save_truth_csv(ds.truth, truth_path);
    manifest.add_output(truth_path);

    if (!a.dims.empty()) {
        t1bs::VolumeMask mask;
        mask.nx = a.dims[0];
        mask.ny = a.dims[1];
        mask.nz = a.dims[2];
        mask.indices.resize(a.n_voxels);
        for (std::size_t i = 0; i < a.n_voxels; ++i) mask.indices[i] = i;
        const std::string mask_path = join_path(a.out_dir, "mask.csv");
        t1bs::save_mask(mask, mask_path);
        manifest.add_output(mask_path);
        manifest.add_output(t1bs::swap_extension(mask_path, ".json"));
    }

    manifest.set_config("n_voxels", a.n_voxels);
    manifest.set_config("sigma", a.sigma);
    manifest.set_config("seed", a.seed);
    manifest.set_config("format", a.format);
    manifest.set_config("model", model_options_json(config.opts));
    manifest.set_config("rng", t1bs::rng_id());
    if (!a.dims.empty()) manifest.set_config("dims", a.dims);
    manifest.set_wall_seconds(seconds_since(t0));
    manifest.write(a.out_dir);

    std::cout << "simulated " << ds.signals.n_voxels << " voxels x " << ds.signals.n_meas
              << " measurements (sigma " << t1bs::format_double(a.sigma) << ", seed " << a.seed
              << ") -> " << a.out_dir << "\n";
    return 0;
}

// -------------------------------------------------------------------- fit

struct FitArgs {
    std::string signals_path, protocol_path, mask_path, out_dir;
    bool normalize = false;
    unsigned workers = 1;
    ModelOptionFlags model;

    // nlls
    std::size_t grid_points = 5;
    std::size_t orientations = 30;
    std::size_t max_iterations = 200;
    double tol = 1e-8;

    // ann
    double learning_rate = 1e-4;
    std::size_t batch_size = 128;
    double dropout = 0.5;
    std::size_t patience = 10;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;

    void attach_common(CLI::App* cmd)
    {
        cmd->add_option("--signals", signals_path, "Signal matrix (.csv, or .f32 with JSON sidecar)")
            ->required();
        cmd->add_option("--protocol", protocol_path, "Acquisition protocol CSV")->required();
        cmd->add_option("--mask", mask_path, "Volume mask CSV (with JSON sidecar)");
        cmd->add_option("--out", out_dir, "Output directory")->required();
        cmd->add_flag("--normalize", normalize,
                      "Divide each voxel by its reference measurement before fitting");
        cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");
        model.attach(cmd);
    }
};

struct LoadedFit {
    t1bs::AcquisitionProtocol protocol;
    t1bs::SignalMatrix signals;
    std::vector<std::size_t> dropped;  // rows lost to a non-positive reference
};

LoadedFit load_fit_inputs(const FitArgs& a, t1bs::RunManifest& manifest)
{
    add_input_with_sidecar(manifest, a.signals_path);
    manifest.add_input(a.protocol_path);

    LoadedFit io;
    io.protocol = t1bs::load_protocol(a.protocol_path);
    if (!a.mask_path.empty()) {
        add_input_with_sidecar(manifest, a.mask_path);
        const t1bs::VolumeMask mask = t1bs::load_mask(a.mask_path);
        io.signals = t1bs::load_signals(a.signals_path, &mask);
    } else {
        io.signals = t1bs::load_signals(a.signals_path);
    }
    if (io.signals.n_meas != io.protocol.size())
        throw t1bs::ValidationError(a.signals_path + ": " + std::to_string(io.signals.n_meas) +
                                    " measurements per voxel but protocol has " +
                                    std::to_string(io.protocol.size()));
    if (a.normalize) io.signals = t1bs::normalize_signals(io.protocol, io.signals, &io.dropped);
    for (std::size_t v : io.dropped)
        std::cerr << "warning: voxel row " << v << " dropped (non-positive reference signal)\n";
    return io;
}

void write_fit_meta(const std::string& out_dir, const nlohmann::json& meta,
                    t1bs::RunManifest& manifest)
{
    const std::string path = join_path(out_dir, "fit_meta.json");
    t1bs::write_text_file(path, meta.dump(2) + "\n");
    manifest.add_output(path);
}

int run_fit_nlls(const FitArgs& a)
{
    const auto t0 = Clock::now();
    t1bs::RunManifest manifest("fit nlls");
    LoadedFit io = load_fit_inputs(a, manifest);

    t1bs::NllsConfig config;
    config.grid.points_per_scalar_param = a.grid_points;
    config.grid.n_orientations = a.orientations;
    config.max_iterations = a.max_iterations;
    config.convergence_tol = a.tol;
    config.opts = a.model.resolve();

    const t1bs::NllsVolumeFit fit =
        t1bs::fit_volume_nlls(io.signals, io.protocol, config, a.workers);

    ensure_dir(a.out_dir);
    const std::string params_path = join_path(a.out_dir, "params_nlls.csv");
    t1bs::save_params_csv(fit.params, &fit.cost, params_path);
    manifest.add_output(params_path);

    nlohmann::json meta{{"fitter", "nlls"},
                        {"n_voxels", fit.params.size()},
                        {"n_meas", io.signals.n_meas},
                        {"wall_seconds", fit.wall_seconds},
                        {"failed_voxels", fit.failed_voxels},
                        {"dropped_voxels", io.dropped},
                        {"grid_points_per_scalar_param", a.grid_points},
                        {"grid_orientations", a.orientations},
                        {"max_iterations", a.max_iterations},
                        {"convergence_tol", a.tol},
                        {"model", model_options_json(config.opts)}};
    write_fit_meta(a.out_dir, meta, manifest);

    manifest.set_config("normalize", a.normalize);
    manifest.set_config("workers", a.workers);
    manifest.set_config("grid_points", a.grid_points);
    manifest.set_config("orientations", a.orientations);
    manifest.set_config("max_iterations", a.max_iterations);
    manifest.set_config("convergence_tol", a.tol);
    manifest.set_config("model", model_options_json(config.opts));
    manifest.set_wall_seconds(seconds_since(t0));
    manifest.write(a.out_dir);

    std::cout << "nlls fit: " << fit.params.size() << " voxels in "
              << t1bs::format_double(fit.wall_seconds) << " s (" << fit.failed_voxels.size()
              << " failed) -> " << a.out_dir << "\n";
    return 0;
}

int run_fit_ann(const FitArgs& a)
{
    const auto t0 = Clock::now();
    t1bs::RunManifest manifest("fit ann");
    LoadedFit io = load_fit_inputs(a, manifest);

    t1bs::TrainConfig config;
    config.learning_rate = a.learning_rate;
    config.batch_size = a.batch_size;
    config.dropout_rate = a.dropout;
    config.patience = a.patience;
    config.max_epochs = a.max_epochs;
    config.seed = a.seed;
    config.opts = a.model.resolve();

    const auto train_t0 = Clock::now();
    const t1bs::TrainResult result = t1bs::train(io.signals, io.protocol, config, a.workers);
    const double train_seconds = seconds_since(train_t0);

    const auto infer_t0 = Clock::now();
    const std::vector<t1bs::TissueParams> params =
        t1bs::infer(result.weights, io.signals, config.bounds, a.workers);
    const double infer_seconds = seconds_since(infer_t0);

    ensure_dir(a.out_dir);
    const std::string params_path = join_path(a.out_dir, "params_ann.csv");
    t1bs::save_params_csv(params, nullptr, params_path);
    manifest.add_output(params_path);

    const std::string weights_path = join_path(a.out_dir, "weights.bin");
    t1bs::save_weights(result.weights, weights_path);
    manifest.add_output(weights_path);
    manifest.add_output(t1bs::swap_extension(weights_path, ".json"));

    std::ostringstream hist;
    hist << "epoch,loss\n";
    for (std::size_t e = 0; e < result.history.epoch_loss.size(); ++e)
        hist << (e + 1) << ',' << t1bs::format_double(result.history.epoch_loss[e]) << '\n';
    const std::string hist_path = join_path(a.out_dir, "train_history.csv");
    t1bs::write_text_file(hist_path, hist.str());
    manifest.add_output(hist_path);

    nlohmann::json meta{{"fitter", "ann"},
                        {"n_voxels", params.size()},
                        {"n_meas", io.signals.n_meas},
                        {"wall_seconds", train_seconds + infer_seconds},
                        {"train_seconds", train_seconds},
                        {"infer_seconds", infer_seconds},
                        {"stopped_epoch", result.history.stopped_epoch},
                        {"best_epoch", result.history.best_epoch},
                        {"dropped_voxels", io.dropped},
                        {"learning_rate", a.learning_rate},
                        {"batch_size", a.batch_size},
                        {"dropout_rate", a.dropout},
                        {"patience", a.patience},
                        {"max_epochs", a.max_epochs},
                        {"seed", a.seed},
                        {"model", model_options_json(config.opts)}};
    write_fit_meta(a.out_dir, meta, manifest);

    manifest.set_config("normalize", a.normalize);
    manifest.set_config("workers", a.workers);
    manifest.set_config("learning_rate", a.learning_rate);
    manifest.set_config("batch_size", a.batch_size);
    manifest.set_config("dropout_rate", a.dropout);
    manifest.set_config("patience", a.patience);
    manifest.set_config("max_epochs", a.max_epochs);
    manifest.set_config("seed", a.seed);
    manifest.set_config("model", model_options_json(config.opts));
    manifest.set_config("rng", t1bs::rng_id());
    manifest.set_wall_seconds(seconds_since(t0));
    manifest.write(a.out_dir);

    std::cout << "ann fit: " << params.size() << " voxels, stopped after epoch "
              << result.history.stopped_epoch << " (best " << result.history.best_epoch << "), "
              << t1bs::format_double(train_seconds + infer_seconds) << " s -> " << a.out_dir
              << "\n";
    return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string truth_path, est_a_path, est_b_path, out_dir;
    std::string name_a = "a", name_b = "b";
    double wall_a = 0.0, wall_b = 0.0;
};

nlohmann::json report_json(const t1bs::FitReport& r)
{
    nlohmann::json corr;
    for (int p = 0; p < t1bs::kNumScalarParams; ++p)
        corr[t1bs::kParamNames[p]] = r.r[static_cast<std::size_t>(p)];
    return {{"fitter", r.fitter},
            {"pearson_r", corr},
            {"mean_angular_error_rad", r.mean_angular_error},
            {"median_angular_error_rad", r.median_angular_error},
            {"wall_seconds", r.wall_seconds},
            {"n_voxels", r.n_voxels}};
}

void print_report(const t1bs::FitReport& r)
{
    std::cout << r.fitter << ": r[";
    for (int p = 0; p < t1bs::kNumScalarParams; ++p)
        std::cout << (p ? " " : "") << t1bs::kParamNames[p] << "="
                  << t1bs::format_double(r.r[static_cast<std::size_t>(p)]);
    std::cout << "] mean_ang=" << t1bs::format_double(r.mean_angular_error)
              << " rad median_ang=" << t1bs::format_double(r.median_angular_error)
              << " rad wall=" << t1bs::format_double(r.wall_seconds) << " s\n";
}

int run_evaluate(const EvaluateArgs& a)
{
    const auto t0 = Clock::now();
    t1bs::RunManifest manifest("evaluate");
    manifest.add_input(a.truth_path);
    manifest.add_input(a.est_a_path);
    if (!a.est_b_path.empty()) manifest.add_input(a.est_b_path);

    const std::vector<t1bs::TissueParams> truth = t1bs::load_params_csv(a.truth_path).params;
    const std::vector<t1bs::TissueParams> est_a = t1bs::load_params_csv(a.est_a_path).params;

    std::vector<t1bs::FitReport> reports;
    reports.push_back(t1bs::evaluate_fit(truth, est_a, a.wall_a, a.name_a));
    if (!a.est_b_path.empty()) {
        const std::vector<t1bs::TissueParams> est_b = t1bs::load_params_csv(a.est_b_path).params;
        reports.push_back(t1bs::evaluate_fit(truth, est_b, a.wall_b, a.name_b));
    }

    ensure_dir(a.out_dir);
    nlohmann::json doc = nlohmann::json::array();
    std::ostringstream csv;
    csv << "fitter";
    for (int p = 0; p < t1bs::kNumScalarParams; ++p) csv << ",r_" << t1bs::kParamNames[p];
    csv << ",mean_angular_error_rad,median_angular_error_rad,wall_seconds,n_voxels\n";
    for (const t1bs::FitReport& r : reports) {
        doc.push_back(report_json(r));
        csv << r.fitter;
        for (int p = 0; p < t1bs::kNumScalarParams; ++p)
            csv << ',' << t1bs::format_double(r.r[static_cast<std::size_t>(p)]);
        csv << ',' << t1bs::format_double(r.mean_angular_error) << ','
            << t1bs::format_double(r.median_angular_error) << ','
            << t1bs::format_double(r.wall_seconds) << ',' << r.n_voxels << '\n';
        print_report(r);
    }
    const std::string json_path = join_path(a.out_dir, "report.json");
    t1bs::write_text_file(json_path, doc.dump(2) + "\n");
    manifest.add_output(json_path);
    const std::string csv_path = join_path(a.out_dir, "report.csv");
    t1bs::write_text_file(csv_path, csv.str());
    manifest.add_output(csv_path);

    manifest.set_config("name_a", a.name_a);
    if (!a.est_b_path.empty()) manifest.set_config("name_b", a.name_b);
    manifest.set_wall_seconds(seconds_since(t0));
    manifest.write(a.out_dir);
    return 0;
}

// ------------------------------------------------------------- render-maps

struct RenderArgs {
    std::string params_path, mask_path, out_dir;
    std::string axis = "z";
    long long slice = -1;  // -1 = middle slice along the axis
};

int run_render(const RenderArgs& a)
{
    const auto t0 = Clock::now();
    t1bs::RunManifest manifest("render-maps");
    manifest.add_input(a.params_path);
    add_input_with_sidecar(manifest, a.mask_path);

    const std::vector<t1bs::TissueParams> params = t1bs::load_params_csv(a.params_path).params;
    const t1bs::VolumeMask mask = t1bs::load_mask(a.mask_path);

    const int axis = a.axis == "x" ? 0 : a.axis == "y" ? 1 : 2;
    const std::size_t extent = axis == 0 ? mask.nx : axis == 1 ? mask.ny : mask.nz;
    std::size_t slice;
    if (a.slice < 0) {
        slice = extent / 2;
    } else {
        slice = static_cast<std::size_t>(a.slice);
        if (slice >= extent)
            throw t1bs::ValidationError("--slice " + std::to_string(a.slice) +
                                        " out of range for axis extent " +
                                        std::to_string(extent));
    }

    ensure_dir(a.out_dir);
    const std::vector<std::string> written =
        t1bs::render_maps(params, mask, axis, slice, t1bs::ParamBounds::defaults(), a.out_dir);
    for (const std::string& p : written) manifest.add_output(p);

    manifest.set_config("axis", a.axis);
    manifest.set_config("slice", slice);
    manifest.set_wall_seconds(seconds_since(t0));
    manifest.write(a.out_dir);

    std::cout << "rendered " << written.size() << " files (axis " << a.axis << ", slice " << slice
              << ") -> " << a.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Directional T1-ball-stick fitting for diffusion-relaxation MRI"};
    app.require_subcommand(1);
    app.set_version_flag("--version", t1bs::kToolVersion);
    app.set_config("--config", "", "Read defaults from an INI file (flags override it)");

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "Generate a noisy synthetic dataset");
    c_sim->add_option("--protocol", sim.protocol_path, "Acquisition protocol CSV")->required();
    c_sim->add_option("--n", sim.n_voxels, "Number of voxels")->required();
    c_sim->add_option("--sigma", sim.sigma, "Noise level relative to the unit b=0 signal");
    c_sim->add_option("--seed", sim.seed, "Random seed");
    c_sim->add_option("--dims", sim.dims, "Volume dims nx,ny,nz; also writes a full mask")
        ->delimiter(',')
        ->expected(3);
    c_sim->add_option("--format", sim.format, "Signal output format")
        ->check(CLI::IsMember({"f32", "csv"}));
    c_sim->add_option("--workers", sim.workers, "Worker threads (0 = all cores)");
    c_sim->add_option("--out", sim.out_dir, "Output directory")->required();
    sim.model.attach(c_sim);

    CLI::App* c_fit = app.add_subcommand("fit", "Fit model parameters to signals");
    c_fit->require_subcommand(1);

    FitArgs nlls;
    CLI::App* c_nlls = c_fit->add_subcommand("nlls", "Grid search + bounded Levenberg-Marquardt");
    nlls.attach_common(c_nlls);
    c_nlls->add_option("--grid-points", nlls.grid_points, "Grid points per scalar parameter");
    c_nlls->add_option("--orientations", nlls.orientations, "Hemisphere orientations in the grid");
    c_nlls->add_option("--max-iterations", nlls.max_iterations, "Refinement iteration cap");
    c_nlls->add_option("--tol", nlls.tol, "Relative cost decrease for convergence");

    FitArgs ann;
    CLI::App* c_ann = c_fit->add_subcommand("ann", "Self-supervised neural network fit");
    ann.attach_common(c_ann);
    c_ann->add_option("--learning-rate", ann.learning_rate, "Adam learning rate");
    c_ann->add_option("--batch-size", ann.batch_size, "Minibatch size");
    c_ann->add_option("--dropout", ann.dropout, "Dropout rate on hidden activations");
    c_ann->add_option("--patience", ann.patience, "Epochs without improvement before stopping");
    c_ann->add_option("--max-epochs", ann.max_epochs, "Epoch cap");
    c_ann->add_option("--seed", ann.seed, "Random seed (weights, shuffling, dropout)");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "Score parameter estimates against truth");
    c_ev->add_option("--truth", ev.truth_path, "Ground-truth parameter CSV")->required();
    c_ev->add_option("--est-a", ev.est_a_path, "First estimate CSV")->required();
    c_ev->add_option("--est-b", ev.est_b_path, "Second estimate CSV (optional)");
    c_ev->add_option("--name-a", ev.name_a, "Label for the first estimate");
    c_ev->add_option("--name-b", ev.name_b, "Label for the second estimate");
    c_ev->add_option("--wall-a", ev.wall_a, "Wall seconds to report for the first estimate");
    c_ev->add_option("--wall-b", ev.wall_b, "Wall seconds to report for the second estimate");
    c_ev->add_option("--out", ev.out_dir, "Output directory")->required();

    RenderArgs ren;
    CLI::App* c_ren = app.add_subcommand("render-maps", "Render parameter maps for one slice");
    c_ren->add_option("--params", ren.params_path, "Parameter CSV (fit output or truth)")
        ->required();
    c_ren->add_option("--mask", ren.mask_path, "Volume mask CSV (with JSON sidecar)")->required();
    c_ren->add_option("--axis", ren.axis, "Slice axis")->check(CLI::IsMember({"x", "y", "z"}));
    c_ren->add_option("--slice", ren.slice, "Slice index along the axis (default: middle)");
    c_ren->add_option("--out", ren.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help/version exit cleanly; anything else is a usage error
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_fit->parsed()) {
            if (c_nlls->parsed()) return run_fit_nlls(nlls);
            return run_fit_ann(ann);
        }
        if (c_ev->parsed()) return run_evaluate(ev);
        return run_render(ren);
    } catch (const t1bs::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
