#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"
#include "t1bs/t1bs.hpp"

using namespace t1bs;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(T1BS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

// One protocol + simulated volume shared by the pipeline cases.
struct Pipeline {
    support::TempDir tmp;
    std::string protocol;

    Pipeline()
    {
        protocol = tmp.file("protocol.csv");
        write_protocol(make_mudi_like_protocol(4, 8), protocol);
    }

    std::string dir(const std::string& name) const { return tmp.path() + "/" + name; }
};

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0")
{
    REQUIRE(run_cli("--help") == 0);
    REQUIRE(run_cli("--version") == 0);
    REQUIRE(run_cli("simulate --help") == 0);
    REQUIRE(run_cli("") == 1);                  // missing subcommand
    REQUIRE(run_cli("frobnicate") == 1);        // unknown subcommand
    REQUIRE(run_cli("simulate") == 1);          // missing required flags
    REQUIRE(run_cli("simulate --bogus 1") == 1);
    REQUIRE(run_cli("fit") == 1);               // missing nested subcommand
}

TEST_CASE("bad input files exit 1")
{
    Pipeline p;
    REQUIRE(run_cli("simulate --protocol /nonexistent.csv --n 4 --out " + p.dir("x")) == 1);

    const std::string junk = p.tmp.file("junk.csv");
    write_text_file(junk, "not,a,protocol\n1,2,3\n");
    REQUIRE(run_cli("simulate --protocol " + junk + " --n 4 --out " + p.dir("x")) == 1);
}

TEST_CASE("the full pipeline runs end to end")
{
    Pipeline p;

    // simulate a 2x2x2 volume
    REQUIRE(run_cli("simulate --protocol " + p.protocol +
                    " --n 8 --dims 2,2,2 --sigma 0.02 --seed 5 --out " + p.dir("sim")) == 0);
    for (const char* f : {"signals.f32", "signals.json", "truth.csv", "mask.csv", "mask.json",
                          "manifest.json"})
        REQUIRE(file_exists(p.dir("sim") + "/" + f));

    // grid + refinement fit, reduced grid for speed
    REQUIRE(run_cli("fit nlls --signals " + p.dir("sim") + "/signals.f32 --protocol " +
                    p.protocol + " --mask " + p.dir("sim") + "/mask.csv" +
                    " --grid-points 3 --orientations 6 --max-iterations 30 --out " +
                    p.dir("nlls")) == 0);
    REQUIRE(file_exists(p.dir("nlls") + "/params_nlls.csv"));
    REQUIRE(file_exists(p.dir("nlls") + "/fit_meta.json"));

    // short network fit
    REQUIRE(run_cli("fit ann --signals " + p.dir("sim") + "/signals.f32 --protocol " +
                    p.protocol + " --max-epochs 2 --batch-size 4 --seed 3 --out " +
                    p.dir("ann")) == 0);
    for (const char* f : {"params_ann.csv", "weights.bin", "weights.json", "train_history.csv",
                          "fit_meta.json", "manifest.json"})
        REQUIRE(file_exists(p.dir("ann") + "/" + f));

    const auto hist = read_lines(p.dir("ann") + "/train_history.csv");
    REQUIRE(hist[0] == "epoch,loss");
    REQUIRE(hist.size() == 3);

    // the saved network reloads and matches the saved parameter table
    const MlpWeights w = load_weights(p.dir("ann") + "/weights.bin");
    const SignalMatrix sm = load_signals(p.dir("sim") + "/signals.f32");
    const auto params = infer(w, sm, ParamBounds::defaults());
    const ParamTable saved = load_params_csv(p.dir("ann") + "/params_ann.csv");
    REQUIRE(saved.params.size() == 8);
    for (std::size_t v = 0; v < 8; ++v)
        for (int k = 0; k < kNumParams; ++k)
            REQUIRE(saved.params[v][k] == params[v][k]);

    // score both fits against the truth
    REQUIRE(run_cli("evaluate --truth " + p.dir("sim") + "/truth.csv --est-a " + p.dir("nlls") +
                    "/params_nlls.csv --est-b " + p.dir("ann") +
                    "/params_ann.csv --name-a nlls --name-b ann --out " + p.dir("eval")) == 0);
    REQUIRE(file_exists(p.dir("eval") + "/report.json"));
    const auto report =
        nlohmann::json::parse(read_text_file(p.dir("eval") + "/report.json"));
    REQUIRE(report.size() == 2);
    REQUIRE(report[0]["fitter"] == "nlls");
    REQUIRE(report[1]["fitter"] == "ann");
    REQUIRE(report[0]["n_voxels"] == 8);

    // render maps from the fitted parameters
    REQUIRE(run_cli("render-maps --params " + p.dir("nlls") + "/params_nlls.csv --mask " +
                    p.dir("sim") + "/mask.csv --axis z --slice 1 --out " + p.dir("maps")) == 0);
    for (const char* f : {"map_f.pgm", "map_lambda_par.pgm", "map_lambda_iso.pgm",
                          "map_t1_stick.pgm", "map_t1_ball.pgm", "map_dec.ppm", "slice.csv",
                          "manifest.json"})
        REQUIRE(file_exists(p.dir("maps") + "/" + f));

    // manifest digests cover the inputs
    const auto manifest =
        nlohmann::json::parse(read_text_file(p.dir("sim") + "/manifest.json"));
    REQUIRE(manifest["subcommand"] == "simulate");
    REQUIRE(manifest["inputs"].contains(p.protocol));
    REQUIRE(manifest["config"]["seed"] == 5);
}

TEST_CASE("simulation output is reproducible byte for byte")
{
    Pipeline p;
    const std::string args = "simulate --protocol " + p.protocol + " --n 6 --seed 9 --out ";
    REQUIRE(run_cli(args + p.dir("a")) == 0);
    REQUIRE(run_cli(args + p.dir("b")) == 0);
    REQUIRE(read_text_file(p.dir("a") + "/signals.f32") ==
            read_text_file(p.dir("b") + "/signals.f32"));
    REQUIRE(read_text_file(p.dir("a") + "/truth.csv") ==
            read_text_file(p.dir("b") + "/truth.csv"));

    REQUIRE(run_cli("simulate --protocol " + p.protocol + " --n 6 --seed 10 --out " +
                    p.dir("c")) == 0);
    REQUIRE(read_text_file(p.dir("a") + "/signals.f32") !=
            read_text_file(p.dir("c") + "/signals.f32"));
}

TEST_CASE("config files fill in defaults but flags win")
{
    Pipeline p;
    const std::string cfg = p.tmp.file("run.ini");
    write_text_file(cfg, "[simulate]\nsigma = 0.5\nseed = 21\n");

    REQUIRE(run_cli("--config " + cfg + " simulate --protocol " + p.protocol + " --n 4 --out " +
                    p.dir("cfg")) == 0);
    auto manifest = nlohmann::json::parse(read_text_file(p.dir("cfg") + "/manifest.json"));
    REQUIRE(manifest["config"]["sigma"] == 0.5);
    REQUIRE(manifest["config"]["seed"] == 21);

    REQUIRE(run_cli("--config " + cfg + " simulate --protocol " + p.protocol +
                    " --n 4 --sigma 0.25 --out " + p.dir("cfg2")) == 0);
    manifest = nlohmann::json::parse(read_text_file(p.dir("cfg2") + "/manifest.json"));
    REQUIRE(manifest["config"]["sigma"] == 0.25);
    REQUIRE(manifest["config"]["seed"] == 21);
}

TEST_CASE("runtime failures exit 2")
{
    Pipeline p;
    // output directory path collides with an existing file
    const std::string blocker = p.tmp.file("blocked");
    write_text_file(blocker, "");
    REQUIRE(run_cli("simulate --protocol " + p.protocol + " --n 4 --out " + blocker +
                    "/nested") == 2);
}

TEST_CASE("normalize flag divides by the reference and refuses normalized input")
{
    Pipeline p;
    REQUIRE(run_cli("simulate --protocol " + p.protocol + " --n 4 --seed 2 --out " +
                    p.dir("sim")) == 0);

    // simulator output is already normalized; the sidecar says so
    REQUIRE(run_cli("fit nlls --signals " + p.dir("sim") + "/signals.f32 --protocol " +
                    p.protocol + " --normalize --grid-points 2 --orientations 2" +
                    " --max-iterations 0 --out " + p.dir("bad")) == 1);

    // csv input carries no flag, so normalizing is allowed
    const SignalMatrix sm = load_signals(p.dir("sim") + "/signals.f32");
    SignalMatrix raw = sm;
    raw.values *= 350.0;  // pretend scanner units
    raw.normalized = false;
    save_signals_csv(raw, p.tmp.file("raw.csv"));
    REQUIRE(run_cli("fit nlls --signals " + p.tmp.file("raw.csv") + " --protocol " + p.protocol +
                    " --normalize --grid-points 2 --orientations 2 --max-iterations 0 --out " +
                    p.dir("norm")) == 0);
}
