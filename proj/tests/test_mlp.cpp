#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "t1bs/t1bs.hpp"

using namespace t1bs;
using Catch::Approx;

TEST_CASE("initial weights have the documented shape")
{
    const MlpWeights w = init_weights(20, 1);
    REQUIRE(w.n_layers() == 4);
    REQUIRE(w.n_in() == 20);
    REQUIRE(w.n_out() == 7);
    REQUIRE(w.W[0].rows() == 20);
    REQUIRE(w.W[0].cols() == 20);
    REQUIRE(w.W[1].rows() == 20);
    REQUIRE(w.W[2].cols() == 20);
    REQUIRE(w.W[3].rows() == 20);
    REQUIRE(w.W[3].cols() == 7);
    for (const auto& b : w.b) REQUIRE(b.isZero(0.0));
    REQUIRE_NOTHROW(w.validate());

    const MlpWeights wide = init_weights(5, 1, 64);
    REQUIRE(wide.W[0].cols() == 64);
    REQUIRE(wide.W[1].rows() == 64);
    REQUIRE(wide.W[3].rows() == 64);
    REQUIRE(wide.n_out() == 7);
}

TEST_CASE("initialization is uniform within the glorot limit")
{
    const MlpWeights w = init_weights(416, 3);
    // square hidden layer: limit sqrt(6 / (416 + 416))
    const double limit = 0.084920777560844681296;
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < w.W[1].rows(); ++i)
        for (Eigen::Index j = 0; j < w.W[1].cols(); ++j)
            max_abs = std::max(max_abs, std::fabs(w.W[1](i, j)));
    REQUIRE(max_abs <= limit);
    REQUIRE(max_abs > 0.99 * limit);  // 173k draws hug the bound

    // reproducible and seed-sensitive
    const MlpWeights w2 = init_weights(416, 3);
    REQUIRE(support::same_values(w.W[2], w2.W[2]));
    const MlpWeights w3 = init_weights(416, 4);
    REQUIRE_FALSE(support::same_values(w.W[2], w3.W[2]));
}

TEST_CASE("elu and its derivative")
{
    REQUIRE(elu(2.5) == 2.5);
    REQUIRE(elu(0.0) == 0.0);
    REQUIRE(elu(-1.0) == Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
    REQUIRE(elu(-40.0) >= -1.0);
    REQUIRE(elu_deriv(2.5) == 1.0);
    REQUIRE(elu_deriv(-1.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
    // derivative equals elu + 1 on the negative side
    for (double z : {-0.5, -2.0, -7.0}) REQUIRE(elu_deriv(z) == Approx(elu(z) + 1.0).epsilon(1e-12));
}

TEST_CASE("zero network outputs the lower-left corner of the box")
{
    MlpWeights w = init_weights(6, 0);
    for (auto& m : w.W) m.setZero();

    RowMatrixXd batch = RowMatrixXd::Constant(3, 6, 0.5);
    const ForwardResult out = mlp_forward(w, batch, nullptr, ParamBounds::defaults());
    REQUIRE(out.raw.rows() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        const TissueParams& p = out.params[s];
        REQUIRE(p.f == 0.0);
        REQUIRE(p.lambda_par == 0.1);
        REQUIRE(p.lambda_iso == 0.1);
        REQUIRE(p.t1_stick == 0.01);
        REQUIRE(p.t1_ball == 0.01);
        REQUIRE(p.theta == 0.0);  // raw 0 is inside [0, pi]
        REQUIRE(p.phi == 0.0);
    }
}

TEST_CASE("batch forward equals per-sample forward")
{
    const MlpWeights w = init_weights(10, 8);
    Rng rng(12);
    RowMatrixXd batch(5, 10);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) batch(i, j) = rng.uniform01();

    const ForwardResult all = mlp_forward(w, batch, nullptr, ParamBounds::defaults());
    for (Eigen::Index s = 0; s < 5; ++s) {
        const Eigen::VectorXd one = mlp_forward_sample(w, batch.row(s).transpose());
        for (int j = 0; j < kNumParams; ++j) REQUIRE(all.raw(s, j) == one[j]);
    }

    // a sample's output must not depend on its batch neighbours
    RowMatrixXd sub = batch.topRows(2);
    const ForwardResult small = mlp_forward(w, sub, nullptr, ParamBounds::defaults());
    for (int j = 0; j < kNumParams; ++j) REQUIRE(small.raw(1, j) == all.raw(1, j));
}

TEST_CASE("dropout masks scale kept units and zero dropped ones")
{
    const MlpWeights w = init_weights(12, 2);
    Rng rng(9);
    const DropoutMasks masks = make_dropout_masks(40, w, 0.5, rng);
    REQUIRE(masks.layer.size() == 3);  // hidden activations only

    std::size_t zeros = 0, total = 0;
    for (const auto& m : masks.layer) {
        REQUIRE(m.rows() == 40);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                REQUIRE((m(i, j) == 0.0 || m(i, j) == 2.0));
                zeros += m(i, j) == 0.0;
                ++total;
            }
    }
    const double drop_fraction = (double)zeros / (double)total;
    REQUIRE(drop_fraction == Approx(0.5).margin(0.05));

    Rng rng2(9);
    const DropoutMasks again = make_dropout_masks(40, w, 0.5, rng2);
    REQUIRE(support::same_values(again.layer[1], masks.layer[1]));

    Rng rng3(9);
    REQUIRE_THROWS_AS(make_dropout_masks(4, w, 1.0, rng3), ValidationError);
}

TEST_CASE("masked forward applies the mask row to hidden layers")
{
    const MlpWeights w = init_weights(6, 4);
    Rng rng(3);
    RowMatrixXd batch(2, 6);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) batch(i, j) = rng.uniform01();

    // all-zero masks kill every hidden unit: output = last-layer bias = 0
    DropoutMasks dead;
    for (int l = 0; l < 3; ++l) dead.layer.push_back(RowMatrixXd::Zero(2, 6));
    const ForwardResult out = mlp_forward(w, batch, &dead, ParamBounds::defaults());
    for (Eigen::Index s = 0; s < 2; ++s)
        for (int j = 0; j < kNumParams; ++j) REQUIRE(out.raw(s, j) == 0.0);

    // identity masks reproduce the unmasked forward
    DropoutMasks ident;
    for (int l = 0; l < 3; ++l) ident.layer.push_back(RowMatrixXd::Ones(2, 6));
    const ForwardResult same = mlp_forward(w, batch, &ident, ParamBounds::defaults());
    const ForwardResult plain = mlp_forward(w, batch, nullptr, ParamBounds::defaults());
    REQUIRE(support::same_values(same.raw, plain.raw));
}

TEST_CASE("weights round trip through disk exactly")
{
    support::TempDir tmp;
    const MlpWeights w = init_weights(14, 100);
    const std::string path = tmp.file("weights.bin");
    save_weights(w, path);
    REQUIRE(file_exists(tmp.file("weights.json")));

    const MlpWeights back = load_weights(path);
    REQUIRE(back.n_layers() == 4);
    for (std::size_t l = 0; l < 4; ++l) {
        REQUIRE(support::same_values(back.W[l], w.W[l]));
        REQUIRE(back.b[l].size() == w.b[l].size());
        for (Eigen::Index i = 0; i < back.b[l].size(); ++i) REQUIRE(back.b[l][i] == w.b[l][i]);
    }
}

TEST_CASE("weight loading rejects inconsistent manifests")
{
    support::TempDir tmp;
    const MlpWeights w = init_weights(5, 0);
    const std::string path = tmp.file("weights.bin");
    save_weights(w, path);

    // truncate the blob: sizes no longer match the manifest
    const std::string raw = read_text_file(path);
    write_text_file(path, raw.substr(0, raw.size() / 2));
    REQUIRE_THROWS_AS(load_weights(path), ValidationError);
}

TEST_CASE("forward validates input width and finiteness")
{
    const MlpWeights w = init_weights(6, 1);
    RowMatrixXd wrong = RowMatrixXd::Zero(2, 5);
    REQUIRE_THROWS_AS(mlp_forward(w, wrong, nullptr, ParamBounds::defaults()), ValidationError);
    RowMatrixXd bad = RowMatrixXd::Zero(2, 6);
    bad(1, 3) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(mlp_forward(w, bad, nullptr, ParamBounds::defaults()), ValidationError);
}
