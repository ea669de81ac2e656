#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "t1bs/t1bs.hpp"

using namespace t1bs;
using Catch::Approx;

TEST_CASE("pearson correlation")
{
    REQUIRE(pearson_r({1, 2, 3}, {1, 2, 4}) == Approx(0.9819805060619657157).epsilon(1e-14));
    REQUIRE(pearson_r({1, 2, 3}, {2, 4, 6}) == Approx(1.0).epsilon(1e-14));
    REQUIRE(pearson_r({1, 2, 3}, {3, 2, 1}) == Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("pearson rejects degenerate input")
{
    REQUIRE_THROWS_AS(pearson_r({1, 2, 3}, {5, 5, 5}), ValidationError);
    REQUIRE_THROWS_AS(pearson_r({5, 5, 5}, {1, 2, 3}), ValidationError);
    REQUIRE_THROWS_AS(pearson_r({1, 2}, {1, 2, 3}), ValidationError);
    REQUIRE_THROWS_AS(pearson_r({1}, {2}), ValidationError);
}

TEST_CASE("angular error treats antipodes as equal")
{
    REQUIRE(angular_error(0.3, 1.2, 0.3, 1.2) == Approx(0.0).margin(1e-12));
    // antipode: flip both angles
    REQUIRE(angular_error(0.3, 1.2, M_PI - 0.3, 1.2 - M_PI) == Approx(0.0).margin(1e-7));
    // z axis vs x axis
    REQUIRE(angular_error(0.0, 0.0, M_PI / 2, 0.0) == Approx(M_PI / 2).epsilon(1e-12));
    // 45 degrees
    REQUIRE(angular_error(0.0, 0.0, M_PI / 4, 0.0) == Approx(M_PI / 4).epsilon(1e-10));
    // never exceeds pi/2
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double e = angular_error(rng.uniform(0, M_PI), rng.uniform(-M_PI, M_PI),
                                       rng.uniform(0, M_PI), rng.uniform(-M_PI, M_PI));
        REQUIRE(e >= 0.0);
        REQUIRE(e <= M_PI / 2 + 1e-12);
    }
}

TEST_CASE("direction-encoded colors")
{
    // diagonal direction at full weight: 255/sqrt(3) rounds to 147
    const double theta = std::acos(1.0 / std::sqrt(3.0));
    const Rgb diag = dec_color(theta, M_PI / 4, 1.0);
    REQUIRE((int)diag.r == 147);
    REQUIRE((int)diag.g == 147);
    REQUIRE((int)diag.b == 147);

    const Rgb x = dec_color(M_PI / 2, 0.0, 1.0);
    REQUIRE((int)x.r == 255);
    REQUIRE((int)x.g == 0);
    REQUIRE((int)x.b == 0);

    const Rgb z = dec_color(0.0, 0.0, 1.0);
    REQUIRE((int)z.b == 255);

    const Rgb dark = dec_color(M_PI / 2, 0.0, 0.0);
    REQUIRE((int)dark.r == 0);

    const Rgb half = dec_color(M_PI / 2, 0.0, 0.5);
    REQUIRE((int)half.r == 128);  // round(255 * 0.5)

    REQUIRE_THROWS_AS(dec_color(0.0, 0.0, 1.5), ValidationError);
    REQUIRE_THROWS_AS(dec_color(0.0, 0.0, -0.1), ValidationError);
}

TEST_CASE("fit reports carry correlations and angular medians")
{
    std::vector<TissueParams> truth, est;
    Rng rng(40);
    const ParamBounds bounds = ParamBounds::defaults();
    for (int v = 0; v < 9; ++v) {
        TissueParams t = sample_params(rng, bounds);
        truth.push_back(t);
        TissueParams e = t;
        e.f += 0.01;  // correlated but not identical
        est.push_back(e);
    }

    const FitReport rep = evaluate_fit(truth, est, 12.5, "demo");
    REQUIRE(rep.fitter == "demo");
    REQUIRE(rep.n_voxels == 9);
    REQUIRE(rep.wall_seconds == 12.5);
    for (int p = 0; p < kNumScalarParams; ++p)
        REQUIRE(rep.r[(std::size_t)p] == Approx(1.0).epsilon(1e-9));
    // acos near a unit dot product resolves identical axes only to ~1e-8
    REQUIRE(rep.mean_angular_error == Approx(0.0).margin(1e-6));
    REQUIRE(rep.median_angular_error == Approx(0.0).margin(1e-6));
}

TEST_CASE("median angular error averages the middle pair for even counts")
{
    std::vector<TissueParams> truth(4), est(4);
    for (auto* v : {&truth, &est})
        for (auto& p : *v) p = support::typical_params();
    // angular errors 0, 0.1, 0.2, 0.4 -> median 0.15, mean 0.175
    est[1].theta += 0.1;
    est[2].theta += 0.2;
    est[3].theta += 0.4;
    // give scalars some variance so pearson is defined
    for (std::size_t v = 0; v < 4; ++v) {
        truth[v].f = 0.1 * (double)(v + 1);
        est[v].f = truth[v].f;
        truth[v].lambda_par = 0.2 * (double)(v + 1);
        est[v].lambda_par = truth[v].lambda_par;
        truth[v].lambda_iso = 0.15 * (double)(v + 1);
        est[v].lambda_iso = truth[v].lambda_iso;
        truth[v].t1_stick = 0.3 * (double)(v + 1);
        est[v].t1_stick = truth[v].t1_stick;
        truth[v].t1_ball = 0.4 * (double)(v + 1);
        est[v].t1_ball = truth[v].t1_ball;
    }

    const FitReport rep = evaluate_fit(truth, est, 0.0, "even");
    REQUIRE(rep.median_angular_error == Approx(0.15).epsilon(1e-9));
    REQUIRE(rep.mean_angular_error == Approx(0.175).epsilon(1e-9));
}

TEST_CASE("evaluation validates its inputs")
{
    std::vector<TissueParams> one{support::typical_params()};
    REQUIRE_THROWS_AS(evaluate_fit(one, one, 0.0, "x"), ValidationError);
    std::vector<TissueParams> two{support::typical_params(), support::typical_params()};
    REQUIRE_THROWS_AS(evaluate_fit(two, one, 0.0, "x"), ValidationError);
}

TEST_CASE("side-by-side comparison keeps the labels straight")
{
    std::vector<TissueParams> truth, a, b;
    Rng rng(50);
    const ParamBounds bounds = ParamBounds::defaults();
    for (int v = 0; v < 5; ++v) {
        truth.push_back(sample_params(rng, bounds));
        a.push_back(truth.back());
        b.push_back(truth.back());
    }
    const auto [ra, rb] = compare_fits(truth, a, b, 1.0, 2.0, "first", "second");
    REQUIRE(ra.fitter == "first");
    REQUIRE(rb.fitter == "second");
    REQUIRE(ra.wall_seconds == 1.0);
    REQUIRE(rb.wall_seconds == 2.0);
}
