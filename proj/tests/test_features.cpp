#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dce/features.hpp"
#include "support/oracles.hpp"

using namespace dce;

namespace {

FeatureMap zero_map(int d, int M) {
    FeatureMap fm;
    fm.d = d;
    fm.M = M;
    fm.frequencies = Matrix::Zero(M, d);
    fm.offsets = Vector::Zero(M);
    return fm;
}

}  // namespace

TEST_CASE("sample_feature_map shapes and ranges") {
    const FeatureMap fm = sample_feature_map(28, 5, 99);
    REQUIRE(fm.frequencies.rows() == 5);
    REQUIRE(fm.frequencies.cols() == 28);
    REQUIRE(fm.offsets.size() == 5);
    for (int l = 0; l < 5; ++l) {
        REQUIRE(fm.offsets(l) >= 0.0);
        REQUIRE(fm.offsets(l) < kTwoPi);
    }

    const FeatureMap tiny = sample_feature_map(1, 1, 3);
    REQUIRE(tiny.frequencies.size() == 1);
    REQUIRE(tiny.offsets.size() == 1);

    REQUIRE_THROWS_AS(sample_feature_map(0, 5, 1), ConfigError);
    REQUIRE_THROWS_AS(sample_feature_map(5, 0, 1), ConfigError);
}

TEST_CASE("sampled frequencies follow the standard normal (law of large numbers)") {
    const FeatureMap fm = sample_feature_map(1, 100000, 77);
    const double mean = fm.frequencies.mean();
    const double var = (fm.frequencies.array() - mean).square().mean();
    REQUIRE(std::abs(mean) < 0.02);
    REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("feature map construction is deterministic in the seed") {
    const FeatureMap a = sample_feature_map(7, 11, 4242);
    const FeatureMap b = sample_feature_map(7, 11, 4242);
    REQUIRE(a.frequencies == b.frequencies);
    REQUIRE(a.offsets == b.offsets);
    Vector x = Vector::LinSpaced(7, -1.0, 2.0);
    REQUIRE(eval_phi(a, x) == eval_phi(b, x));
}

TEST_CASE("eval_phi known values") {
    const FeatureMap fm = zero_map(3, 4);
    Vector x(3);
    x << 1.0, -2.0, 0.5;
    const Vector phi = eval_phi(fm, x);
    for (int l = 0; l < 4; ++l) REQUIRE(phi(l) == Catch::Approx(kSqrt2).epsilon(0));

    FeatureMap pi_map = zero_map(3, 2);
    pi_map.frequencies(0, 0) = M_PI;
    Vector e1 = Vector::Zero(3);
    e1(0) = 1.0;
    REQUIRE(eval_phi(pi_map, e1)(0) == Catch::Approx(-kSqrt2).margin(1e-12));

    REQUIRE_THROWS_AS(eval_phi(fm, Vector::Zero(2)), DimensionError);
}

TEST_CASE("eval_phi matches an independent scalar recomputation") {
    const FeatureMap fm = sample_feature_map(6, 9, 31);
    Rng rng(RngKey(5));
    for (int trial = 0; trial < 20; ++trial) {
        Vector x(6);
        for (int j = 0; j < 6; ++j) x(j) = rng.normal();
        const Vector phi = eval_phi(fm, x);
        for (int l = 0; l < 9; ++l) {
            const double expect =
                oracle::phi_scalar(fm.frequencies.row(l).transpose(), fm.offsets(l), x);
            REQUIRE(phi(l) == Catch::Approx(expect).margin(1e-12));
        }
    }
}

TEST_CASE("feature map is bounded by sqrt(2) everywhere") {
    Rng rng(RngKey(8));
    for (int trial = 0; trial < 1000; ++trial) {
        const FeatureMap fm = sample_feature_map(4, 100, rng.next_u64());
        Vector x(4);
        for (int j = 0; j < 4; ++j) x(j) = rng.normal() * 10.0;
        REQUIRE(eval_phi(fm, x).cwiseAbs().maxCoeff() <= kSqrt2);
    }
}

TEST_CASE("eval_phi_rows agrees with eval_phi") {
    const FeatureMap fm = sample_feature_map(5, 7, 12);
    Rng rng(RngKey(13));
    Matrix X(6, 5);
    for (int i = 0; i < X.size(); ++i) X(i / 5, i % 5) = rng.normal();
    const Matrix Phi = eval_phi_rows(fm, X);
    for (int i = 0; i < 6; ++i)
        REQUIRE((Phi.row(i).transpose() - eval_phi(fm, X.row(i).transpose())).cwiseAbs().maxCoeff() <
                1e-15);
}

TEST_CASE("approx_kernel basics") {
    const FeatureMap unit = zero_map(2, 1);
    Vector x(2), x2(2);
    x << 0.3, -4.0;
    x2 << 100.0, 2.0;
    REQUIRE(approx_kernel(unit, x, x2) == Catch::Approx(2.0).margin(1e-12));

    REQUIRE_THROWS_AS(approx_kernel(unit, Vector::Zero(3), x2), DimensionError);

    // kernel at zero distance: k(x, x) = 1 up to O(M^{-1/2})
    const FeatureMap fm = sample_feature_map(3, 4096, 500);
    Vector z(3);
    z << 0.5, 1.0, -0.25;
    REQUIRE(std::abs(approx_kernel(fm, z, z) - 1.0) < 4.0 / std::sqrt(4096.0));
}

TEST_CASE("approx_kernel near the closed-form Gaussian kernel at distance 2") {
    const int M = 10000;
    const FeatureMap fm = sample_feature_map(2, M, 321);
    Vector x(2), x2(2);
    x << 0.0, 0.0;
    x2 << 2.0, 0.0;
    const double expect = std::exp(-2.0);  // exp(-||x-x2||^2/2)
    REQUIRE(std::abs(approx_kernel(fm, x, x2) - expect) < 3.0 * (2.0 / std::sqrt(M)));
    REQUIRE(gaussian_kernel(x, x2) == Catch::Approx(expect).epsilon(0));
}

TEST_CASE("kernel error decays like M^{-1/2}") {
    Vector x(3), x2(3);
    x << 0.2, -0.7, 1.1;
    x2 << -0.4, 0.3, 0.6;
    const double truth = gaussian_kernel(x, x2);
    std::vector<double> log_m, log_err;
    Rng seeds(RngKey(2718));
    for (int m : {16, 64, 256, 1024}) {
        double err = 0.0;
        const int maps = 20;
        for (int rep = 0; rep < maps; ++rep) {
            const FeatureMap fm = sample_feature_map(3, m, seeds.next_u64());
            err += std::abs(approx_kernel(fm, x, x2) - truth);
        }
        log_m.push_back(std::log(static_cast<double>(m)));
        log_err.push_back(std::log(err / maps));
    }
    const double slope = oracle::fit_slope(log_m, log_err);
    REQUIRE(slope > -0.65);
    REQUIRE(slope < -0.35);
}
