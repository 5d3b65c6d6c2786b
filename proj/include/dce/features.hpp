#pragma once

// Random cosine feature maps: M frequencies drawn from N(0, I_d) and offsets
// from U[0, 2pi) define phi(x, omega_l) = sqrt(2) cos(nu_l^T x + b_l), whose
// pairwise products Monte-Carlo-approximate the unit-width Gaussian kernel
// exp(-||x - x'||^2 / 2).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "dce/errors.hpp"
#include "dce/rng.hpp"

namespace dce {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kTwoPi = 6.2831853071795864769252867665590;

struct FeatureMap {
    int M = 0;             // number of basis functions
    int d = 0;             // input dimension
    std::uint64_t seed = 0;
    Matrix frequencies;    // M x d, rows are nu_l
    Vector offsets;        // M, entries b_l in [0, 2pi)
};

// Draw a feature map. Deterministic: the same (seed, M, d) reproduces the
// samples bit for bit.
inline FeatureMap sample_feature_map(int d, int M, std::uint64_t seed) {
    if (d < 1) throw ConfigError("sample_feature_map: input dimension must be >= 1, got " + std::to_string(d));
    if (M < 1) throw ConfigError("sample_feature_map: feature count must be >= 1, got " + std::to_string(M));
    FeatureMap fm;
    fm.M = M;
    fm.d = d;
    fm.seed = seed;
    fm.frequencies.resize(M, d);
    fm.offsets.resize(M);
    Rng rng(seed);
    for (int l = 0; l < M; ++l)
        for (int j = 0; j < d; ++j) fm.frequencies(l, j) = rng.normal();
    for (int l = 0; l < M; ++l) fm.offsets(l) = rng.uniform(0.0, kTwoPi);
    return fm;
}

// phi(x) as a length-M vector; every entry lies in [-sqrt(2), sqrt(2)].
inline Vector eval_phi(const FeatureMap& fm, const Eigen::Ref<const Vector>& x) {
    if (x.size() != fm.d)
        throw DimensionError("eval_phi: input has length " + std::to_string(x.size()) +
                             ", feature map expects " + std::to_string(fm.d));
    Vector phase = fm.frequencies * x + fm.offsets;
    return kSqrt2 * phase.array().cos();
}

// Row-wise phi over a batch of inputs: X is N x d, result is N x M.
inline Matrix eval_phi_rows(const FeatureMap& fm, const Eigen::Ref<const Matrix>& X) {
    if (X.cols() != fm.d)
        throw DimensionError("eval_phi_rows: inputs have " + std::to_string(X.cols()) +
                             " columns, feature map expects " + std::to_string(fm.d));
    Matrix phase = X * fm.frequencies.transpose();
    phase.rowwise() += fm.offsets.transpose();
    return kSqrt2 * phase.array().cos();
}

// Monte-Carlo kernel estimate (1/M) sum_l phi(x, w_l) phi(x2, w_l).
inline double approx_kernel(const FeatureMap& fm, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& x2) {
    Vector a = eval_phi(fm, x);
    Vector b = eval_phi(fm, x2);
    return a.dot(b) / static_cast<double>(fm.M);
}

// The kernel being approximated (negative exponent; the cosine features
// Bochner-represent exp(-||x - x'||^2 / 2)).
inline double gaussian_kernel(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& x2) {
    return std::exp(-0.5 * (x - x2).squaredNorm());
}

}  // namespace dce
