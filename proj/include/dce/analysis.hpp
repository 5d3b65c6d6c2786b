#pragma once

// Deterministic analysis of the error process:
//   B = L (x) I_M + c blockdiag(G_1..G_n),   Q = I - alpha B,
// the expected error obeys E[e_t] = Q E[e_{t-1}], so spectral quantities of
// B decide feasibility of the step size:
//   first moment:   alpha < 2 / lambda_max(B)
//   second moment:  alpha < 2 lambda_min(B) / (lambda_max(L) + 2Mc)^2,
// and in the second range the recursion s_{t+1} = Phi_a s_t + Phi_b bounds
// E[||e_t||^2] with limit Phi_b / (1 - Phi_a).

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dce/errors.hpp"
#include "dce/estimator.hpp"
#include "dce/network.hpp"

namespace dce {

// Dense eigenanalysis is exact and cheap at the scales this models target.
inline constexpr long kDenseSystemLimit = 5000;

struct SystemMatrices {
    int n = 0, M = 0, c = 0;
    double alpha = 0.0;  // innovation step size (Eq. 5 role)
    Matrix L;
    std::vector<Matrix> G_blocks;
    Matrix B, Q;  // nM x nM, materialized up to kDenseSystemLimit

    long dim() const { return static_cast<long>(n) * M; }
};

inline SystemMatrices build_system(const Topology& topo, const std::vector<Matrix>& G_blocks,
                                   int c, double alpha) {
    if (static_cast<int>(G_blocks.size()) != topo.n)
        throw DimensionError("build_system: got " + std::to_string(G_blocks.size()) +
                             " G blocks for " + std::to_string(topo.n) + " agents");
    if (c < 1) throw ConfigError("build_system: batch size must be positive");
    const int M = static_cast<int>(G_blocks.front().rows());
    for (const auto& G : G_blocks)
        if (G.rows() != M || G.cols() != M)
            throw DimensionError("build_system: G blocks must all be square of equal size");

    SystemMatrices sys;
    sys.n = topo.n;
    sys.M = M;
    sys.c = c;
    sys.alpha = alpha;
    sys.L = topo.laplacian;
    sys.G_blocks = G_blocks;

    const long dim = sys.dim();
    if (dim <= kDenseSystemLimit) {
        sys.B = Matrix::Zero(dim, dim);
        for (int i = 0; i < sys.n; ++i) {
            for (int j = 0; j < sys.n; ++j)
                if (sys.L(i, j) != 0.0)
                    sys.B.block(i * M, j * M, M, M) = sys.L(i, j) * Matrix::Identity(M, M);
            sys.B.block(i * M, i * M, M, M) += c * G_blocks[i];
        }
        sys.B = 0.5 * (sys.B + sys.B.transpose()).eval();  // symmetry before eigenanalysis
        sys.Q = Matrix::Identity(dim, dim) - alpha * sys.B;
    }
    return sys;
}

// y = B x without materializing B: view x as an M x n block matrix V, then
// (L (x) I_M) x maps to V L and the block-diagonal part to c G_i V_i.
inline Vector apply_B(const SystemMatrices& sys, const Eigen::Ref<const Vector>& x) {
    if (x.size() != sys.dim()) throw DimensionError("apply_B: vector has wrong length");
    Eigen::Map<const Matrix> V(x.data(), sys.M, sys.n);
    Matrix out = V * sys.L;  // L symmetric
    for (int i = 0; i < sys.n; ++i) out.col(i) += sys.c * (sys.G_blocks[i] * V.col(i));
    return Eigen::Map<const Vector>(out.data(), out.size());
}

struct SpectralReport {
    int n = 0, M = 0, c = 0;
    double alpha = 0.0;
    double sigma_v_sq = 0.0;
    double lambda_max_B = 0.0, lambda_min_B = 0.0;
    double lambda_max_L = 0.0;
    double rho_Q = 0.0;
    double alpha_first_moment_max = 0.0;
    double alpha_second_moment_max = 0.0;
    double phi_a = 0.0, phi_b = 0.0;
    std::optional<double> second_moment_bound;  // only defined inside the second-moment range
    bool alpha_in_first_moment_range = false;
    bool alpha_in_second_moment_range = false;
    bool b_positive_definite = false;
};

// All spectral quantities and step-size verdicts for one system. An alpha
// outside either range flags the report rather than failing.
inline SpectralReport feasibility(const SystemMatrices& sys, double sigma_v_sq) {
    if (sigma_v_sq < 0.0) throw ConfigError("feasibility: negative noise variance");
    if (sys.B.size() == 0)
        throw ConfigError("feasibility: system of dimension " + std::to_string(sys.dim()) +
                          " exceeds the dense limit " + std::to_string(kDenseSystemLimit));
    SpectralReport rep;
    rep.n = sys.n;
    rep.M = sys.M;
    rep.c = sys.c;
    rep.alpha = sys.alpha;
    rep.sigma_v_sq = sigma_v_sq;

    Eigen::SelfAdjointEigenSolver<Matrix> b_solver(sys.B, Eigen::EigenvaluesOnly);
    rep.lambda_max_B = b_solver.eigenvalues().maxCoeff();
    rep.lambda_min_B = b_solver.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> l_solver(sys.L, Eigen::EigenvaluesOnly);
    rep.lambda_max_L = l_solver.eigenvalues().maxCoeff();
    rep.b_positive_definite = rep.lambda_min_B > 0.0;

    // lambda_1(Q) = 1 - alpha lambda_min(B), lambda_Mn(Q) = 1 - alpha lambda_max(B).
    rep.rho_Q = std::max(std::abs(1.0 - sys.alpha * rep.lambda_min_B),
                         std::abs(1.0 - sys.alpha * rep.lambda_max_B));

    rep.alpha_first_moment_max = rep.lambda_max_B > 0.0
                                     ? 2.0 / rep.lambda_max_B
                                     : std::numeric_limits<double>::infinity();
    const double cap = rep.lambda_max_L + 2.0 * sys.M * sys.c;  // >= lambda_1(B_t) always
    rep.alpha_second_moment_max = 2.0 * rep.lambda_min_B / (cap * cap);

    rep.phi_a = 1.0 - 2.0 * sys.alpha * rep.lambda_min_B + sys.alpha * sys.alpha * cap * cap;
    rep.phi_b = 2.0 * sys.alpha * sys.alpha * sys.c * sys.M * sys.n * sigma_v_sq;

    rep.alpha_in_first_moment_range = sys.alpha < rep.alpha_first_moment_max;
    rep.alpha_in_second_moment_range = sys.alpha < rep.alpha_second_moment_max;
    if (rep.alpha_in_second_moment_range) {
        const double denom = 2.0 * rep.lambda_min_B - sys.alpha * cap * cap;
        rep.second_moment_bound = 2.0 * sys.alpha * sys.c * sys.M * sys.n * sigma_v_sq / denom;
    }
    return rep;
}

// Iterate E[e_t] = Q E[e_{t-1}] by matrix-vector products, recording every
// `stride` steps (and the endpoint).
inline std::vector<std::pair<long, Vector>> predict_first_moment(const SystemMatrices& sys,
                                                                 const Vector& e0, long T,
                                                                 long stride) {
    if (e0.size() != sys.dim()) throw DimensionError("predict_first_moment: e0 has wrong length");
    if (T < 0 || stride < 1) throw ConfigError("predict_first_moment: bad horizon or stride");
    std::vector<std::pair<long, Vector>> out;
    Vector e = e0;
    out.emplace_back(0, e);
    for (long t = 1; t <= T; ++t) {
        e -= sys.alpha * apply_B(sys, e);
        if (t % stride == 0 || t == T) out.emplace_back(t, e);
    }
    return out;
}

struct SecondMomentSeries {
    std::vector<std::pair<long, double>> values;  // t, upper bound on E[||e_t||^2]
    bool contracting = false;                     // Phi_a < 1
    double limit = 0.0;                           // Phi_b / (1 - Phi_a) when contracting
};

inline SecondMomentSeries second_moment_recursion(const SpectralReport& report, double s0, long T,
                                                  long stride = 1) {
    if (s0 < 0.0) throw ConfigError("second_moment_recursion: s0 must be nonnegative");
    if (T < 0 || stride < 1) throw ConfigError("second_moment_recursion: bad horizon or stride");
    SecondMomentSeries series;
    series.contracting = report.phi_a < 1.0;
    if (series.contracting) series.limit = report.phi_b / (1.0 - report.phi_a);
    double s = s0;
    series.values.emplace_back(0, s);
    for (long t = 1; t <= T; ++t) {
        s = report.phi_a * s + report.phi_b;
        if (t % stride == 0 || t == T) series.values.emplace_back(t, s);
    }
    return series;
}

// Plug-in noise variance for pool mode: the mean squared residual of the
// centralized baseline.
inline double estimate_sigma_v(const DataPool& pool, const FeatureMap& fm,
                               const Vector& theta_star) {
    if (pool.rows() < 1) throw DataError("estimate_sigma_v: empty pool");
    if (theta_star.size() != fm.M)
        throw DimensionError("estimate_sigma_v: theta has wrong length");
    double acc = 0.0;
    constexpr long kChunk = 4096;
    for (long start = 0; start < pool.rows(); start += kChunk) {
        const long take = std::min(kChunk, pool.rows() - start);
        Matrix Phi = eval_phi_rows(fm, pool.inputs.middleRows(start, take));
        acc += (pool.outputs.segment(start, take) - Phi * theta_star).squaredNorm();
    }
    return acc / static_cast<double>(pool.rows());
}

}  // namespace dce
