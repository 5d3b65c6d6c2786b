#pragma once

// Test-side oracles, kept independent of the library's computation paths:
// quadrature where the library uses closed forms or Monte-Carlo, closed-form
// spectra where the library uses an eigensolver, and naive loops where the
// library uses vectorized expressions.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Gauss-Hermite nodes/weights via Golub-Welsch on the Jacobi matrix.
// Returns pairs (x_i, w_i) for integral f(y) e^{-y^2} dy ~ sum w_i f(x_i).
inline std::vector<std::pair<double, double>> gauss_hermite(int order) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(k / 2.0);
        J(k, k - 1) = off;
        J(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
    const double sqrt_pi = std::sqrt(M_PI);
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < order; ++i) {
        const double w = sqrt_pi * solver.eigenvectors()(0, i) * solver.eigenvectors()(0, i);
        out.emplace_back(solver.eigenvalues()(i), w);
    }
    return out;
}

// E[f(X)] for X ~ N(0,1), via the substitution x = sqrt(2) y.
inline double gaussian_expectation_1d(const std::function<double(double)>& f, int order = 80) {
    double acc = 0.0;
    for (const auto& [x, w] : gauss_hermite(order)) acc += w * f(std::sqrt(2.0) * x);
    return acc / std::sqrt(M_PI);
}

// E[f(X)] for X ~ N(0, I_2), tensor-product rule.
inline double gaussian_expectation_2d(const std::function<double(double, double)>& f,
                                      int order = 60) {
    const auto rule = gauss_hermite(order);
    double acc = 0.0;
    for (const auto& [x1, w1] : rule)
        for (const auto& [x2, w2] : rule)
            acc += w1 * w2 * f(std::sqrt(2.0) * x1, std::sqrt(2.0) * x2);
    return acc / M_PI;
}

// Circulant ring(n, k) Laplacian spectrum: lambda_j = 2k - 2 sum_m cos(2 pi j m / n).
inline double ring_laplacian_eigenvalue(int n, int k, int j) {
    double lam = 2.0 * k;
    for (int m = 1; m <= k; ++m) lam -= 2.0 * std::cos(2.0 * M_PI * j * m / n);
    return lam;
}

inline double ring_laplacian_max(int n, int k) {
    double best = 0.0;
    for (int j = 0; j < n; ++j) best = std::max(best, ring_laplacian_eigenvalue(n, k, j));
    return best;
}

// Eigenvalues of a symmetric 2x2 matrix, analytic.
inline std::pair<double, double> sym2x2_eigenvalues(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return {mean - disc, mean + disc};
}

// Plain scalar re-evaluation of the cosine feature, no Eigen expressions.
inline double phi_scalar(const Eigen::VectorXd& nu, double b, const Eigen::VectorXd& x) {
    double dot = 0.0;
    for (long j = 0; j < nu.size(); ++j) dot += nu(j) * x(j);
    return std::sqrt(2.0) * std::cos(dot + b);
}

// Explicit dense matrix power (for small LTI checks).
inline Eigen::VectorXd matrix_power_apply(const Eigen::MatrixXd& Q, const Eigen::VectorXd& v,
                                          long t) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(Q.rows(), Q.cols());
    for (long s = 0; s < t; ++s) P = Q * P;
    return P * v;
}

// Least-squares slope of y on x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

}  // namespace oracle
