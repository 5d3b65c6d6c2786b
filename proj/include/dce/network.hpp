#pragma once

// Agent graphs, their Laplacians, and the doubly stochastic mixing matrix
// P = I - alpha L. Connectivity is established combinatorially (BFS), not
// inferred from eigenvalues, so the spectral statements stay testable
// against an independent route.

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dce/errors.hpp"
#include "dce/features.hpp"

namespace dce {

struct Topology {
    int n = 0;
    Matrix adjacency;   // n x n, symmetric 0/1, zero diagonal
    Matrix laplacian;   // D - A
    int max_degree = 0;
    int components = 0;
    bool connected = false;
};

namespace detail {

inline void finish_topology(Topology& topo) {
    const int n = topo.n;
    Vector degrees = topo.adjacency.rowwise().sum();
    topo.laplacian = -topo.adjacency;
    topo.laplacian.diagonal() = degrees;
    topo.max_degree = n > 0 ? static_cast<int>(degrees.maxCoeff()) : 0;

    // BFS component count.
    std::vector<int> label(n, -1);
    int components = 0;
    std::vector<int> queue;
    for (int start = 0; start < n; ++start) {
        if (label[start] >= 0) continue;
        queue.assign(1, start);
        label[start] = components;
        while (!queue.empty()) {
            int u = queue.back();
            queue.pop_back();
            for (int v = 0; v < n; ++v) {
                if (topo.adjacency(u, v) != 0.0 && label[v] < 0) {
                    label[v] = components;
                    queue.push_back(v);
                }
            }
        }
        ++components;
    }
    topo.components = components;
    topo.connected = (components == 1);
}

}  // namespace detail

// Circulant ring where agent i is adjacent to i +- 1, ..., i +- k (mod n).
inline Topology ring_topology(int n, int k) {
    if (n < 3) throw ConfigError("ring_topology: need n >= 3, got " + std::to_string(n));
    if (k < 1 || 2 * k >= n)
        throw ConfigError("ring_topology: need 1 <= k < n/2, got k=" + std::to_string(k) +
                          " with n=" + std::to_string(n));
    Topology topo;
    topo.n = n;
    topo.adjacency = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int off = 1; off <= k; ++off) {
            topo.adjacency(i, (i + off) % n) = 1.0;
            topo.adjacency(i, (i - off + n) % n) = 1.0;
        }
    }
    detail::finish_topology(topo);
    return topo;
}

inline Topology custom_topology(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw DimensionError("custom_topology: adjacency must be square");
    const int n = static_cast<int>(adjacency.rows());
    if (n < 1) throw ConfigError("custom_topology: need at least one node");
    for (int i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0)
            throw ConfigError("custom_topology: nonzero diagonal at node " + std::to_string(i));
        for (int j = 0; j < n; ++j) {
            const double a = adjacency(i, j);
            if (a != 0.0 && a != 1.0)
                throw ConfigError("custom_topology: entries must be 0 or 1");
            if (a != adjacency(j, i))
                throw ConfigError("custom_topology: adjacency not symmetric at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    Topology topo;
    topo.n = n;
    topo.adjacency = adjacency;
    detail::finish_topology(topo);
    return topo;
}

// Edge-list text format: one "u v" pair per line, 0-indexed; blank lines and
// lines starting with '#' are ignored. Node count is max index + 1 unless a
// larger n is forced.
inline Topology load_edge_list(const std::string& path, int force_n = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("load_edge_list: cannot open " + path);
    std::vector<std::pair<int, int>> edges;
    int max_node = force_n - 1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        long u, v;
        if (!(ss >> u >> v) || u < 0 || v < 0)
            throw DataError("load_edge_list: bad line " + std::to_string(lineno) + " in " + path);
        if (u == v)
            throw DataError("load_edge_list: self-loop at line " + std::to_string(lineno));
        edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
        max_node = std::max(max_node, static_cast<int>(std::max(u, v)));
    }
    if (max_node < 0) throw DataError("load_edge_list: no edges in " + path);
    Matrix adj = Matrix::Zero(max_node + 1, max_node + 1);
    for (auto [u, v] : edges) {
        adj(u, v) = 1.0;
        adj(v, u) = 1.0;
    }
    return custom_topology(adj);
}

inline void save_edge_list(const Topology& topo, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_edge_list: cannot open " + path + " for writing");
    for (int i = 0; i < topo.n; ++i)
        for (int j = i + 1; j < topo.n; ++j)
            if (topo.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
    if (!out) throw IoError("save_edge_list: write to " + path + " failed");
}

// Laplacian eigenvalues sorted descending. L is symmetric PSD, so the dense
// self-adjoint solver is exact at these sizes.
inline Vector laplacian_spectrum(const Topology& topo) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(topo.laplacian);
    Vector ascending = solver.eigenvalues();
    return ascending.reverse();
}

struct MixingMatrix {
    Matrix P;
    double alpha = 0.0;   // consensus step size used to form P
    Topology topology;
    int n() const { return topology.n; }
};

// P = I - alpha L. Requires a connected topology and 0 < alpha < 1/deg so
// the diagonal stays strictly positive.
inline MixingMatrix build_mixing(const Topology& topo, double alpha) {
    if (!topo.connected)
        throw Disconnected("build_mixing: topology has " + std::to_string(topo.components) +
                           " components; the network must be connected");
    if (alpha <= 0.0) throw AlphaOutOfRange("build_mixing: alpha must be positive");
    if (topo.max_degree > 0 && alpha >= 1.0 / topo.max_degree)
        throw AlphaOutOfRange("build_mixing: alpha = " + std::to_string(alpha) +
                              " >= 1/deg = " + std::to_string(1.0 / topo.max_degree));
    MixingMatrix mix;
    mix.alpha = alpha;
    mix.topology = topo;
    mix.P = Matrix::Identity(topo.n, topo.n) - alpha * topo.laplacian;
    return mix;
}

}  // namespace dce
