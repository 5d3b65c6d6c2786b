#pragma once

// The synchronous consensus+innovation update
//   theta_{i,t+1} = sum_j P_ij theta_{j,t} + alpha H_{i,t}^T (y_{i,t} - H_{i,t} theta_{i,t})
// with Jacobi semantics (every agent reads only time-t state), error
// tracking against a reference parameter, and the centralized least-squares
// baseline used as that reference in pool mode.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dce/errors.hpp"
#include "dce/network.hpp"
#include "dce/observation.hpp"

namespace dce {

struct NetworkState {
    long t = 0;
    Matrix estimates;    // n x M, row i is agent i's estimate
    double alpha = 0.0;  // innovation step size

    int n() const { return static_cast<int>(estimates.rows()); }
    int M() const { return static_cast<int>(estimates.cols()); }
};

inline NetworkState init_state(int n, int M, double alpha) {
    if (n < 1 || M < 1) throw ConfigError("init_state: dimensions must be positive");
    NetworkState state;
    state.estimates = Matrix::Zero(n, M);
    state.alpha = alpha;
    return state;
}

inline NetworkState init_state(int n, int M, double alpha, const Matrix& given) {
    if (given.rows() != n || given.cols() != M)
        throw DimensionError("init_state: initial estimates are " + std::to_string(given.rows()) +
                             "x" + std::to_string(given.cols()) + ", expected " +
                             std::to_string(n) + "x" + std::to_string(M));
    NetworkState state;
    state.estimates = given;
    state.alpha = alpha;
    return state;
}

// One synchronous network update. All innovations are computed from the
// time-t snapshot; the result is independent of agent processing order.
// Throws Diverged when any entry comes out non-finite.
inline NetworkState step(const NetworkState& state, const MixingMatrix& mixing,
                         const std::vector<AgentBatch>& batches) {
    const int n = state.n();
    const int M = state.M();
    if (mixing.n() != n)
        throw DimensionError("step: mixing matrix is for " + std::to_string(mixing.n()) +
                             " agents, state has " + std::to_string(n));
    if (static_cast<int>(batches.size()) != n)
        throw DimensionError("step: expected " + std::to_string(n) + " batches, got " +
                             std::to_string(batches.size()));
    const int c = batches.front().c();
    for (const auto& batch : batches) {
        if (batch.H.cols() != M)
            throw DimensionError("step: batch for agent " + std::to_string(batch.agent) +
                                 " has M = " + std::to_string(batch.H.cols()));
        if (batch.y.size() != batch.H.rows())
            throw DimensionError("step: batch y length does not match H rows");
        if (batch.c() != c)
            throw DimensionError("step: batch sizes differ across agents");
    }

    NetworkState next;
    next.alpha = state.alpha;
    next.t = state.t + 1;
    next.estimates = mixing.P * state.estimates;
    for (int i = 0; i < n; ++i)
        next.estimates.row(i) +=
            state.alpha * innovation(batches[i], state.estimates.row(i).transpose()).transpose();
    if (!next.estimates.allFinite())
        throw Diverged(next.t, "step: non-finite estimate at iteration " + std::to_string(next.t));
    return next;
}

struct GlobalError {
    Vector e;        // stacked agent-major: [e_1; ...; e_n], each of length M
    double norm_sq;  // sum_i ||e_{i,t}||^2
};

inline GlobalError global_error(const NetworkState& state, const Eigen::Ref<const Vector>& reference) {
    if (reference.size() != state.M())
        throw DimensionError("global_error: reference has length " +
                             std::to_string(reference.size()) + ", estimates have M = " +
                             std::to_string(state.M()));
    Matrix diff_t = (state.estimates.rowwise() - reference.transpose()).transpose();  // M x n
    GlobalError err;
    err.e = Eigen::Map<const Vector>(diff_t.data(), diff_t.size());
    err.norm_sq = err.e.squaredNorm();
    return err;
}

// argmin_theta ||Phi theta - y||^2 + ridge ||theta||^2 over the whole pool.
// With ridge = 0 a singular normal matrix falls back to the minimum-norm
// (pseudo-inverse) solution.
inline Vector centralized_baseline(const DataPool& pool, const FeatureMap& fm, double ridge = 0.0) {
    if (pool.rows() < 1) throw DataError("centralized_baseline: empty pool");
    if (ridge < 0.0) throw ConfigError("centralized_baseline: negative ridge");
    const int M = fm.M;
    Matrix A = Matrix::Zero(M, M);
    Vector b = Vector::Zero(M);
    constexpr long kChunk = 4096;
    for (long start = 0; start < pool.rows(); start += kChunk) {
        const long take = std::min(kChunk, pool.rows() - start);
        Matrix Phi = eval_phi_rows(fm, pool.inputs.middleRows(start, take));
        A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
        b += Phi.transpose() * pool.outputs.segment(start, take);
    }
    A = A.selfadjointView<Eigen::Lower>();
    if (ridge > 0.0) A.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
    const Vector& evals = solver.eigenvalues();
    const double cutoff = evals.cwiseAbs().maxCoeff() * M * 1e-14;
    Vector coeffs = solver.eigenvectors().transpose() * b;
    for (int i = 0; i < M; ++i) coeffs(i) = (evals(i) > cutoff) ? coeffs(i) / evals(i) : 0.0;
    return solver.eigenvectors() * coeffs;
}

struct TraceRecord {
    long t;
    double norm_sq;
};

struct ErrorTrace {
    std::vector<TraceRecord> per_iteration;  // every iteration, ||e_t||^2
    std::vector<long> recorded_ts;           // thinned grid
    std::vector<Vector> recorded_errors;     // stacked e_t at the thinned grid
    std::string reference_tag;
    Vector reference;
    std::optional<long> diverged_at;
};

// Everything run_trajectory needs for one run. `draw(agent, t)` supplies the
// batch, capturing the data source and the run's RNG stream.
struct TrajectorySpec {
    MixingMatrix mixing;
    double innovation_alpha = 0.0;
    long T = 0;
    long thin = 100;
    Vector reference;
    std::string reference_tag = "synthetic-truth";
    std::function<AgentBatch(int agent, long t)> draw;
    double divergence_factor = 1e12;  // flag when ||e_t||^2 exceeds this times its initial value
    bool record_errors = true;
};

// Execute T steps from the all-zeros initialization. Divergence (non-finite
// entries or the norm guard) stops the run and is flagged on the trace, with
// everything recorded so far preserved.
inline ErrorTrace run_trajectory(const TrajectorySpec& spec) {
    if (spec.T < 1) throw ConfigError("run_trajectory: need T >= 1");
    if (spec.thin < 1) throw ConfigError("run_trajectory: need thin >= 1");
    if (!spec.draw) throw ConfigError("run_trajectory: no batch source");
    const int n = spec.mixing.n();
    const int M = static_cast<int>(spec.reference.size());

    ErrorTrace trace;
    trace.reference = spec.reference;
    trace.reference_tag = spec.reference_tag;
    trace.per_iteration.reserve(spec.T + 1);

    NetworkState state = init_state(n, M, spec.innovation_alpha);
    auto record = [&](const NetworkState& s) {
        GlobalError err = global_error(s, spec.reference);
        trace.per_iteration.push_back({s.t, err.norm_sq});
        if (s.t % spec.thin == 0) {
            trace.recorded_ts.push_back(s.t);
            if (spec.record_errors) trace.recorded_errors.push_back(std::move(err.e));
        }
        return err.norm_sq;
    };
    const double initial_norm_sq = record(state);
    const double guard =
        spec.divergence_factor * std::max(initial_norm_sq, 1.0);

    std::vector<AgentBatch> batches(n);
    for (long t = 0; t < spec.T; ++t) {
        for (int i = 0; i < n; ++i) batches[i] = spec.draw(i, t);
        try {
            state = step(state, spec.mixing, batches);
        } catch (const Diverged& div) {
            trace.diverged_at = div.iteration;
            break;
        }
        const double norm_sq = record(state);
        if (norm_sq > guard) {
            trace.diverged_at = state.t;
            break;
        }
    }
    return trace;
}

inline void write_trace_csv(const ErrorTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_csv: cannot open " + path);
    out << "t,global_error_sq\n";
    char buf[64];
    for (const auto& rec : trace.per_iteration) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g\n", rec.t, rec.norm_sq);
        out << buf;
    }
    if (!out) throw IoError("write_trace_csv: write to " + path + " failed");
}

// Stacked thinned error vectors, one row per recorded t.
inline void write_trace_errors_csv(const ErrorTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_errors_csv: cannot open " + path);
    out << "t";
    const long dim = trace.recorded_errors.empty() ? 0 : trace.recorded_errors.front().size();
    for (long k = 0; k < dim; ++k) out << ",e" << k;
    out << "\n";
    char buf[64];
    for (std::size_t r = 0; r < trace.recorded_ts.size() && r < trace.recorded_errors.size(); ++r) {
        out << trace.recorded_ts[r];
        for (long k = 0; k < dim; ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", trace.recorded_errors[r](k));
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write_trace_errors_csv: write to " + path + " failed");
}

}  // namespace dce
