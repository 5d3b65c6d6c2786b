#pragma once

// Per-agent measurement batches (H_{i,t}, y_{i,t}) from either a synthetic
// ground-truth model or an ingested regression dataset, plus the per-agent
// second-moment (Gram) matrices G_i = c^{-1} E[H^T H] those batches induce.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dce/csv.hpp"
#include "dce/errors.hpp"
#include "dce/features.hpp"
#include "dce/rng.hpp"

namespace dce {

struct Standardization {
    std::vector<std::string> feature_names;
    std::string target_name;
    Vector feature_mean, feature_sd;
    double target_mean = 0.0, target_sd = 1.0;
};

struct DataPool {
    Matrix inputs;    // N x d, z-scored
    Vector outputs;   // N, z-scored
    Standardization standardization;

    long rows() const { return inputs.rows(); }
    int dim() const { return static_cast<int>(inputs.cols()); }
};

struct CsvOptions {
    std::string target;
    std::vector<std::string> feature_columns;  // empty: all numeric columns except target
    std::optional<long> subsample;
    std::uint64_t seed = 0;
    char delimiter = ',';
};

namespace detail {

// Population standard deviation; flags effectively-constant columns.
inline void standardize_column(Eigen::Ref<Vector> col, const std::string& name,
                               double& mean_out, double& sd_out) {
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
        throw DataError("load_csv: column '" + name + "' has zero variance");
    col = (col.array() - mean) / sd;
    mean_out = mean;
    sd_out = sd;
}

}  // namespace detail

// Ingest a CSV into a standardized pool. Rows with missing or non-numeric
// values in the selected columns are dropped; when feature_columns is empty,
// every column other than the target that parses as numeric in at least half
// of its non-empty cells is used (this is what silently drops date columns).
inline DataPool load_csv(const std::string& path, const CsvOptions& options) {
    if (options.target.empty()) throw ConfigError("load_csv: no target column given");
    const CsvTable table = read_csv(path, options.delimiter);
    const int ncols = static_cast<int>(table.header.size());

    auto column_index = [&](const std::string& name) {
        for (int j = 0; j < ncols; ++j)
            if (table.header[j] == name) return j;
        throw DataError("load_csv: column '" + name + "' not found in " + path);
    };

    const int target_idx = column_index(options.target);
    std::vector<int> feature_idx;
    if (!options.feature_columns.empty()) {
        for (const auto& name : options.feature_columns) {
            const int j = column_index(name);
            if (j == target_idx)
                throw ConfigError("load_csv: target column '" + name + "' listed as a feature");
            feature_idx.push_back(j);
        }
    } else {
        // Auto-detect numeric columns.
        std::vector<long> parsed(ncols, 0), nonempty(ncols, 0);
        double value;
        for (const auto& row : table.rows) {
            for (int j = 0; j < ncols && j < static_cast<int>(row.size()); ++j) {
                if (row[j].empty()) continue;
                ++nonempty[j];
                if (detail::parse_finite_double(row[j], value)) ++parsed[j];
            }
        }
        for (int j = 0; j < ncols; ++j)
            if (j != target_idx && parsed[j] > 0 && 2 * parsed[j] >= nonempty[j])
                feature_idx.push_back(j);
    }
    if (feature_idx.empty()) throw DataError("load_csv: no usable feature columns in " + path);

    const int d = static_cast<int>(feature_idx.size());
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(table.rows.size() * d);
    std::vector<double> row_buf(d);
    for (const auto& row : table.rows) {
        if (static_cast<int>(row.size()) < ncols) continue;
        double y;
        if (!detail::parse_finite_double(row[target_idx], y)) continue;
        bool ok = true;
        for (int j = 0; j < d; ++j) {
            if (!detail::parse_finite_double(row[feature_idx[j]], row_buf[j])) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        xs.insert(xs.end(), row_buf.begin(), row_buf.end());
        ys.push_back(y);
    }
    long n = static_cast<long>(ys.size());
    if (n == 0) throw DataError("load_csv: no usable rows in " + path);

    using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Matrix inputs = Eigen::Map<const RowMajorMatrix>(xs.data(), n, d);
    Vector outputs = Eigen::Map<const Vector>(ys.data(), n);

    if (options.subsample) {
        const long want = *options.subsample;
        if (want < 1) throw ConfigError("load_csv: subsample count must be positive");
        if (want > n)
            throw DataError("load_csv: subsample " + std::to_string(want) + " exceeds " +
                            std::to_string(n) + " usable rows");
        // Partial Fisher-Yates, seeded; without replacement.
        std::vector<long> order(n);
        for (long i = 0; i < n; ++i) order[i] = i;
        Rng rng(RngKey(options.seed).fork(Stream::Subsample));
        for (long i = 0; i < want; ++i) {
            const long j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(order[i], order[j]);
        }
        Matrix sub_inputs(want, d);
        Vector sub_outputs(want);
        for (long i = 0; i < want; ++i) {
            sub_inputs.row(i) = inputs.row(order[i]);
            sub_outputs(i) = outputs(order[i]);
        }
        inputs = std::move(sub_inputs);
        outputs = std::move(sub_outputs);
        n = want;
    }

    DataPool pool;
    pool.standardization.target_name = options.target;
    pool.standardization.feature_mean.resize(d);
    pool.standardization.feature_sd.resize(d);
    for (int j = 0; j < d; ++j) {
        pool.standardization.feature_names.push_back(table.header[feature_idx[j]]);
        detail::standardize_column(inputs.col(j), table.header[feature_idx[j]],
                                   pool.standardization.feature_mean(j),
                                   pool.standardization.feature_sd(j));
    }
    detail::standardize_column(outputs, options.target, pool.standardization.target_mean,
                               pool.standardization.target_sd);
    pool.inputs = std::move(inputs);
    pool.outputs = std::move(outputs);
    return pool;
}

enum class InputSampler { StandardNormal, UniformCube };

struct SyntheticModel {
    Vector theta_true;
    FeatureMap feature_map;
    double noise_std = 0.0;
    InputSampler sampler = InputSampler::StandardNormal;
    double uniform_halfwidth = 1.0;  // only for UniformCube
};

struct AgentBatch {
    int agent = 0;
    long t = 0;
    Matrix H;   // c x M
    Vector y;   // c
    int c() const { return static_cast<int>(H.rows()); }
};

// Contiguous balanced shard of [0, N) for agent i of n (partitioned mode).
inline std::pair<long, long> shard_range(long N, int n_agents, int agent) {
    return {agent * N / n_agents, (agent + 1) * static_cast<long>(N) / n_agents};
}

namespace detail {

inline void check_model(const SyntheticModel& model) {
    if (model.theta_true.size() != model.feature_map.M)
        throw DimensionError("SyntheticModel: theta_true has length " +
                             std::to_string(model.theta_true.size()) + " but M = " +
                             std::to_string(model.feature_map.M));
    if (model.noise_std < 0.0) throw ConfigError("SyntheticModel: negative noise_std");
}

inline Matrix draw_inputs(const SyntheticModel& model, int count, Rng& rng) {
    Matrix X(count, model.feature_map.d);
    if (model.sampler == InputSampler::StandardNormal) {
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < model.feature_map.d; ++j) X(i, j) = rng.normal();
    } else {
        const double a = model.uniform_halfwidth;
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < model.feature_map.d; ++j) X(i, j) = rng.uniform(-a, a);
    }
    return X;
}

}  // namespace detail

// y = H theta + v with v ~ N(0, sigma_v^2 I). Deterministic given
// (stream, agent, t): inputs are drawn first, then the noise, from the
// stream forked on (agent, t).
inline AgentBatch draw_batch_synthetic(const SyntheticModel& model, int agent, long t, int c,
                                       const RngKey& stream) {
    detail::check_model(model);
    if (c < 1) throw ConfigError("draw_batch_synthetic: batch size must be >= 1");
    Rng rng(stream.fork(static_cast<std::uint64_t>(agent), static_cast<std::uint64_t>(t)));
    AgentBatch batch;
    batch.agent = agent;
    batch.t = t;
    Matrix X = detail::draw_inputs(model, c, rng);
    batch.H = eval_phi_rows(model.feature_map, X);
    batch.y = batch.H * model.theta_true;
    if (model.noise_std > 0.0)
        for (int i = 0; i < c; ++i) batch.y(i) += model.noise_std * rng.normal();
    return batch;
}

// Rows drawn uniformly with replacement from the pool (or from the agent's
// shard in partitioned mode); no synthetic noise is added, the dataset noise
// is intrinsic.
inline AgentBatch draw_batch_pool(const DataPool& pool, const FeatureMap& fm, int agent, long t,
                                  int c, const RngKey& stream,
                                  std::optional<std::pair<long, long>> shard = std::nullopt) {
    if (c < 1) throw ConfigError("draw_batch_pool: batch size must be >= 1");
    const long lo = shard ? shard->first : 0;
    const long hi = shard ? shard->second : pool.rows();
    if (lo < 0 || hi > pool.rows() || lo >= hi)
        throw DataError("draw_batch_pool: empty or invalid row range [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + ")");
    Rng rng(stream.fork(static_cast<std::uint64_t>(agent), static_cast<std::uint64_t>(t)));
    Matrix X(c, pool.dim());
    Vector y(c);
    for (int i = 0; i < c; ++i) {
        const long row = lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo)));
        X.row(i) = pool.inputs.row(row);
        y(i) = pool.outputs(row);
    }
    AgentBatch batch;
    batch.agent = agent;
    batch.t = t;
    batch.H = eval_phi_rows(fm, X);
    batch.y = std::move(y);
    return batch;
}

// The innovation H^T (y - H theta_hat).
inline Vector innovation(const AgentBatch& batch, const Eigen::Ref<const Vector>& theta_hat) {
    if (theta_hat.size() != batch.H.cols())
        throw DimensionError("innovation: estimate length does not match batch");
    return batch.H.transpose() * (batch.y - batch.H * theta_hat);
}

// Monte-Carlo estimate of G = E[phi phi^T] from the synthetic input sampler.
inline Matrix estimate_gram(const SyntheticModel& model, long samples, const RngKey& stream) {
    detail::check_model(model);
    if (samples < 1) throw ConfigError("estimate_gram: need at least one sample");
    Rng rng(stream);
    const int M = model.feature_map.M;
    Matrix G = Matrix::Zero(M, M);
    constexpr int kChunk = 1024;
    long left = samples;
    while (left > 0) {
        const int take = static_cast<int>(std::min<long>(left, kChunk));
        Matrix X = detail::draw_inputs(model, take, rng);
        Matrix Phi = eval_phi_rows(model.feature_map, X);
        G.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
        left -= take;
    }
    G = G.selfadjointView<Eigen::Lower>();
    G /= static_cast<double>(samples);
    return G;
}

// Monte-Carlo estimate of G from pool sampling (the batch-draw distribution).
inline Matrix estimate_gram(const DataPool& pool, const FeatureMap& fm, long samples,
                            const RngKey& stream,
                            std::optional<std::pair<long, long>> shard = std::nullopt) {
    if (samples < 1) throw ConfigError("estimate_gram: need at least one sample");
    const long lo = shard ? shard->first : 0;
    const long hi = shard ? shard->second : pool.rows();
    if (lo < 0 || hi > pool.rows() || lo >= hi) throw DataError("estimate_gram: invalid row range");
    Rng rng(stream);
    const int M = fm.M;
    Matrix G = Matrix::Zero(M, M);
    for (long s = 0; s < samples; ++s) {
        const long row = lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo)));
        Vector phi = eval_phi(fm, pool.inputs.row(row).transpose());
        G.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    }
    G = G.selfadjointView<Eigen::Lower>();
    G /= static_cast<double>(samples);
    return G;
}

// Exact average of phi phi^T over the pool rows. Because batches are drawn
// uniformly with replacement, this IS c^{-1} E[H^T H] for pool mode.
inline Matrix pool_gram(const DataPool& pool, const FeatureMap& fm,
                        std::optional<std::pair<long, long>> shard = std::nullopt) {
    const long lo = shard ? shard->first : 0;
    const long hi = shard ? shard->second : pool.rows();
    if (lo < 0 || hi > pool.rows() || lo >= hi) throw DataError("pool_gram: invalid row range");
    const int M = fm.M;
    Matrix G = Matrix::Zero(M, M);
    constexpr long kChunk = 4096;
    for (long start = lo; start < hi; start += kChunk) {
        const long take = std::min(kChunk, hi - start);
        Matrix Phi = eval_phi_rows(fm, pool.inputs.middleRows(start, take));
        G.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
    }
    G = G.selfadjointView<Eigen::Lower>();
    G /= static_cast<double>(hi - lo);
    return G;
}

// Closed-form G under the synthetic samplers, via
//   E[cos(w^T x + beta)] = cos(beta) exp(-||w||^2/2)          (standard normal)
//   E[cos(w^T x + beta)] = cos(beta) prod_j sinc(w_j a)       (uniform on [-a,a]^d)
// applied to 2 cos A cos B = cos(A-B) + cos(A+B).
inline Matrix exact_gram(const FeatureMap& fm, InputSampler sampler = InputSampler::StandardNormal,
                         double uniform_halfwidth = 1.0) {
    const int M = fm.M;
    auto mean_cos = [&](const Vector& w) {
        if (sampler == InputSampler::StandardNormal) return std::exp(-0.5 * w.squaredNorm());
        double prod = 1.0;
        for (int j = 0; j < w.size(); ++j) {
            const double z = w(j) * uniform_halfwidth;
            prod *= (z == 0.0) ? 1.0 : std::sin(z) / z;
        }
        return prod;
    };
    Matrix G(M, M);
    for (int p = 0; p < M; ++p) {
        for (int q = 0; q <= p; ++q) {
            const Vector diff = fm.frequencies.row(p) - fm.frequencies.row(q);
            const Vector sum = fm.frequencies.row(p) + fm.frequencies.row(q);
            const double value = std::cos(fm.offsets(p) - fm.offsets(q)) * mean_cos(diff) +
                                 std::cos(fm.offsets(p) + fm.offsets(q)) * mean_cos(sum);
            G(p, q) = value;
            G(q, p) = value;
        }
    }
    return G;
}

inline Matrix exact_gram(const SyntheticModel& model) {
    return exact_gram(model.feature_map, model.sampler, model.uniform_halfwidth);
}

// Numerical rank of a Gram matrix: eigenvalues above tol. Assumption 2's
// local-unobservability condition is reported from this, never assumed.
inline int gram_rank(const Matrix& G, double tol = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(G, Eigen::EigenvaluesOnly);
    return static_cast<int>((solver.eigenvalues().array() > tol).count());
}

}  // namespace dce
