#pragma once

// Experiment configuration: a JSON document with nested tables, loadable
// from file, fully serializable back (lossless round trip), and overridable
// key-by-key with dotted paths (CLI --set).

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dce/errors.hpp"

namespace dce {

using Json = nlohmann::json;

inline constexpr const char* kOutputDirEnv = "DCE_OUTPUT_DIR";

struct TopologySpec {
    std::string kind = "ring";  // "ring" | "edge_list"
    int n = 0;
    int k = 2;         // neighbors per side (ring)
    std::string path;  // edge-list file (edge_list)
};

struct DataConfig {
    std::string path;
    std::string target;
    std::vector<std::string> feature_columns;  // empty: all numeric
    long subsample = 0;                        // 0: keep all rows
    std::uint64_t seed = 0;
    bool partitioned = false;
    std::string delimiter = ",";
};

struct ExperimentConfig {
    std::string mode = "synthetic";  // "synthetic" | "pool"
    TopologySpec topology;
    int M = 0;
    int d = 0;  // synthetic input dimension; pool mode infers from data
    int c = 0;
    double alpha = 0.0;
    std::optional<double> consensus_alpha;  // defaults to alpha (shared-step convention)
    long T = 0;
    long runs = 0;
    long thin = 100;
    std::uint64_t master_seed = 1;

    // synthetic mode
    double sigma_v = 0.0;
    std::optional<std::vector<double>> theta_true;  // explicit; otherwise drawn
    double theta_scale = 1.0;
    std::string input_sampler = "standard_normal";  // | "uniform"
    double uniform_halfwidth = 1.0;

    // pool mode
    DataConfig data;
    double ridge = 0.0;

    long gram_samples = 100000;  // Monte-Carlo G estimation default
    int threads = 0;             // 0: hardware concurrency
    std::optional<bool> keep_run_errors;  // unset: keep when memory allows
    bool export_traces = false;
    std::string output_dir;

    double consensus_alpha_value() const { return consensus_alpha ? *consensus_alpha : alpha; }
};

inline Json config_to_json(const ExperimentConfig& c) {
    Json j;
    j["mode"] = c.mode;
    j["topology"] = {{"kind", c.topology.kind}, {"n", c.topology.n}, {"k", c.topology.k},
                     {"path", c.topology.path}};
    j["M"] = c.M;
    j["d"] = c.d;
    j["c"] = c.c;
    j["alpha"] = c.alpha;
    if (c.consensus_alpha) j["consensus_alpha"] = *c.consensus_alpha;
    j["T"] = c.T;
    j["runs"] = c.runs;
    j["thin"] = c.thin;
    j["master_seed"] = c.master_seed;
    j["sigma_v"] = c.sigma_v;
    if (c.theta_true) j["theta_true"] = *c.theta_true;
    j["theta_scale"] = c.theta_scale;
    j["input_sampler"] = c.input_sampler;
    j["uniform_halfwidth"] = c.uniform_halfwidth;
    j["data"] = {{"path", c.data.path},
                 {"target", c.data.target},
                 {"feature_columns", c.data.feature_columns},
                 {"subsample", c.data.subsample},
                 {"seed", c.data.seed},
                 {"partitioned", c.data.partitioned},
                 {"delimiter", c.data.delimiter}};
    j["ridge"] = c.ridge;
    j["gram_samples"] = c.gram_samples;
    j["threads"] = c.threads;
    if (c.keep_run_errors) j["keep_run_errors"] = *c.keep_run_errors;
    j["export_traces"] = c.export_traces;
    j["output_dir"] = c.output_dir;
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    try {
        c.mode = j.value("mode", c.mode);
        if (j.contains("topology")) {
            const Json& t = j.at("topology");
            c.topology.kind = t.value("kind", c.topology.kind);
            c.topology.n = t.value("n", c.topology.n);
            c.topology.k = t.value("k", c.topology.k);
            c.topology.path = t.value("path", c.topology.path);
        }
        c.M = j.value("M", c.M);
        c.d = j.value("d", c.d);
        c.c = j.value("c", c.c);
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("consensus_alpha") && !j.at("consensus_alpha").is_null())
            c.consensus_alpha = j.at("consensus_alpha").get<double>();
        c.T = j.value("T", c.T);
        c.runs = j.value("runs", c.runs);
        c.thin = j.value("thin", c.thin);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.sigma_v = j.value("sigma_v", c.sigma_v);
        if (j.contains("theta_true") && !j.at("theta_true").is_null())
            c.theta_true = j.at("theta_true").get<std::vector<double>>();
        c.theta_scale = j.value("theta_scale", c.theta_scale);
        c.input_sampler = j.value("input_sampler", c.input_sampler);
        c.uniform_halfwidth = j.value("uniform_halfwidth", c.uniform_halfwidth);
        if (j.contains("data")) {
            const Json& d = j.at("data");
            c.data.path = d.value("path", c.data.path);
            c.data.target = d.value("target", c.data.target);
            c.data.feature_columns =
                d.value("feature_columns", c.data.feature_columns);
            c.data.subsample = d.value("subsample", c.data.subsample);
            c.data.seed = d.value("seed", c.data.seed);
            c.data.partitioned = d.value("partitioned", c.data.partitioned);
            c.data.delimiter = d.value("delimiter", c.data.delimiter);
        }
        c.ridge = j.value("ridge", c.ridge);
        c.gram_samples = j.value("gram_samples", c.gram_samples);
        c.threads = j.value("threads", c.threads);
        if (j.contains("keep_run_errors") && !j.at("keep_run_errors").is_null())
            c.keep_run_errors = j.at("keep_run_errors").get<bool>();
        c.export_traces = j.value("export_traces", c.export_traces);
        c.output_dir = j.value("output_dir", c.output_dir);
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    return c;
}

inline void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (c.mode != "synthetic" && c.mode != "pool") fail("mode must be 'synthetic' or 'pool'");
    if (c.topology.kind != "ring" && c.topology.kind != "edge_list")
        fail("topology.kind must be 'ring' or 'edge_list'");
    if (c.topology.kind == "ring" && c.topology.n < 3) fail("topology.n must be >= 3 for a ring");
    if (c.topology.kind == "edge_list" && c.topology.path.empty()) fail("topology.path missing");
    if (c.M < 1) fail("M must be positive");
    if (c.c < 1) fail("c must be positive");
    if (!(c.alpha > 0.0)) fail("alpha must be positive");
    if (c.consensus_alpha && !(*c.consensus_alpha > 0.0)) fail("consensus_alpha must be positive");
    if (c.T < 1) fail("T must be positive");
    if (c.runs < 1) fail("runs must be positive");
    if (c.thin < 1) fail("thin must be positive");
    if (c.mode == "synthetic") {
        if (c.d < 1) fail("d must be positive in synthetic mode");
        if (c.sigma_v < 0.0) fail("sigma_v must be nonnegative");
        if (c.input_sampler != "standard_normal" && c.input_sampler != "uniform")
            fail("input_sampler must be 'standard_normal' or 'uniform'");
        if (c.theta_true && static_cast<int>(c.theta_true->size()) != c.M)
            fail("theta_true must have length M");
    } else {
        if (c.data.path.empty()) fail("data.path missing in pool mode");
        if (c.data.target.empty()) fail("data.target missing in pool mode");
        if (c.data.subsample < 0) fail("data.subsample must be nonnegative");
        if (c.data.delimiter.size() != 1) fail("data.delimiter must be a single character");
        if (c.ridge < 0.0) fail("ridge must be nonnegative");
    }
    if (c.gram_samples < 1) fail("gram_samples must be positive");
    if (c.threads < 0) fail("threads must be nonnegative");
}

// Apply "a.b.c=value" to a JSON document. The value is parsed as JSON when
// possible (numbers, bools, arrays), otherwise taken as a string.
inline void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    std::string pointer = "/";
    for (char ch : assignment.substr(0, eq)) pointer.push_back(ch == '.' ? '/' : ch);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    try {
        j[Json::json_pointer(pointer)] = value;
    } catch (const Json::exception& ex) {
        throw ConfigError("override '" + assignment + "': " + ex.what());
    }
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("load_config: cannot open " + path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("load_config: " + path + " is not valid JSON");
    for (const auto& ov : overrides) apply_override(j, ov);
    ExperimentConfig cfg = config_from_json(j);
    validate(cfg);
    return cfg;
}

}  // namespace dce
