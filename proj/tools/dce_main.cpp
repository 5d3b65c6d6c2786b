// dce: distributed consensus+innovation estimation over a network of agents.
//
// Subcommands:
//   analyze          spectral report + step-size feasibility (JSON)
//   simulate         Monte-Carlo experiment, writes fig1.csv/fig2.csv/spectral.json
//   reproduce-paper  full protocol on a dataset file, adds verdict.json
//   sweep            repeat simulate across values of one config key
//   validate         assumption checks only
//
// Every config field can be overridden with --set key.path=value.

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dce/config.hpp"
#include "dce/errors.hpp"
#include "dce/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    std::string output_file;
    bool allow_divergence = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_outdir) {
    cmd->add_option("config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--set", args.overrides, "override a config field, e.g. --set alpha=0.02")
        ->take_all();
    if (with_outdir)
        cmd->add_option("-o,--output-dir", args.output_dir, "output directory");
}

dce::ExperimentConfig load(const CommonArgs& args) {
    dce::ExperimentConfig cfg = dce::load_config(args.config_path, args.overrides);
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    return cfg;
}

void emit(const dce::Json& j, const std::string& file) {
    if (file.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(file);
        out << j.dump(2) << "\n";
        if (!out) throw dce::IoError("cannot write " + file);
    }
}

int check_failures(const dce::AggregateResult& result, bool allow_divergence) {
    if (result.failures.empty()) return 0;
    std::cerr << dce::Json{{"error", "Diverged"},
                           {"message", std::to_string(result.failures.size()) + " of " +
                                           std::to_string(result.runs_total) +
                                           " runs diverged"},
                           {"failures", dce::failures_to_json(result)}}
                     .dump()
              << "\n";
    return allow_divergence ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed consensus+innovation estimation"};
    app.require_subcommand(1);

    CommonArgs analyze_args, simulate_args, reproduce_args, sweep_args, validate_args;
    std::string reproduce_data;
    std::string sweep_param;
    std::string sweep_values;

    auto* analyze = app.add_subcommand("analyze", "spectral report and alpha feasibility");
    add_common(analyze, analyze_args, false);
    analyze->add_option("--output", analyze_args.output_file, "write JSON here instead of stdout");

    auto* simulate = app.add_subcommand("simulate", "run the Monte-Carlo experiment");
    add_common(simulate, simulate_args, true);
    simulate->add_flag("--allow-divergence", simulate_args.allow_divergence,
                       "exit 0 even if runs diverge");

    auto* reproduce = app.add_subcommand("reproduce-paper", "dataset protocol end to end");
    add_common(reproduce, reproduce_args, true);
    reproduce->add_option("--data", reproduce_data, "dataset CSV (sets data.path)");
    reproduce->add_flag("--allow-divergence", reproduce_args.allow_divergence,
                        "exit 0 even if runs diverge");

    auto* sweep = app.add_subcommand("sweep", "repeat simulate across parameter values");
    add_common(sweep, sweep_args, true);
    sweep->add_option("--param", sweep_param, "config key to sweep (dotted path)")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_flag("--allow-divergence", sweep_args.allow_divergence,
                    "exit 0 even if runs diverge");

    auto* validate_cmd = app.add_subcommand("validate", "assumption checks only");
    add_common(validate_cmd, validate_args, false);
    validate_cmd->add_option("--output", validate_args.output_file,
                             "write JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            emit(dce::run_analyze(load(analyze_args)), analyze_args.output_file);
            return 0;
        }
        if (*simulate) {
            dce::ExperimentConfig cfg = load(simulate_args);
            dce::AggregateResult result = dce::run_simulate(cfg, dce::resolve_output_dir(cfg));
            return check_failures(result, simulate_args.allow_divergence);
        }
        if (*reproduce) {
            if (!reproduce_data.empty())
                reproduce_args.overrides.push_back("data.path=" + reproduce_data);
            dce::ExperimentConfig cfg = load(reproduce_args);
            auto [result, verdict] = dce::run_reproduce_paper(cfg, dce::resolve_output_dir(cfg));
            std::cout << dce::verdict_to_json(verdict).dump(2) << "\n";
            return check_failures(result, reproduce_args.allow_divergence);
        }
        if (*sweep) {
            dce::ExperimentConfig base = load(sweep_args);
            const std::string outdir = dce::resolve_output_dir(base);
            dce::Json summary = dce::Json::array();
            std::vector<std::string> values;
            for (std::size_t pos = 0; pos < sweep_values.size();) {
                const auto comma = sweep_values.find(',', pos);
                values.push_back(sweep_values.substr(
                    pos, comma == std::string::npos ? std::string::npos : comma - pos));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (values.empty()) throw dce::ConfigError("sweep: no values given");
            int exit_code = 0;
            for (const auto& value : values) {
                auto overrides = sweep_args.overrides;
                overrides.push_back(sweep_param + "=" + value);
                const std::string subdir = outdir + "/" + sweep_param + "=" + value;
                dce::Json entry;
                entry["param"] = sweep_param;
                entry["value"] = value;
                entry["output_dir"] = subdir;
                try {
                    dce::ExperimentConfig cfg =
                        dce::load_config(sweep_args.config_path, overrides);
                    cfg.output_dir = subdir;
                    dce::AggregateResult result = dce::run_simulate(cfg, subdir);
                    entry["alpha_in_first_moment_range"] =
                        result.spectral.alpha_in_first_moment_range;
                    entry["alpha_in_second_moment_range"] =
                        result.spectral.alpha_in_second_moment_range;
                    entry["runs_diverged"] = result.failures.size();
                    exit_code =
                        std::max(exit_code, check_failures(result, sweep_args.allow_divergence));
                } catch (const dce::Error& ex) {
                    // one bad value should not kill the rest of the sweep
                    entry["error"] = ex.what();
                    exit_code = std::max(exit_code, 1);
                }
                summary.push_back(entry);
            }
            emit(summary, outdir + "/sweep_summary.json");
            return exit_code;
        }
        if (*validate_cmd) {
            dce::Json j = dce::run_validate(load(validate_args));
            emit(j, validate_args.output_file);
            return j["all_pass"].get<bool>() ? 0 : 4;
        }
    } catch (const dce::ConfigError& ex) {
        std::cerr << dce::Json{{"error", "ConfigError"}, {"message", ex.what()}}.dump() << "\n";
        return 2;
    } catch (const dce::Diverged& ex) {
        std::cerr << dce::Json{{"error", "Diverged"},
                               {"message", ex.what()},
                               {"iteration", ex.iteration}}
                         .dump()
                  << "\n";
        return 3;
    } catch (const dce::Error& ex) {
        std::cerr << dce::Json{{"error", "Error"}, {"message", ex.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << dce::Json{{"error", "Unexpected"}, {"message", ex.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
