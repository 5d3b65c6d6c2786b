// Drives the built `dce` binary through its subcommands. The binary path
// arrives via the DCE_BIN environment variable (set by CTest).

#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support/testdata.hpp"

namespace {

using nlohmann::json;

struct CmdResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

CmdResult run_cmd(const std::string& cmd) {
    std::array<char, 4096> buf{};
    std::string output;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), got);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string binary() {
    const char* bin = std::getenv("DCE_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

std::string write_config(const testdata::TempDir& dir, const json& j, const std::string& name) {
    const std::string path = dir.file(name);
    testdata::write_text(path, j.dump(2));
    return path;
}

json tiny_synthetic() {
    return json{{"mode", "synthetic"},
                {"topology", {{"kind", "ring"}, {"n", 3}, {"k", 1}}},
                {"M", 1},
                {"d", 1},
                {"c", 1},
                {"alpha", 0.1},
                {"T", 50},
                {"runs", 3},
                {"thin", 10},
                {"master_seed", 21},
                {"sigma_v", 0.3}};
}

}  // namespace

TEST_CASE("analyze prints a feasibility report") {
    testdata::TempDir dir("cli_an");
    const std::string cfg = write_config(dir, tiny_synthetic(), "c.json");
    const CmdResult res = run_cmd(binary() + " analyze " + cfg);
    REQUIRE(res.exit_code == 0);
    const json j = json::parse(res.output);
    REQUIRE(j["alpha_first_moment_max"].get<double>() > 0.0);
    REQUIRE(j.contains("alpha_second_moment_max"));
    REQUIRE(j.contains("rho_Q"));
}

TEST_CASE("config errors exit nonzero with machine-readable JSON") {
    testdata::TempDir dir("cli_err");
    const std::string cfg = write_config(dir, tiny_synthetic(), "c.json");
    const CmdResult res = run_cmd(binary() + " simulate " + cfg + " --set runs=0 -o " +
                                  dir.file("out"));
    REQUIRE(res.exit_code == 2);
    const json j = json::parse(res.output);
    REQUIRE(j["error"] == "ConfigError");

    const CmdResult missing = run_cmd(binary() + " analyze " + dir.file("nope.json"));
    REQUIRE(missing.exit_code != 0);
}

TEST_CASE("simulate writes figure CSVs where asked") {
    testdata::TempDir dir("cli_sim");
    const std::string cfg = write_config(dir, tiny_synthetic(), "c.json");
    const CmdResult res = run_cmd(binary() + " simulate " + cfg + " -o " + dir.file("out"));
    REQUIRE(res.exit_code == 0);
    REQUIRE(std::filesystem::exists(dir.file("out/fig1.csv")));
    REQUIRE(std::filesystem::exists(dir.file("out/fig2.csv")));
    REQUIRE(std::filesystem::exists(dir.file("out/spectral.json")));
}

TEST_CASE("divergence exits 3 unless allowed") {
    testdata::TempDir dir("cli_div");
    json j = tiny_synthetic();
    j["M"] = 2;
    j["c"] = 2;
    j["T"] = 300;
    const std::string probe = write_config(dir, j, "probe.json");
    const CmdResult spectral = run_cmd(binary() + " analyze " + probe);
    REQUIRE(spectral.exit_code == 0);
    const double lam_min_b = json::parse(spectral.output)["lambda_min_B"].get<double>();
    j["alpha"] = 8.0 / lam_min_b;  // every innovation mode past the boundary
    j["consensus_alpha"] = 0.3;
    const std::string cfg = write_config(dir, j, "c.json");
    const CmdResult res = run_cmd(binary() + " simulate " + cfg + " -o " + dir.file("out"));
    REQUIRE(res.exit_code == 3);
    const CmdResult allowed = run_cmd(binary() + " simulate " + cfg +
                                      " --allow-divergence -o " + dir.file("out2"));
    REQUIRE(allowed.exit_code == 0);
}

TEST_CASE("sweep flags values beyond the first-moment range") {
    testdata::TempDir dir("cli_sweep");
    json j = tiny_synthetic();
    j["consensus_alpha"] = 0.2;  // P stays fixed while the innovation gain sweeps
    const std::string cfg = write_config(dir, j, "c.json");
    // alpha_first_moment_max lies in [0.4, 0.67] for this instance; 0.9 exceeds it
    const CmdResult res =
        run_cmd(binary() + " sweep " + cfg + " --param alpha --values 0.05,0.1,0.9" +
                " --allow-divergence -o " + dir.file("out"));
    REQUIRE(res.exit_code == 0);
    std::ifstream in(dir.file("out/sweep_summary.json"));
    const json summary = json::parse(in);
    REQUIRE(summary.size() == 3);
    REQUIRE(summary[0]["alpha_in_first_moment_range"] == true);
    REQUIRE(summary[1]["alpha_in_first_moment_range"] == true);
    REQUIRE(summary[2]["alpha_in_first_moment_range"] == false);
    REQUIRE(std::filesystem::exists(dir.file("out/alpha=0.05/fig1.csv")));
    REQUIRE(std::filesystem::exists(dir.file("out/alpha=0.9/fig2.csv")));
}

TEST_CASE("validate passes on a sound config") {
    testdata::TempDir dir("cli_val");
    const std::string cfg = write_config(dir, tiny_synthetic(), "c.json");
    const CmdResult res = run_cmd(binary() + " validate " + cfg);
    REQUIRE(res.exit_code == 0);
    const json j = json::parse(res.output);
    REQUIRE(j["all_pass"] == true);
}

TEST_CASE("reproduce-paper runs the pool protocol at toy scale") {
    testdata::TempDir dir("cli_rp");
    testdata::write_surrogate_csv(dir.file("energy.csv"), 600, 8);
    json j{{"mode", "pool"},
           {"topology", {{"kind", "ring"}, {"n", 4}, {"k", 1}}},
           {"M", 2},
           {"c", 4},
           {"alpha", 0.01},
           {"T", 40},
           {"runs", 2},
           {"thin", 10},
           {"master_seed", 3},
           {"data", {{"target", "Appliances"}, {"subsample", 400}}}};
    const std::string cfg = write_config(dir, j, "c.json");
    const CmdResult res = run_cmd(binary() + " reproduce-paper " + cfg + " --data " +
                                  dir.file("energy.csv") + " -o " + dir.file("out"));
    REQUIRE(res.exit_code == 0);
    REQUIRE(std::filesystem::exists(dir.file("out/fig1.csv")));
    REQUIRE(std::filesystem::exists(dir.file("out/fig2.csv")));
    REQUIRE(std::filesystem::exists(dir.file("out/spectral.json")));
    REQUIRE(std::filesystem::exists(dir.file("out/verdict.json")));
}
