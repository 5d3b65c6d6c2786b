#pragma once

// Shared test fixtures: scratch directories and a surrogate dataset with the
// layout of the UCI appliances-energy CSV (19735 rows, quoted cells, a
// non-numeric date column, 28 numeric feature columns, integer-ish target).
// Feature columns carry a low-rank latent structure so the induced kernel
// geometry is non-degenerate, the way correlated sensor data behaves.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "dce/rng.hpp"

namespace testdata {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("dce_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

inline void write_surrogate_csv(const std::string& path, long rows = 19735,
                                std::uint64_t seed = 2024) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f,
                 "\"date\",\"Appliances\",\"lights\",\"T1\",\"RH_1\",\"T2\",\"RH_2\",\"T3\","
                 "\"RH_3\",\"T4\",\"RH_4\",\"T5\",\"RH_5\",\"T6\",\"RH_6\",\"T7\",\"RH_7\","
                 "\"T8\",\"RH_8\",\"T9\",\"RH_9\",\"T_out\",\"Press_mm_hg\",\"RH_out\","
                 "\"Windspeed\",\"Visibility\",\"Tdewpoint\",\"NSM\",\"rv1\",\"rv2\"\n");
    dce::Rng rng(dce::RngKey(seed).fork(dce::Stream::Surrogate));
    for (long i = 0; i < rows; ++i) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double z3 = rng.normal();
        const double season = std::sin(2.0 * M_PI * (i % 1008) / 1008.0);

        double temps[11];
        for (int j = 0; j < 11; ++j)
            temps[j] = 19.0 + 1.5 * j * 0.1 + 3.0 * z1 + 1.2 * season + 0.5 * rng.normal();
        double hums[10];
        for (int j = 0; j < 10; ++j)
            hums[j] = 40.0 + j * 0.3 + 5.0 * z2 - 1.5 * z1 + 1.0 * rng.normal();
        const double t_out = 7.0 + 5.0 * z1 + 3.0 * season + rng.normal();
        const double press = 755.0 + 4.0 * z3 + rng.normal();
        const double wind = std::max(0.0, 4.0 + 2.0 * z3 + 1.5 * rng.normal());
        const double vis = 38.0 + 8.0 * rng.normal();
        const double lights = 10.0 * std::floor(std::max(0.0, std::min(3.9, 1.2 + z2)));
        const double nsm = static_cast<double>(rng.below(86400));
        const double rv = rng.uniform(0.0, 50.0);

        const double signal = std::sin(1.1 * z1) + 0.6 * z2 + 0.25 * z1 * z2 +
                              0.3 * z3 * z3 + 0.4 * season;
        double appliances = 60.0 + 35.0 * signal + 8.0 * rng.normal();
        appliances = std::max(10.0, 10.0 * std::round(appliances / 10.0));

        // a few deliberately defective rows: missing temperature cell
        const bool bad = (i % 4000) == 1234;

        std::fprintf(f, "\"2016-01-%02ld %02ld:%02ld:00\",\"%g\",\"%g\"", 11 + (i / 144) % 17,
                     (i / 6) % 24, (i % 6) * 10, appliances, lights);
        for (int j = 0; j < 9; ++j) {
            if (bad && j == 2)
                std::fprintf(f, ",\"\",\"%.4g\"", hums[j]);
            else
                std::fprintf(f, ",\"%.4g\",\"%.4g\"", temps[j], hums[j]);
        }
        std::fprintf(f, ",\"%.4g\",\"%.5g\",\"%.4g\",\"%.4g\",\"%.4g\",\"%.4g\",\"%g\",\"%.5g\",\"%.5g\"\n",
                     t_out, press, hums[9], wind, vis, temps[9] - 12.0, nsm, rv, rv);
    }
    std::fclose(f);
}

// Tiny CSV written verbatim.
inline void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

}  // namespace testdata
