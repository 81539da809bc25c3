#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>

#include <json.hpp>

#include "sublinear/lab/config.hpp"
#include "sublinear/lab/experiments.hpp"
#include "sublinear/lab/output.hpp"

namespace sublinear::lab {

inline std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json manifest(const ExperimentResult& r, const Config& cfg, double wall_seconds,
                               const std::string& started) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        nlohmann::json row = {{"index", i}, {"status", r.rows[i].status}};
        if (!r.rows[i].message.empty()) row["message"] = r.rows[i].message;
        rows.push_back(row);
    }
    return {{"experiment", r.experiment},
            {"version", kVersion},
            {"seed", cfg.text("run", "seed", "0")},
            {"config", config_echo(cfg)},
            {"started_utc", started},
            {"wall_time_seconds", wall_seconds},
            {"rows", rows},
            {"summary", r.summary},
            {"warnings", r.warnings},
            {"violations", r.violations},
            {"exit_code", r.exit_code()}};
}

/// Runs one experiment and writes <out>/<experiment>.csv, <out>/manifest.json
/// and <out>/<experiment>.gp. Returns the process exit code.
inline int run_to_directory(const std::string& experiment, const Config& cfg, const std::filesystem::path& out,
                            std::ostream& log = std::cerr) {
    const std::string started = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult result;
    try {
        result = run_experiment(experiment, cfg);
    } catch (const Error& e) {
        log << "sublinear-lab: " << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError ? 2 : 3;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        std::filesystem::create_directories(out);
        write_text(out / (experiment + ".csv"), result.table.csv());
        write_text(out / "manifest.json", manifest(result, cfg, wall, started).dump(2) + "\n");
        write_text(out / (experiment + ".gp"), gnuplot_script(experiment, result.table, result.plot));
    } catch (const std::exception& e) {
        log << "sublinear-lab: " << e.what() << "\n";
        return 3;
    }
    for (const auto& w : result.warnings) log << "warning: " << w << "\n";
    return result.exit_code();
}

}  // namespace sublinear::lab
