#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sublinear/lab/driver.hpp"

int main(int argc, char** argv) {
    namespace lab = sublinear::lab;
    CLI::App app{"Finite-difference laboratory for -u'' = a(x) f(u) with indefinite weights"};
    std::string experiment, config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> n, jobs;
    app.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(lab::experiment_names()));
    app.add_option("--config", config_path, "Config file (key = value with [sections])")->required();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Base seed for random starts (overrides run.seed)");
    app.add_option("--n", n, "Mesh intervals (overrides the experiment's mesh size)");
    app.add_option("--jobs", jobs, "Worker threads (overrides run.jobs)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    lab::Config cfg;
    try {
        cfg = lab::Config::load(config_path);
        if (seed) cfg.set("run", "seed", std::to_string(*seed));
        if (jobs) cfg.set("run", "jobs", std::to_string(*jobs));
        if (n) {
            auto key = lab::mesh_size_key(experiment);
            if (!key) throw lab::config_error(experiment + " has no mesh; --n does not apply");
            cfg.set(key->first, key->second, std::to_string(*n));
        }
    } catch (const sublinear::Error& e) {
        std::cerr << "sublinear-lab: " << e.what() << "\n";
        return 2;
    }
    return lab::run_to_directory(experiment, cfg, std::filesystem::path(out_dir));
}
