// SPDX-License-Identifier: Apache-2.0
//
// uavbeam: mmWave UAV-BS beam alignment simulator
// Copyright (C) 2026 The uavbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Command-line front end: run, compare, sweep, config.

#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uavbeam/harness.hpp"

namespace fs = std::filesystem;
using namespace uavbeam;

namespace {

struct RunOptions {
    std::string config;
    std::string scenario;
    std::string agent;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    std::optional<std::size_t> episodes;
    std::optional<std::size_t> grid_size;
    std::optional<unsigned> jobs;
    std::vector<std::string> overrides;
};

fs::path default_out_dir()
{
    if (const char* env = std::getenv("UAVBEAM_OUT_DIR"))
        return env;
    return "out";
}

ExperimentConfig build_config(const RunOptions& o)
{
    ExperimentConfig cfg = default_config();
    if (o.scenario == "channel-variation")
        cfg = channel_variation_config();
    else if (!o.scenario.empty() && o.scenario != "ideal-nlos")
        throw ConfigError("unknown scenario '" + o.scenario + "' (ideal-nlos, channel-variation)");
    if (!o.config.empty())
        cfg = load_config(o.config, cfg);
    if (!o.agent.empty())
        cfg.agent = agent_kind_from_string(o.agent);
    if (!o.seeds.empty())
        cfg.seeds = o.seeds;
    if (o.episodes)
        cfg.episodes = *o.episodes;
    if (o.grid_size)
        cfg.grid_preset = *o.grid_size;
    if (o.jobs)
        cfg.jobs = *o.jobs;
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg = with_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    cmd->add_option("--config", o.config, "JSON config file (keys override the scenario defaults)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--scenario", o.scenario, "ideal-nlos (default) or channel-variation");
    cmd->add_option("--agent", o.agent, "dqn, gucb or exhaustive")
        ->check(CLI::IsMember({"dqn", "gucb", "exhaustive"}));
    cmd->add_option("--seed", o.seeds, "seed(s); repeat or list")->delimiter(',');
    cmd->add_option("--out-dir", o.out_dir, "output directory (default $UAVBEAM_OUT_DIR or ./out)");
    cmd->add_option("--episodes", o.episodes, "training episodes per seed");
    cmd->add_option("--grid-size", o.grid_size, "grid preset: 1, 8, 32 or 72 cells")
        ->check(CLI::IsMember({1, 8, 32, 72}));
    cmd->add_option("--jobs", o.jobs, "seeds run in parallel (0 = all cores)");
    cmd->add_option("--set", o.overrides, "dotted config override, e.g. dqn.gamma=0.8");
}

void print_summary(const std::vector<RunManifest>& ms, const fs::path& out)
{
    for (const auto& m : ms) {
        const auto& r = m.metrics;
        std::cout << "seed " << m.seed << ": " << m.agent << " on " << m.grid_cells << " cells, total " << m.total_ttu
                  << " TTU, convergence "
                  << (r.ttu_to_convergence ? std::to_string(*r.ttu_to_convergence) + " TTU" : std::string("not reached"))
                  << ", optimal cells " << format_number(r.optimal_cell_fraction) << ", last-10% length "
                  << format_number(r.mean_episode_length_last10);
        if (r.trailing_rss_error_db)
            std::cout << ", trailing RSS error " << format_number(*r.trailing_rss_error_db) << " dB";
        std::cout << '\n';
    }
    std::cout << "wrote " << out.string() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"uavbeam: DQN beam alignment for mmWave UAV-BS links"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kSoftwareVersion));

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "train an agent and write metric CSVs plus a manifest per seed");
    add_run_options(run, run_opts);

    std::vector<std::string> manifest_paths;
    std::string compare_csv;
    auto* compare = app.add_subcommand("compare", "tabulate medians across run manifests of one scenario");
    compare->add_option("--manifests", manifest_paths, "manifest.json files or run directories")
        ->required()
        ->expected(2, -1);
    compare->add_option("--csv", compare_csv, "also write the table as CSV");

    RunOptions sweep_opts;
    std::string sweep_param;
    std::vector<std::string> sweep_values;
    auto* sweep = app.add_subcommand("sweep", "repeat a run over values of one config key");
    add_run_options(sweep, sweep_opts);
    sweep->add_option("--param", sweep_param, "dotted config key, e.g. grid_preset or dqn.gamma")->required();
    sweep->add_option("--values", sweep_values, "values to try")->required()->delimiter(',');

    RunOptions show_opts;
    auto* show = app.add_subcommand("config", "print the fully resolved config as JSON");
    add_run_options(show, show_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ExperimentConfig cfg = build_config(run_opts);
            const fs::path out = run_opts.out_dir.empty() ? default_out_dir() : fs::path(run_opts.out_dir);
            print_summary(run_experiment(cfg, out), out);
        } else if (*compare) {
            std::vector<RunManifest> ms;
            for (const auto& p : manifest_paths) {
                fs::path path = p;
                if (fs::is_directory(path)) {
                    bool found = false;
                    for (const auto& entry : fs::recursive_directory_iterator(path))
                        if (entry.path().filename() == "manifest.json") {
                            ms.push_back(load_manifest(entry.path()));
                            found = true;
                        }
                    if (!found)
                        throw ConfigError("no manifest.json under " + path.string());
                } else {
                    ms.push_back(load_manifest(path));
                }
            }
            const ComparisonTable t = compare_runs(ms);
            print_comparison(std::cout, t);
            if (!compare_csv.empty()) {
                std::ofstream f(compare_csv);
                write_comparison_csv(f, t);
            }
        } else if (*show) {
            std::cout << to_json(build_config(show_opts)).dump(2) << '\n';
        } else if (*sweep) {
            const ExperimentConfig base = build_config(sweep_opts);
            const fs::path out = sweep_opts.out_dir.empty() ? default_out_dir() : fs::path(sweep_opts.out_dir);
            for (const auto& v : sweep_values) {
                const ExperimentConfig cfg = with_override(base, sweep_param, v);
                const fs::path dir = out / (sweep_param + "=" + v);
                std::cout << "== " << sweep_param << " = " << v << '\n';
                print_summary(run_experiment(cfg, dir), dir);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "uavbeam: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
