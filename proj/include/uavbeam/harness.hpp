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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavbeam/agents.hpp"
#include "uavbeam/environment.hpp"

namespace uavbeam {

enum class AgentKind { Dqn, Gucb, Exhaustive };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);

/// First TTU after which `window` consecutive training episodes all end in
/// success with length <= max_length.
struct ConvergenceRule {
    std::size_t window = 50;
    std::size_t max_length = 2;
};

struct ExperimentConfig {
    std::string scenario = "ideal-nlos";
    AgentKind agent = AgentKind::Dqn;
    EnvConfig env;
    std::optional<std::size_t> grid_preset; // replaces env.grid when set
    DqnConfig dqn;
    GucbConfig gucb;
    std::vector<std::uint64_t> seeds{1};
    std::size_t episodes = 2000;            // training episodes, warmup excluded
    std::uint64_t reward_cadence_ttu = 50;
    std::size_t rss_cadence_episodes = 1;   // 0 disables the RSS-error series
    ConvergenceRule convergence;
    unsigned jobs = 0;                      // parallel seeds; 0 = hardware concurrency

    void validate() const;
    EnvConfig resolved_env() const;
};

/// Baseline setup: 8x8 ULAs, 72-cell grid, ideal UMa-nLoS with 6 reflection points.
ExperimentConfig default_config();

/// Online scenario over the 32-cell grid: shadow fading, LoS/nLoS mix and
/// AR(1) Rician variation.
ExperimentConfig channel_variation_config();

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep the values from `base`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = default_config());
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = default_config());

/// FNV-1a 64 of the canonical (key-sorted, compact) JSON form, as hex.
/// `jobs` is an execution detail and is excluded.
std::string config_hash(const ExperimentConfig& cfg);
/// Same, restricted to the environment (grid, channel, R_max rule).
std::string scenario_hash(const ExperimentConfig& cfg);

struct SeriesPoint {
    double x = 0.0;
    double y = 0.0;
};

struct MetricSeries {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<SeriesPoint> points;

    /// Appends a point; x must exceed the previous x.
    void push(double x, double y);
};

struct RunMetrics {
    std::optional<std::uint64_t> ttu_to_convergence;
    std::optional<std::uint64_t> training_iterations_to_convergence; // agent steps after warmup
    std::optional<double> iterations_per_cell;
    std::uint64_t warmup_ttu = 0;
    double mean_episode_length_last10 = 0.0;
    double mean_alignment_ttu = 0.0;
    std::optional<double> final_rss_error_db;
    std::optional<double> trailing_rss_error_db; // mean of the last 100 samples
    double optimal_cell_fraction = 0.0;          // greedy action within 1e-9 of the best rate
    std::int64_t accumulated_reward = 0;
    std::size_t episodes = 0;
};

struct RunManifest {
    std::string config_hash;
    std::string scenario_hash;
    std::string scenario;
    std::string agent;
    std::size_t grid_cells = 0;
    std::uint64_t seed = 0;
    std::string software_version;
    std::string started_at;
    std::string finished_at;
    std::uint64_t total_ttu = 0;
    RunMetrics metrics;
    std::vector<std::string> files;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

/// Everything one (config, seed) pair produces.
struct SeedRun {
    RunLog log;
    RunManifest manifest;
    MetricSeries reward_vs_ttu;
    MetricSeries episode_length;
    MetricSeries rss_error;
    MetricSeries loss;
};

std::optional<std::uint64_t> ttu_to_convergence(const RunLog& log, const ConvergenceRule& rule);

/// Runs one seed in memory; nothing is written.
SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs every seed and writes <out_dir>/seed-<n>/ with episodes.csv,
/// reward_vs_ttu.csv, episode_length.csv, rss_error.csv, loss.csv and
/// manifest.json.
std::vector<RunManifest> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Online DQN training on a fading scenario; returns the RSS-error series.
MetricSeries channel_variation_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

void write_series_csv(std::ostream& os, const MetricSeries& s);
void write_episodes_csv(std::ostream& os, const RunLog& log);

struct ComparisonRow {
    std::string agent;
    std::size_t runs = 0;
    std::optional<double> median_ttu_to_convergence;
    double median_episode_length_last10 = 0.0;
    std::optional<double> median_final_rss_error_db;
    std::optional<double> delta_ttu_to_convergence; // relative to the first row
};

struct ComparisonTable {
    std::string scenario_hash;
    std::vector<ComparisonRow> rows;
};

/// Per-agent medians. Throws ConfigError for fewer than two manifests or
/// manifests from different scenarios.
ComparisonTable compare_runs(const std::vector<RunManifest>& manifests);
void write_comparison_csv(std::ostream& os, const ComparisonTable& t);
void print_comparison(std::ostream& os, const ComparisonTable& t);

/// Sets a dotted key of the JSON form (e.g. "dqn.gamma", "grid_preset") to a
/// JSON-parsed value; bare words are taken as strings.
ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Locale-independent shortest round-trip formatting.
std::string format_number(double v);

extern const char* const kSoftwareVersion;

} // namespace uavbeam
