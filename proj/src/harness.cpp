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

#include "uavbeam/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "uavbeam/error.hpp"

namespace uavbeam {

const char* const kSoftwareVersion = "uavbeam 0.1.0";

namespace {

using nlohmann::json;

std::string los_mode_name(LosMode m)
{
    switch (m) {
    case LosMode::Los: return "los";
    case LosMode::Nlos: return "nlos";
    case LosMode::Mixed: return "mixed";
    }
    return "nlos";
}

LosMode los_mode_from_name(const std::string& s)
{
    if (s == "los")
        return LosMode::Los;
    if (s == "nlos")
        return LosMode::Nlos;
    if (s == "mixed")
        return LosMode::Mixed;
    throw ConfigError("unknown los_mode '" + s + "' (los, nlos, mixed)");
}

json axis_json(const AxisRange& r) { return json::array({r.min, r.max, r.step}); }

AxisRange axis_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("grid axis must be [min, max, step]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown(const json& given, const json& known, const std::string& path)
{
    if (!given.is_object())
        return;
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!known.contains(it.key()))
            throw ConfigError("unknown config key '" + key + "'");
        if (it.value().is_object() && known[it.key()].is_object())
            reject_unknown(it.value(), known[it.key()], key);
    }
}

ExperimentConfig from_full_json(const json& j)
{
    ExperimentConfig c;
    c.scenario = j.at("scenario").get<std::string>();
    c.agent = agent_kind_from_string(j.at("agent").get<std::string>());
    if (j.contains("grid_preset") && !j["grid_preset"].is_null())
        c.grid_preset = j["grid_preset"].get<std::size_t>();

    const json& g = j.at("grid");
    c.env.grid.x = axis_from_json(g.at("x"));
    c.env.grid.y = axis_from_json(g.at("y"));
    c.env.grid.z_levels = g.at("z_levels").get<std::vector<double>>();
    const auto bs = g.at("bs_position").get<std::vector<double>>();
    if (bs.size() != 3)
        throw ConfigError("grid.bs_position must have 3 coordinates");
    c.env.grid.bs_position = {bs[0], bs[1], bs[2]};

    const json& ch = j.at("channel");
    auto& sc = c.env.channel;
    sc.los_mode = los_mode_from_name(ch.at("los_mode").get<std::string>());
    sc.los_probability = ch.at("los_probability").get<double>();
    sc.reflections = ch.at("reflections").get<std::size_t>();
    sc.shadow_sigma_db = ch.at("shadow_sigma_db").get<double>();
    sc.excess_loss_db = ch.at("excess_loss_db").get<double>();
    sc.fading = ch.at("fading").get<bool>();
    sc.rho = ch.at("rho").get<double>();
    sc.rician_k_db = ch.at("rician_k_db").get<double>();
    sc.tx_array.n_antennas = ch.at("tx_antennas").get<std::size_t>();
    sc.rx_array.n_antennas = ch.at("rx_antennas").get<std::size_t>();
    sc.tx_array.spacing_over_lambda = sc.rx_array.spacing_over_lambda = ch.at("spacing_over_lambda").get<double>();

    const json& link = j.at("link");
    sc.budget.tx_power_dbm = link.at("tx_power_dbm").get<double>();
    sc.budget.noise_psd_dbm_hz = link.at("noise_psd_dbm_hz").get<double>();
    sc.budget.bandwidth_hz = link.at("bandwidth_hz").get<double>();
    sc.budget.carrier_hz = link.at("carrier_hz").get<double>();

    const json& e = j.at("environment");
    c.env.rmax_decay = e.at("rmax_decay").get<double>();
    c.env.rate_tolerance = e.at("rate_tolerance").get<double>();

    const json& d = j.at("dqn");
    c.dqn.hidden = d.at("hidden").get<std::vector<std::size_t>>();
    c.dqn.adam.learning_rate = d.at("learning_rate").get<double>();
    c.dqn.adam.beta1 = d.at("beta1").get<double>();
    c.dqn.adam.beta2 = d.at("beta2").get<double>();
    c.dqn.adam.epsilon = d.at("adam_epsilon").get<double>();
    c.dqn.gamma = d.at("gamma").get<double>();
    c.dqn.replay_capacity = d.at("replay_capacity").get<std::size_t>();
    c.dqn.minibatch = d.at("minibatch").get<std::size_t>();
    c.dqn.target_period = d.at("target_period").get<std::size_t>();
    c.dqn.epsilon.start = d.at("epsilon_start").get<double>();
    c.dqn.epsilon.end = d.at("epsilon_end").get<double>();
    c.dqn.epsilon.tau = d.at("epsilon_tau").get<double>();

    c.gucb.exploration = j.at("gucb").at("exploration").get<double>();

    const json& r = j.at("run");
    c.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
    c.episodes = r.at("episodes").get<std::size_t>();
    c.reward_cadence_ttu = r.at("reward_cadence_ttu").get<std::uint64_t>();
    c.rss_cadence_episodes = r.at("rss_cadence_episodes").get<std::size_t>();
    c.convergence.window = r.at("convergence_window").get<std::size_t>();
    c.convergence.max_length = r.at("convergence_max_length").get<std::size_t>();
    c.jobs = r.at("jobs").get<unsigned>();
    c.validate();
    return c;
}

std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key)
{
    if (!j.contains(key) || j[key].is_null())
        return std::nullopt;
    return j[key].get<T>();
}

std::optional<double> median_with_inf(std::vector<double> v)
{
    if (v.empty())
        return std::nullopt;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double m = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    if (!std::isfinite(m))
        return std::nullopt;
    return m;
}

std::function<std::size_t(std::size_t)> record_policy(const BeamEnv& env)
{
    return [&env](std::size_t cell) { return env.record().best_action[cell].value_or(0); };
}

} // namespace

std::string to_string(AgentKind kind)
{
    switch (kind) {
    case AgentKind::Dqn: return "dqn";
    case AgentKind::Gucb: return "gucb";
    case AgentKind::Exhaustive: return "exhaustive";
    }
    return "dqn";
}

AgentKind agent_kind_from_string(const std::string& name)
{
    if (name == "dqn")
        return AgentKind::Dqn;
    if (name == "gucb")
        return AgentKind::Gucb;
    if (name == "exhaustive")
        return AgentKind::Exhaustive;
    throw ConfigError("unknown agent '" + name + "' (dqn, gucb, exhaustive)");
}

void ExperimentConfig::validate() const
{
    resolved_env().validate();
    dqn.validate();
    if (!(gucb.exploration >= 0.0))
        throw ConfigError("gucb.exploration must be nonnegative");
    if (seeds.empty())
        throw ConfigError("run.seeds must list at least one seed");
    if (reward_cadence_ttu == 0)
        throw ConfigError("run.reward_cadence_ttu must be positive");
    if (convergence.window == 0 || convergence.max_length == 0)
        throw ConfigError("run.convergence_window and convergence_max_length must be positive");
}

EnvConfig ExperimentConfig::resolved_env() const
{
    EnvConfig e = env;
    if (grid_preset) {
        const GridConfig preset = GridConfig::preset(*grid_preset);
        e.grid.x = preset.x;
        e.grid.y = preset.y;
        e.grid.z_levels = preset.z_levels;
    }
    return e;
}

ExperimentConfig default_config()
{
    ExperimentConfig c;
    c.dqn.epsilon = {1.0, 0.05, 20.0};
    return c;
}

ExperimentConfig channel_variation_config()
{
    ExperimentConfig c = default_config();
    c.scenario = "channel-variation";
    c.grid_preset = 32;
    c.env.channel.los_mode = LosMode::Mixed;
    c.env.channel.los_probability = 0.5;
    c.env.channel.shadow_sigma_db = 4.0;
    c.env.channel.fading = true;
    c.env.channel.rho = 0.99;
    c.env.channel.rician_k_db = 20.0;
    c.env.rmax_decay = 0.99;
    c.episodes = 20000;
    return c;
}

json to_json(const ExperimentConfig& c)
{
    const auto& sc = c.env.channel;
    json j;
    j["scenario"] = c.scenario;
    j["agent"] = to_string(c.agent);
    j["grid_preset"] = optional_json(c.grid_preset);
    j["grid"] = {{"x", axis_json(c.env.grid.x)},
                 {"y", axis_json(c.env.grid.y)},
                 {"z_levels", c.env.grid.z_levels},
                 {"bs_position", {c.env.grid.bs_position.x(), c.env.grid.bs_position.y(), c.env.grid.bs_position.z()}}};
    j["channel"] = {{"los_mode", los_mode_name(sc.los_mode)},
                    {"los_probability", sc.los_probability},
                    {"reflections", sc.reflections},
                    {"shadow_sigma_db", sc.shadow_sigma_db},
                    {"excess_loss_db", sc.excess_loss_db},
                    {"fading", sc.fading},
                    {"rho", sc.rho},
                    {"rician_k_db", sc.rician_k_db},
                    {"tx_antennas", sc.tx_array.n_antennas},
                    {"rx_antennas", sc.rx_array.n_antennas},
                    {"spacing_over_lambda", sc.tx_array.spacing_over_lambda}};
    j["link"] = {{"tx_power_dbm", sc.budget.tx_power_dbm},
                 {"noise_psd_dbm_hz", sc.budget.noise_psd_dbm_hz},
                 {"bandwidth_hz", sc.budget.bandwidth_hz},
                 {"carrier_hz", sc.budget.carrier_hz}};
    j["environment"] = {{"rmax_decay", c.env.rmax_decay}, {"rate_tolerance", c.env.rate_tolerance}};
    j["dqn"] = {{"hidden", c.dqn.hidden},
                {"learning_rate", c.dqn.adam.learning_rate},
                {"beta1", c.dqn.adam.beta1},
                {"beta2", c.dqn.adam.beta2},
                {"adam_epsilon", c.dqn.adam.epsilon},
                {"gamma", c.dqn.gamma},
                {"replay_capacity", c.dqn.replay_capacity},
                {"minibatch", c.dqn.minibatch},
                {"target_period", c.dqn.target_period},
                {"epsilon_start", c.dqn.epsilon.start},
                {"epsilon_end", c.dqn.epsilon.end},
                {"epsilon_tau", c.dqn.epsilon.tau}};
    j["gucb"] = {{"exploration", c.gucb.exploration}};
    j["run"] = {{"seeds", c.seeds},
                {"episodes", c.episodes},
                {"reward_cadence_ttu", c.reward_cadence_ttu},
                {"rss_cadence_episodes", c.rss_cadence_episodes},
                {"convergence_window", c.convergence.window},
                {"convergence_max_length", c.convergence.max_length},
                {"jobs", c.jobs}};
    return j;
}

ExperimentConfig config_from_json(const json& j, const ExperimentConfig& base)
{
    if (!j.is_object())
        throw ConfigError("config root must be a JSON object");
    json merged = to_json(base);
    reject_unknown(j, merged, "");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_object())
            merged[it.key()].update(it.value());
        else
            merged[it.key()] = it.value();
    }
    try {
        return from_full_json(merged);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, base);
}

std::string config_hash(const ExperimentConfig& cfg)
{
    json j = to_json(cfg);
    j["run"].erase("jobs");
    return fnv1a_hex(j.dump());
}

std::string scenario_hash(const ExperimentConfig& cfg)
{
    const EnvConfig env = cfg.resolved_env();
    ExperimentConfig only_env;
    only_env.env = env;
    json j = to_json(only_env);
    json s = {{"grid", j["grid"]}, {"channel", j["channel"]}, {"link", j["link"]}, {"environment", j["environment"]}};
    return fnv1a_hex(s.dump());
}

void MetricSeries::push(double x, double y)
{
    if (!points.empty() && !(x > points.back().x))
        throw ContractError("MetricSeries '" + name + "': x must be strictly increasing");
    points.push_back({x, y});
}

json to_json(const RunManifest& m)
{
    const auto& r = m.metrics;
    return {{"config_hash", m.config_hash},
            {"scenario_hash", m.scenario_hash},
            {"scenario", m.scenario},
            {"agent", m.agent},
            {"grid_cells", m.grid_cells},
            {"seed", m.seed},
            {"software_version", m.software_version},
            {"started_at", m.started_at},
            {"finished_at", m.finished_at},
            {"total_ttu", m.total_ttu},
            {"files", m.files},
            {"metrics",
             {{"ttu_to_convergence", optional_json(r.ttu_to_convergence)},
              {"training_iterations_to_convergence", optional_json(r.training_iterations_to_convergence)},
              {"iterations_per_cell", optional_json(r.iterations_per_cell)},
              {"warmup_ttu", r.warmup_ttu},
              {"mean_episode_length_last10", r.mean_episode_length_last10},
              {"mean_alignment_ttu", r.mean_alignment_ttu},
              {"final_rss_error_db", optional_json(r.final_rss_error_db)},
              {"trailing_rss_error_db", optional_json(r.trailing_rss_error_db)},
              {"optimal_cell_fraction", r.optimal_cell_fraction},
              {"accumulated_reward", r.accumulated_reward},
              {"episodes", r.episodes}}}};
}

RunManifest manifest_from_json(const json& j)
{
    try {
        RunManifest m;
        m.config_hash = j.at("config_hash").get<std::string>();
        m.scenario_hash = j.at("scenario_hash").get<std::string>();
        m.scenario = j.at("scenario").get<std::string>();
        m.agent = j.at("agent").get<std::string>();
        m.grid_cells = j.at("grid_cells").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.software_version = j.value("software_version", "");
        m.started_at = j.value("started_at", "");
        m.finished_at = j.value("finished_at", "");
        m.total_ttu = j.at("total_ttu").get<std::uint64_t>();
        m.files = j.value("files", std::vector<std::string>{});
        const json& r = j.at("metrics");
        m.metrics.ttu_to_convergence = optional_from<std::uint64_t>(r, "ttu_to_convergence");
        m.metrics.training_iterations_to_convergence =
            optional_from<std::uint64_t>(r, "training_iterations_to_convergence");
        m.metrics.iterations_per_cell = optional_from<double>(r, "iterations_per_cell");
        m.metrics.warmup_ttu = r.at("warmup_ttu").get<std::uint64_t>();
        m.metrics.mean_episode_length_last10 = r.at("mean_episode_length_last10").get<double>();
        m.metrics.mean_alignment_ttu = r.at("mean_alignment_ttu").get<double>();
        m.metrics.final_rss_error_db = optional_from<double>(r, "final_rss_error_db");
        m.metrics.trailing_rss_error_db = optional_from<double>(r, "trailing_rss_error_db");
        m.metrics.optimal_cell_fraction = r.at("optimal_cell_fraction").get<double>();
        m.metrics.accumulated_reward = r.at("accumulated_reward").get<std::int64_t>();
        m.metrics.episodes = r.at("episodes").get<std::size_t>();
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
}

RunManifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open manifest " + path.string());
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest " + path.string() + ": " + e.what());
    }
}

std::optional<std::uint64_t> ttu_to_convergence(const RunLog& log, const ConvergenceRule& rule)
{
    std::uint64_t prev_ttu = 0;
    std::uint64_t start = 0;
    std::size_t run = 0;
    for (const auto& e : log.episodes) {
        if (!e.warmup) {
            if (e.success && e.length <= rule.max_length) {
                if (run == 0)
                    start = prev_ttu;
                if (++run >= rule.window)
                    return start;
            } else {
                run = 0;
            }
        }
        prev_ttu = e.ttu;
    }
    return std::nullopt;
}

SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    SeedRun out;
    out.manifest.started_at = utc_now();

    BeamEnv env(cfg.resolved_env(), derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    const std::size_t n_cells = env.num_cells();

    out.rss_error = {"rss_error", "episode", "rss_error_db", {}};
    std::function<std::size_t(std::size_t)> policy;
    auto sample_rss = [&](const EpisodeRecord& rec) {
        if (cfg.rss_cadence_episodes == 0 || !policy)
            return;
        if ((rec.episode + 1) % cfg.rss_cadence_episodes == 0)
            out.rss_error.push(static_cast<double>(rec.episode + 1), rss_error(env, policy));
    };

    std::optional<DqnAgent> dqn;
    std::optional<GucbAgent> gucb;
    switch (cfg.agent) {
    case AgentKind::Dqn: {
        dqn.emplace(env.encoding_size(), env.num_actions(), cfg.dqn, derive_seed(seed, 3));
        policy = dqn_policy(*dqn, env);
        std::vector<std::size_t> cells(n_cells);
        std::iota(cells.begin(), cells.end(), std::size_t{0});
        out.manifest.metrics.warmup_ttu = run_warmup(*dqn, env, cells, rng, out.log, sample_rss);
        run_training(*dqn, env, cfg.episodes, rng, out.log, sample_rss);
        break;
    }
    case AgentKind::Gucb:
        gucb.emplace(n_cells, env.num_actions(), cfg.gucb);
        policy = gucb_policy(*gucb, env);
        run_gucb(*gucb, env, cfg.episodes, rng, out.log, sample_rss);
        break;
    case AgentKind::Exhaustive:
        policy = record_policy(env);
        run_exhaustive(env, cfg.episodes, rng, out.log, sample_rss);
        break;
    }

    // Series.
    out.reward_vs_ttu = {"reward_vs_ttu", "ttu", "accumulated_reward", {}};
    out.loss = {"loss", "update", "loss", {}};
    std::int64_t acc = 0;
    std::uint64_t next_mark = cfg.reward_cadence_ttu;
    std::size_t updates = 0;
    for (std::size_t i = 0; i < out.log.steps.size(); ++i) {
        const auto& s = out.log.steps[i];
        acc += s.reward;
        if (s.ttu >= next_mark || i + 1 == out.log.steps.size()) {
            out.reward_vs_ttu.push(static_cast<double>(s.ttu), static_cast<double>(acc));
            next_mark = (s.ttu / cfg.reward_cadence_ttu + 1) * cfg.reward_cadence_ttu;
        }
        if (s.loss)
            out.loss.push(static_cast<double>(++updates), *s.loss);
    }
    out.episode_length = {"episode_length", "episode", "length", {}};
    for (const auto& e : out.log.episodes)
        out.episode_length.push(static_cast<double>(e.episode + 1), static_cast<double>(e.length));

    // Accounting invariants.
    std::uint64_t ttu_sum = 0;
    std::int64_t reward_sum = 0;
    for (const auto& e : out.log.episodes) {
        ttu_sum += e.ttu_cost;
        reward_sum += e.reward_sum;
    }
    if (ttu_sum != env.ttu() || reward_sum != acc)
        throw std::logic_error("run_seed: TTU or reward accounting mismatch");

    // Metrics.
    RunMetrics& m = out.manifest.metrics;
    m.accumulated_reward = acc;
    m.episodes = out.log.episodes.size();
    m.ttu_to_convergence = ttu_to_convergence(out.log, cfg.convergence);
    std::vector<const EpisodeRecord*> training;
    for (const auto& e : out.log.episodes)
        if (!e.warmup)
            training.push_back(&e);
    if (m.ttu_to_convergence) {
        std::uint64_t steps = 0;
        for (const auto* e : training) {
            if (e->ttu > *m.ttu_to_convergence)
                break;
            steps += e->length;
        }
        m.training_iterations_to_convergence = steps;
        m.iterations_per_cell = static_cast<double>(steps) / static_cast<double>(n_cells);
    }
    if (!training.empty()) {
        const std::size_t from = training.size() - std::max<std::size_t>(1, training.size() / 10);
        double len = 0.0;
        for (std::size_t i = from; i < training.size(); ++i)
            len += static_cast<double>(training[i]->length);
        m.mean_episode_length_last10 = len / static_cast<double>(training.size() - from);
        double cost = 0.0;
        for (const auto* e : training)
            cost += e->ttu_cost;
        m.mean_alignment_ttu = cost / static_cast<double>(training.size());
    }
    if (!out.rss_error.points.empty()) {
        m.final_rss_error_db = out.rss_error.points.back().y;
        const std::size_t n = std::min<std::size_t>(100, out.rss_error.points.size());
        double s = 0.0;
        for (std::size_t i = out.rss_error.points.size() - n; i < out.rss_error.points.size(); ++i)
            s += out.rss_error.points[i].y;
        m.trailing_rss_error_db = s / static_cast<double>(n);
    }
    std::size_t optimal = 0;
    for (std::size_t c = 0; c < n_cells; ++c)
        if (std::abs(env.rate(c, policy(c)) - env.rate(c, env.best_action(c))) <= 1e-9)
            ++optimal;
    m.optimal_cell_fraction = static_cast<double>(optimal) / static_cast<double>(n_cells);

    RunManifest& man = out.manifest;
    man.config_hash = config_hash(cfg);
    man.scenario_hash = scenario_hash(cfg);
    man.scenario = cfg.scenario;
    man.agent = to_string(cfg.agent);
    man.grid_cells = n_cells;
    man.seed = seed;
    man.software_version = kSoftwareVersion;
    man.total_ttu = env.ttu();
    man.finished_at = utc_now();
    return out;
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_series_csv(std::ostream& os, const MetricSeries& s)
{
    os << s.x_label << ',' << s.y_label << '\n';
    for (const auto& p : s.points)
        os << format_number(p.x) << ',' << format_number(p.y) << '\n';
}

void write_episodes_csv(std::ostream& os, const RunLog& log)
{
    os << "episode,phase,cell,length,reward_sum,success,ttu,ttu_cost,mean_loss,epsilon\n";
    for (const auto& e : log.episodes) {
        os << e.episode << ',' << (e.warmup ? "warmup" : "training") << ',' << e.cell << ',' << e.length << ','
           << e.reward_sum << ',' << (e.success ? 1 : 0) << ',' << e.ttu << ',' << e.ttu_cost << ','
           << format_number(e.mean_loss) << ',' << format_number(e.epsilon) << '\n';
    }
}

std::vector<RunManifest> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir)
{
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    auto run_and_write = [&cfg, &out_dir](std::uint64_t seed) {
        SeedRun r = run_seed(cfg, seed);
        const fs::path dir = out_dir / ("seed-" + std::to_string(seed));
        fs::create_directories(dir);
        auto write = [&](const std::string& name, auto&& fn) {
            std::ofstream f(dir / name, std::ios::binary);
            if (!f)
                throw std::runtime_error("cannot write " + (dir / name).string());
            fn(f);
            if (!f)
                throw std::runtime_error("write failed for " + (dir / name).string());
            r.manifest.files.push_back(name);
        };
        write("episodes.csv", [&](std::ostream& os) { write_episodes_csv(os, r.log); });
        write("reward_vs_ttu.csv", [&](std::ostream& os) { write_series_csv(os, r.reward_vs_ttu); });
        write("episode_length.csv", [&](std::ostream& os) { write_series_csv(os, r.episode_length); });
        write("rss_error.csv", [&](std::ostream& os) { write_series_csv(os, r.rss_error); });
        write("loss.csv", [&](std::ostream& os) { write_series_csv(os, r.loss); });
        std::ofstream mf(dir / "manifest.json");
        mf << to_json(r.manifest).dump(2) << '\n';
        if (!mf)
            throw std::runtime_error("cannot write manifest in " + dir.string());
        return r.manifest;
    };

    unsigned jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
    std::vector<RunManifest> manifests(cfg.seeds.size());
    for (std::size_t begin = 0; begin < cfg.seeds.size(); begin += jobs) {
        const std::size_t end = std::min(cfg.seeds.size(), begin + jobs);
        if (end - begin == 1) {
            manifests[begin] = run_and_write(cfg.seeds[begin]);
            continue;
        }
        std::vector<std::future<RunManifest>> futures;
        for (std::size_t i = begin; i < end; ++i)
            futures.push_back(std::async(std::launch::async, run_and_write, cfg.seeds[i]));
        for (std::size_t i = begin; i < end; ++i)
            manifests[i] = futures[i - begin].get();
    }

    json index = json::array();
    for (const auto& m : manifests)
        index.push_back("seed-" + std::to_string(m.seed) + "/manifest.json");
    std::ofstream idx(out_dir / "manifests.json");
    idx << json{{"config_hash", config_hash(cfg)}, {"config", to_json(cfg)}, {"manifests", index}}.dump(2) << '\n';
    return manifests;
}

MetricSeries channel_variation_scenario(const ExperimentConfig& cfg, std::uint64_t seed)
{
    if (!cfg.env.channel.fading)
        throw ConfigError("channel_variation_scenario: the channel must enable fading");
    if (cfg.agent != AgentKind::Dqn)
        throw ConfigError("channel_variation_scenario: runs the DQN agent only");
    if (cfg.rss_cadence_episodes == 0)
        throw ConfigError("channel_variation_scenario: rss_cadence_episodes must be positive");
    return run_seed(cfg, seed).rss_error;
}

ComparisonTable compare_runs(const std::vector<RunManifest>& manifests)
{
    if (manifests.size() < 2)
        throw ConfigError("compare_runs: need at least two manifests");
    ComparisonTable t;
    t.scenario_hash = manifests.front().scenario_hash;
    for (const auto& m : manifests)
        if (m.scenario_hash != t.scenario_hash)
            throw ConfigError("compare_runs: manifests come from different scenarios (" + t.scenario_hash + " vs " +
                              m.scenario_hash + ", seed " + std::to_string(m.seed) + ")");

    std::vector<std::string> order;
    std::map<std::string, std::vector<const RunManifest*>> by_agent;
    for (const auto& m : manifests) {
        if (!by_agent.count(m.agent))
            order.push_back(m.agent);
        by_agent[m.agent].push_back(&m);
    }
    for (const auto& agent : order) {
        const auto& runs = by_agent[agent];
        ComparisonRow row;
        row.agent = agent;
        row.runs = runs.size();
        std::vector<double> conv, len, rss;
        for (const auto* m : runs) {
            conv.push_back(m->metrics.ttu_to_convergence ? static_cast<double>(*m->metrics.ttu_to_convergence)
                                                         : std::numeric_limits<double>::infinity());
            len.push_back(m->metrics.mean_episode_length_last10);
            if (m->metrics.final_rss_error_db)
                rss.push_back(*m->metrics.final_rss_error_db);
        }
        row.median_ttu_to_convergence = median_with_inf(conv);
        row.median_episode_length_last10 = median_with_inf(len).value_or(0.0);
        row.median_final_rss_error_db = median_with_inf(rss);
        t.rows.push_back(row);
    }
    const auto& base = t.rows.front().median_ttu_to_convergence;
    for (auto& row : t.rows)
        if (base && row.median_ttu_to_convergence)
            row.delta_ttu_to_convergence = *row.median_ttu_to_convergence - *base;
    return t;
}

void write_comparison_csv(std::ostream& os, const ComparisonTable& t)
{
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    os << "agent,runs,median_ttu_to_convergence,delta_ttu_to_convergence,median_episode_length_last10,"
          "median_final_rss_error_db\n";
    for (const auto& r : t.rows)
        os << r.agent << ',' << r.runs << ',' << opt(r.median_ttu_to_convergence) << ','
           << opt(r.delta_ttu_to_convergence) << ',' << format_number(r.median_episode_length_last10) << ','
           << opt(r.median_final_rss_error_db) << '\n';
}

void print_comparison(std::ostream& os, const ComparisonTable& t)
{
    auto opt = [](const std::optional<double>& v, int prec) {
        if (!v)
            return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(prec) << *v;
        return s.str();
    };
    os << "scenario " << t.scenario_hash << '\n';
    os << std::left << std::setw(12) << "agent" << std::right << std::setw(6) << "runs" << std::setw(14)
       << "ttu->conv" << std::setw(12) << "delta" << std::setw(12) << "len(10%)" << std::setw(14) << "rss err dB"
       << '\n';
    for (const auto& r : t.rows)
        os << std::left << std::setw(12) << r.agent << std::right << std::setw(6) << r.runs << std::setw(14)
           << opt(r.median_ttu_to_convergence, 0) << std::setw(12) << opt(r.delta_ttu_to_convergence, 0)
           << std::setw(12) << opt(r.median_episode_length_last10, 3) << std::setw(14)
           << opt(r.median_final_rss_error_db, 3) << '\n';
}

ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value)
{
    json j = to_json(cfg);
    json* node = &j;
    std::string key;
    std::istringstream parts(dotted_key);
    std::vector<std::string> path;
    while (std::getline(parts, key, '.'))
        path.push_back(key);
    if (path.empty())
        throw ConfigError("override: empty key");
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!node->is_object() || !node->contains(path[i]))
            throw ConfigError("override: unknown key '" + dotted_key + "'");
        node = &(*node)[path[i]];
    }
    if (!node->is_object() || !node->contains(path.back()))
        throw ConfigError("override: unknown key '" + dotted_key + "'");
    json v;
    try {
        v = json::parse(value);
    } catch (const json::parse_error&) {
        v = value;
    }
    (*node)[path.back()] = v;
    try {
        return from_full_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("override " + dotted_key + "=" + value + ": " + e.what());
    }
}

} // namespace uavbeam
