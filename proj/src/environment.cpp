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

#include "uavbeam/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace uavbeam {

namespace {

std::vector<double> axis_centres(const AxisRange& r, const char* name)
{
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.max < r.min)
        throw ConfigError(std::string("grid: ") + name + " range is empty or not finite");
    if (!(r.step > 0.0) || !std::isfinite(r.step))
        throw ConfigError(std::string("grid: ") + name + " step must be positive");
    const double span = r.max - r.min;
    if (span < r.step)
        return {0.5 * (r.min + r.max)};
    const auto count = static_cast<std::size_t>(std::floor(span / r.step + 1e-9));
    std::vector<double> c(count);
    for (std::size_t i = 0; i < count; ++i)
        c[i] = r.min + r.step * (static_cast<double>(i) + 0.5);
    return c;
}

double normalize(double v, double lo, double hi)
{
    const double half = 0.5 * (hi - lo);
    if (half <= 0.0)
        return 0.0;
    return (v - 0.5 * (hi + lo)) / half;
}

} // namespace

void GridConfig::validate() const
{
    axis_centres(x, "x");
    axis_centres(y, "y");
    if (z_levels.empty())
        throw ConfigError("grid: z_levels is empty");
    for (double z : z_levels)
        if (!std::isfinite(z))
            throw ConfigError("grid: z level is not finite");
    if (!bs_position.allFinite())
        throw ConfigError("grid: BS position is not finite");
}

GridConfig GridConfig::preset(std::size_t n_cells)
{
    GridConfig g;
    switch (n_cells) {
    case 1:
        g.x = {0.0, 20.0, 20.0};
        g.y = {0.0, 20.0, 20.0};
        g.z_levels = {41.5};
        break;
    case 8:
        g.x = g.y = {-20.0, 20.0, 20.0};
        break;
    case 32:
        g.x = g.y = {-40.0, 40.0, 20.0};
        break;
    case 72:
        break;
    default:
        throw ConfigError("grid: no preset for " + std::to_string(n_cells) + " cells (use 1, 8, 32 or 72)");
    }
    return g;
}

Eigen::Vector3d CoverageGrid::normalized(std::size_t cell) const
{
    const Eigen::Vector3d& p = cells.at(cell);
    const auto [zlo, zhi] = std::minmax_element(config.z_levels.begin(), config.z_levels.end());
    return {normalize(p.x(), config.x.min, config.x.max), normalize(p.y(), config.y.min, config.y.max),
            normalize(p.z(), *zlo, *zhi)};
}

CoverageGrid build_grid(const GridConfig& cfg)
{
    cfg.validate();
    const auto xs = axis_centres(cfg.x, "x");
    const auto ys = axis_centres(cfg.y, "y");
    CoverageGrid g;
    g.config = cfg;
    g.nx = xs.size();
    g.ny = ys.size();
    g.nz = cfg.z_levels.size();
    g.cells.reserve(g.nx * g.ny * g.nz);
    for (double z : cfg.z_levels)
        for (double y : ys)
            for (double x : xs)
                g.cells.emplace_back(x, y, z);
    return g;
}

void RateRecord::observe(std::size_t cell, std::size_t action, double rate)
{
    auto& r = best_rate.at(cell);
    if (!r || rate > *r) {
        r = rate;
        best_action[cell] = action;
    }
}

void RateRecord::decay(double factor)
{
    for (auto& r : best_rate)
        if (r)
            *r *= factor;
}

void EnvConfig::validate() const
{
    grid.validate();
    channel.validate();
    if (!(rmax_decay > 0.0 && rmax_decay <= 1.0))
        throw ConfigError("env: rmax_decay must lie in (0, 1]");
    if (!(rate_tolerance >= 0.0))
        throw ConfigError("env: rate_tolerance must be nonnegative");
}

BeamEnv::BeamEnv(EnvConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), channel_rng_(derive_seed(seed, 0xC4A77E1))
{
    cfg_.validate();
    grid_ = build_grid(cfg_.grid);
    tx_cb_ = make_codebook<double>(cfg_.channel.tx_array);
    rx_cb_ = make_codebook<double>(cfg_.channel.rx_array);
    actions_ = {tx_cb_.size(), rx_cb_.size()};
    record_ = RateRecord(grid_.size());

    base_.reserve(grid_.size());
    for (const auto& pos : grid_.cells)
        base_.push_back(realize_channel(pos, cfg_.grid.bs_position, cfg_.channel, channel_rng_));
    current_ = base_;
    if (cfg_.channel.fading) {
        fading_.reserve(base_.size());
        for (const auto& ch : base_)
            fading_.push_back(make_fading_state(ch, cfg_.channel.rho, channel_rng_));
    }
    gains_.resize(grid_.size());
    rates_.resize(grid_.size());
    for (std::size_t c = 0; c < grid_.size(); ++c)
        refresh(c);
}

void BeamEnv::refresh(std::size_t cell)
{
    if (!fading_.empty())
        current_[cell] = apply_fading(base_[cell], fading_[cell]);
    const Eigen::MatrixXcd g = beam_gain_matrix(current_[cell], tx_cb_, rx_cb_);
    Eigen::VectorXd r(static_cast<Eigen::Index>(actions_.size()));
    Eigen::VectorXcd flat(static_cast<Eigen::Index>(actions_.size()));
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        const auto [p, q] = actions_.pair(a);
        const auto gain = g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        flat(static_cast<Eigen::Index>(a)) = gain;
        r(static_cast<Eigen::Index>(a)) = link_quality(gain, cfg_.channel.budget).rate;
    }
    gains_[cell] = std::move(flat);
    rates_[cell] = std::move(r);
}

void BeamEnv::check_cell(std::size_t cell) const
{
    if (cell >= grid_.size())
        throw ContractError("BeamEnv: cell " + std::to_string(cell) + " out of range (" +
                            std::to_string(grid_.size()) + " cells)");
}

bool BeamEnv::reaches(double rate, double reference) const
{
    return rate >= reference - cfg_.rate_tolerance * std::max(1.0, std::abs(reference));
}

void BeamEnv::begin_episode()
{
    if (cfg_.rmax_decay < 1.0)
        record_.decay(cfg_.rmax_decay);
    if (!fading_.empty()) {
        for (std::size_t c = 0; c < fading_.size(); ++c) {
            fading_[c] = step_fading(fading_[c], channel_rng_);
            refresh(c);
        }
    }
}

EnvState BeamEnv::begin(std::size_t cell)
{
    check_cell(cell);
    episode_active_ = true;
    episode_cell_ = cell;
    episode_steps_ = 0;
    return {cell, std::nullopt};
}

StepOutcome BeamEnv::measure(std::size_t cell, std::size_t action)
{
    const double r = rates_[cell](static_cast<Eigen::Index>(action));
    const auto& best = record_.best_rate[cell];
    StepOutcome out;
    out.action = action;
    out.rate = r;
    out.rss_dbm = rss_dbm(gains_[cell](static_cast<Eigen::Index>(action)), cfg_.channel.budget);
    out.reward = (!best || reaches(r, *best)) ? 1 : -1;
    out.next_state = {cell, action};
    out.ttu_cost = 1;
    record_.observe(cell, action, r);
    ++ttu_;
    return out;
}

StepOutcome BeamEnv::reset(std::size_t cell, Rng& rng)
{
    begin(cell);
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, actions_.size() - 1)(rng);
    return measure(cell, a);
}

StepOutcome BeamEnv::step(const EnvState& state, std::size_t action)
{
    if (!episode_active_)
        throw ContractError("BeamEnv::step: no active episode (finished or never started)");
    if (state.cell != episode_cell_)
        throw ContractError("BeamEnv::step: state belongs to cell " + std::to_string(state.cell) +
                            ", active episode is at cell " + std::to_string(episode_cell_));
    if (action >= actions_.size())
        throw ContractError("BeamEnv::step: action " + std::to_string(action) + " out of range");

    StepOutcome out = measure(state.cell, action);
    ++episode_steps_;
    out.terminal = phase_ == EnvPhase::Training && out.reward == 1;
    out.done = out.terminal || episode_steps_ >= actions_.size();
    if (out.done)
        episode_active_ = false;
    return out;
}

SweepResult BeamEnv::exhaustive_sweep(std::size_t cell)
{
    check_cell(cell);
    SweepResult res;
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        const StepOutcome m = measure(cell, a);
        ++res.ttu_cost;
        if (a == 0 || (m.rate > res.best_rate && !reaches(res.best_rate, m.rate))) {
            res.best_action = a;
            res.best_rate = m.rate;
            res.best_rss_dbm = m.rss_dbm;
        }
    }
    return res;
}

double BeamEnv::rate(std::size_t cell, std::size_t action) const
{
    check_cell(cell);
    return rates_[cell](static_cast<Eigen::Index>(action));
}

double BeamEnv::rss(std::size_t cell, std::size_t action) const
{
    check_cell(cell);
    return rss_dbm(gains_[cell](static_cast<Eigen::Index>(action)), cfg_.channel.budget);
}

std::size_t BeamEnv::best_action(std::size_t cell) const
{
    check_cell(cell);
    const auto& r = rates_[cell];
    std::size_t best = 0;
    for (std::size_t a = 1; a < actions_.size(); ++a) {
        const double v = r(static_cast<Eigen::Index>(a));
        const double b = r(static_cast<Eigen::Index>(best));
        if (v > b && !reaches(b, v))
            best = a;
    }
    return best;
}

Eigen::VectorXd BeamEnv::encode(const EnvState& state) const
{
    check_cell(state.cell);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoding_size()));
    x.head<3>() = grid_.normalized(state.cell);
    if (state.last_action)
        x(static_cast<Eigen::Index>(3 + *state.last_action)) = 1.0;
    return x;
}

double rss_error(const BeamEnv& env, const std::function<std::size_t(std::size_t)>& policy)
{
    double total = 0.0;
    for (std::size_t c = 0; c < env.num_cells(); ++c) {
        const double best = env.rss(c, env.best_action(c));
        total += best - env.rss(c, policy(c));
    }
    return total / static_cast<double>(env.num_cells());
}

} // namespace uavbeam
