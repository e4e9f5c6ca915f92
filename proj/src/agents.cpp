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

#include "uavbeam/agents.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "uavbeam/error.hpp"

namespace uavbeam {

namespace {

constexpr char kAgentMagic[8] = {'U', 'A', 'V', 'B', 'A', 'G', 'N', 'T'};
constexpr std::uint32_t kAgentVersion = 1;

std::size_t argmax_lowest(const Eigen::VectorXd& v)
{
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best))
            best = i;
    return static_cast<std::size_t>(best);
}

std::size_t uniform_cell(const BeamEnv& env, Rng& rng)
{
    return std::uniform_int_distribution<std::size_t>(0, env.num_cells() - 1)(rng);
}

struct EpisodeAccumulator {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    void add(const std::optional<double>& loss)
    {
        if (loss) {
            loss_sum += *loss;
            ++loss_count;
        }
    }
    double mean() const { return loss_count ? loss_sum / static_cast<double>(loss_count) : std::nan(""); }
};

void finish_episode(RunLog& log, EpisodeRecord rec, const EpisodeHook& hook)
{
    rec.episode = log.episodes.size();
    log.episodes.push_back(rec);
    if (hook)
        hook(log.episodes.back());
}

} // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
{
    if (capacity == 0)
        throw ConfigError("ReplayBuffer: capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t)
{
    if (ring_.size() < capacity_) {
        ring_.push_back(std::move(t));
    } else {
        ring_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const
{
    if (ring_.empty())
        throw ContractError("ReplayBuffer::sample_indices: buffer is empty");
    std::uniform_int_distribution<std::size_t> pick(0, ring_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx)
        i = pick(rng);
    return idx;
}

void EpsilonSchedule::validate() const
{
    if (!(start >= 0.0 && start <= 1.0 && end >= 0.0 && end <= start))
        throw ConfigError("EpsilonSchedule: need 0 <= end <= start <= 1");
    if (!(tau > 0.0))
        throw ConfigError("EpsilonSchedule: tau must be positive");
}

void DqnConfig::validate() const
{
    adam.validate();
    epsilon.validate();
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ConfigError("DqnConfig: gamma must lie in [0, 1)");
    if (replay_capacity == 0 || minibatch == 0 || target_period == 0)
        throw ConfigError("DqnConfig: replay_capacity, minibatch and target_period must be positive");
    for (auto h : hidden)
        if (h == 0)
            throw ConfigError("DqnConfig: hidden layer sizes must be positive");
}

DqnAgent::DqnAgent(std::size_t input_size, std::size_t n_actions, DqnConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), n_actions_(n_actions), replay_(cfg_.replay_capacity)
{
    cfg_.validate();
    std::vector<std::size_t> sizes{input_size};
    sizes.insert(sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    sizes.push_back(n_actions);
    Rng init(derive_seed(seed, 0x1A17));
    primary_ = MlpParams::kaiming(sizes, init);
    target_ = primary_;
    adam_ = AdamState::init(primary_, cfg_.adam);
}

double DqnAgent::epsilon() const
{
    return phase_ == AgentPhase::Warmup ? 1.0 : cfg_.epsilon.at(explore_steps_);
}

Eigen::VectorXd DqnAgent::q_values(const Eigen::VectorXd& state) const { return forward(primary_, state); }

std::size_t DqnAgent::greedy_action(const Eigen::VectorXd& state) const { return argmax_lowest(q_values(state)); }

std::size_t DqnAgent::select_action(const Eigen::VectorXd& state, Rng& rng)
{
    const double eps = epsilon();
    if (phase_ == AgentPhase::Training)
        ++explore_steps_;
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps)
        return std::uniform_int_distribution<std::size_t>(0, n_actions_ - 1)(rng);
    return greedy_action(state);
}

std::optional<double> DqnAgent::train_step(Rng& rng)
{
    const std::size_t b = cfg_.minibatch;
    if (replay_.size() < b)
        return std::nullopt;

    const auto idx = replay_.sample_indices(b, rng);
    const auto in = static_cast<Eigen::Index>(primary_.input_size());
    Eigen::MatrixXd s(in, static_cast<Eigen::Index>(b));
    Eigen::MatrixXd s_next(in, static_cast<Eigen::Index>(b));
    for (std::size_t i = 0; i < b; ++i) {
        s.col(static_cast<Eigen::Index>(i)) = replay_[idx[i]].state;
        s_next.col(static_cast<Eigen::Index>(i)) = replay_[idx[i]].next_state;
    }
    const Eigen::MatrixXd q_next = forward_batch(target_, s_next);

    std::vector<std::size_t> actions(b);
    std::vector<double> targets(b);
    for (std::size_t i = 0; i < b; ++i) {
        const Transition& t = replay_[idx[i]];
        actions[i] = t.action;
        targets[i] = t.done ? t.reward : t.reward + cfg_.gamma * q_next.col(static_cast<Eigen::Index>(i)).maxCoeff();
    }

    const LossAndGrad lg = mse_loss_and_grad(primary_, s, actions, targets);
    adam_step(primary_, lg.grads, adam_);
    ++updates_;
    if (updates_ % cfg_.target_period == 0)
        target_ = primary_;
    return lg.loss;
}

void DqnAgent::save(std::ostream& os) const
{
    os.write(kAgentMagic, sizeof kAgentMagic);
    const std::uint32_t version = kAgentVersion;
    const double eps = epsilon();
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    os.write(reinterpret_cast<const char*>(&eps), sizeof eps);
    os.write(reinterpret_cast<const char*>(&explore_steps_), sizeof explore_steps_);
    os.write(reinterpret_cast<const char*>(&updates_), sizeof updates_);
    save_checkpoint(os, primary_);
    save_checkpoint(os, target_);
}

void DqnAgent::load(std::istream& is)
{
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kAgentMagic, sizeof magic) != 0)
        throw ConfigError("DqnAgent::load: bad magic");
    std::uint32_t version = 0;
    double eps = 0.0;
    std::uint64_t explore = 0;
    std::uint64_t updates = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    is.read(reinterpret_cast<char*>(&eps), sizeof eps);
    is.read(reinterpret_cast<char*>(&explore), sizeof explore);
    is.read(reinterpret_cast<char*>(&updates), sizeof updates);
    if (!is || version != kAgentVersion)
        throw ConfigError("DqnAgent::load: truncated header or unsupported version");
    MlpParams primary = load_checkpoint(is);
    MlpParams target = load_checkpoint(is);
    if (!primary.same_shape(primary_) || !target.same_shape(target_))
        throw DimensionError("DqnAgent::load: checkpoint shape does not match the agent");
    primary_ = std::move(primary);
    target_ = std::move(target);
    explore_steps_ = explore;
    updates_ = updates;
    adam_ = AdamState::init(primary_, cfg_.adam);
}

GucbAgent::GucbAgent(std::size_t n_cells, std::size_t n_actions, GucbConfig cfg)
    : cfg_(cfg), counts_(n_cells, std::vector<std::uint64_t>(n_actions, 0)),
      means_(n_cells, std::vector<double>(n_actions, 0.0)), pulls_(n_cells, 0)
{
    if (n_cells == 0 || n_actions == 0)
        throw ConfigError("GucbAgent: need at least one cell and one arm");
    if (!(cfg.exploration >= 0.0))
        throw ConfigError("GucbAgent: exploration constant must be nonnegative");
}

std::size_t GucbAgent::select(std::size_t cell) const
{
    const auto& n = counts_.at(cell);
    const auto& mu = means_[cell];
    for (std::size_t a = 0; a < n.size(); ++a)
        if (n[a] == 0)
            return a;
    const double log_t = std::log(static_cast<double>(pulls_[cell]));
    std::size_t best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n.size(); ++a) {
        const double index = mu[a] + cfg_.exploration * std::sqrt(log_t / static_cast<double>(n[a]));
        if (index > best_index) {
            best_index = index;
            best = a;
        }
    }
    return best;
}

void GucbAgent::update(std::size_t cell, std::size_t action, int reward)
{
    auto& n = counts_.at(cell).at(action);
    auto& mu = means_[cell][action];
    ++n;
    ++pulls_[cell];
    mu += (static_cast<double>(reward) - mu) / static_cast<double>(n);
}

StepOutcome gucb_select_and_update(GucbAgent& agent, const EnvState& state, BeamEnv& env)
{
    const std::size_t a = agent.select(state.cell);
    StepOutcome out = env.step(state, a);
    agent.update(state.cell, a, out.reward);
    return out;
}

std::uint64_t run_warmup(DqnAgent& agent, BeamEnv& env, std::span<const std::size_t> cells, Rng& rng,
                         RunLog& log, const EpisodeHook& hook)
{
    const std::uint64_t ttu_start = env.ttu();
    env.set_phase(EnvPhase::Warmup);
    agent.set_phase(AgentPhase::Warmup);

    std::vector<std::size_t> order(env.num_actions());
    for (std::size_t cell : cells) {
        env.begin_episode();
        const std::uint64_t ttu_before = env.ttu();
        EnvState state = env.begin(cell);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        EpisodeRecord rec;
        rec.warmup = true;
        rec.cell = cell;
        rec.epsilon = agent.epsilon();
        EpisodeAccumulator acc;
        for (std::size_t a : order) {
            const StepOutcome out = env.step(state, a);
            agent.remember({env.encode(state), a, static_cast<double>(out.reward), env.encode(out.next_state),
                            out.reward == 1});
            const auto loss = agent.train_step(rng);
            acc.add(loss);
            log.steps.push_back({env.ttu(), out.reward, loss});
            rec.reward_sum += out.reward;
            state = out.next_state;
        }
        rec.length = env.episode_length();
        rec.ttu = env.ttu();
        rec.ttu_cost = static_cast<std::uint32_t>(env.ttu() - ttu_before);
        rec.mean_loss = acc.mean();
        finish_episode(log, rec, hook);
    }

    env.set_phase(EnvPhase::Training);
    agent.set_phase(AgentPhase::Training);
    return env.ttu() - ttu_start;
}

void run_training(DqnAgent& agent, BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log,
                  const EpisodeHook& hook)
{
    env.set_phase(EnvPhase::Training);
    agent.set_phase(AgentPhase::Training);
    for (std::size_t e = 0; e < episodes; ++e) {
        env.begin_episode();
        const std::uint64_t ttu_before = env.ttu();
        const std::size_t cell = uniform_cell(env, rng);
        const StepOutcome start = env.reset(cell, rng);
        // The reset measurement is a transition out of (cell, none); it keeps the
        // episode-start state trained, which is where the greedy policy is read.
        agent.remember({env.encode({cell, std::nullopt}), start.action, static_cast<double>(start.reward),
                        env.encode(start.next_state), false});

        EpisodeRecord rec;
        rec.cell = cell;
        rec.epsilon = agent.epsilon();
        EpisodeAccumulator acc;
        EnvState state = start.next_state;
        for (;;) {
            const Eigen::VectorXd s = env.encode(state);
            const std::size_t a = agent.select_action(s, rng);
            const StepOutcome out = env.step(state, a);
            agent.remember({s, a, static_cast<double>(out.reward), env.encode(out.next_state), out.terminal});
            const auto loss = agent.train_step(rng);
            acc.add(loss);
            log.steps.push_back({env.ttu(), out.reward, loss});
            rec.reward_sum += out.reward;
            state = out.next_state;
            if (out.done) {
                rec.success = out.terminal;
                break;
            }
        }
        rec.length = env.episode_length();
        rec.ttu = env.ttu();
        rec.ttu_cost = static_cast<std::uint32_t>(env.ttu() - ttu_before);
        rec.mean_loss = acc.mean();
        finish_episode(log, rec, hook);
    }
}

void run_gucb(GucbAgent& agent, BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log,
              const EpisodeHook& hook)
{
    env.set_phase(EnvPhase::Training);
    for (std::size_t e = 0; e < episodes; ++e) {
        env.begin_episode();
        const std::uint64_t ttu_before = env.ttu();
        const std::size_t cell = uniform_cell(env, rng);
        EnvState state = env.reset(cell, rng).next_state;

        EpisodeRecord rec;
        rec.cell = cell;
        for (;;) {
            const StepOutcome out = gucb_select_and_update(agent, state, env);
            log.steps.push_back({env.ttu(), out.reward, std::nullopt});
            rec.reward_sum += out.reward;
            state = out.next_state;
            if (out.done) {
                rec.success = out.terminal;
                break;
            }
        }
        rec.length = env.episode_length();
        rec.ttu = env.ttu();
        rec.ttu_cost = static_cast<std::uint32_t>(env.ttu() - ttu_before);
        finish_episode(log, rec, hook);
    }
}

void run_exhaustive(BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log, const EpisodeHook& hook)
{
    env.set_phase(EnvPhase::Training);
    for (std::size_t e = 0; e < episodes; ++e) {
        env.begin_episode();
        const std::uint64_t ttu_before = env.ttu();
        const std::size_t cell = uniform_cell(env, rng);
        const SweepResult res = env.exhaustive_sweep(cell);
        log.steps.push_back({env.ttu(), 1, std::nullopt});

        EpisodeRecord rec;
        rec.cell = cell;
        rec.length = res.ttu_cost;
        rec.reward_sum = 1;
        rec.success = true;
        rec.ttu = env.ttu();
        rec.ttu_cost = static_cast<std::uint32_t>(env.ttu() - ttu_before);
        finish_episode(log, rec, hook);
    }
}

std::function<std::size_t(std::size_t)> dqn_policy(const DqnAgent& agent, const BeamEnv& env)
{
    return [&agent, &env](std::size_t cell) { return agent.greedy_action(env.encode({cell, std::nullopt})); };
}

std::function<std::size_t(std::size_t)> gucb_policy(const GucbAgent& agent, const BeamEnv& env)
{
    return [&agent, &env](std::size_t cell) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < env.num_actions(); ++a)
            if (agent.mean(cell, a) > agent.mean(cell, best))
                best = a;
        return best;
    };
}

} // namespace uavbeam
