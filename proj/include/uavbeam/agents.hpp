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

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "uavbeam/environment.hpp"
#include "uavbeam/neural.hpp"
#include "uavbeam/random.hpp"

namespace uavbeam {

struct Transition {
    Eigen::VectorXd state;
    std::size_t action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false; // next_state is terminal
};

/// Fixed-capacity ring of transitions with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return ring_[i]; }

    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> ring_;
};

/// eps(t) = end + (start - end) exp(-t / tau), t counted in training-phase steps.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    double tau = 20.0;

    double at(std::uint64_t step) const { return end + (start - end) * std::exp(-static_cast<double>(step) / tau); }
    void validate() const;
};

struct DqnConfig {
    std::vector<std::size_t> hidden{128, 128};
    AdamConfig adam;
    double gamma = 0.9;
    std::size_t replay_capacity = 50000;
    std::size_t minibatch = 64;
    std::size_t target_period = 200; // gradient updates between target syncs
    EpsilonSchedule epsilon;

    void validate() const;
};

enum class AgentPhase { Warmup, Training };

/// DQN with a primary and a periodically synced target network.
class DqnAgent {
public:
    DqnAgent(std::size_t input_size, std::size_t n_actions, DqnConfig cfg, std::uint64_t seed);

    const DqnConfig& config() const { return cfg_; }
    std::size_t num_actions() const { return n_actions_; }

    void set_phase(AgentPhase phase) { phase_ = phase; }
    AgentPhase phase() const { return phase_; }

    /// Current exploration rate; forced to 1 during warmup.
    double epsilon() const;
    std::uint64_t exploration_steps() const { return explore_steps_; }

    /// Epsilon-greedy choice. In the training phase each call advances the
    /// epsilon schedule by one step.
    std::size_t select_action(const Eigen::VectorXd& state, Rng& rng);

    /// argmax_a Q(state, a) under the primary network, lowest index on ties.
    std::size_t greedy_action(const Eigen::VectorXd& state) const;
    Eigen::VectorXd q_values(const Eigen::VectorXd& state) const;

    void remember(Transition t) { replay_.push(std::move(t)); }

    /// One minibatch update. Returns the loss, or nothing when the buffer holds
    /// fewer transitions than a minibatch.
    std::optional<double> train_step(Rng& rng);

    const ReplayBuffer& replay() const { return replay_; }
    const MlpParams& primary() const { return primary_; }
    const MlpParams& target() const { return target_; }
    const AdamState& optimizer() const { return adam_; }
    std::uint64_t updates() const { return updates_; }

    void save(std::ostream& os) const;
    /// Restores networks and counters; the replay buffer is not part of a checkpoint.
    void load(std::istream& is);

private:
    DqnConfig cfg_;
    std::size_t n_actions_;
    MlpParams primary_;
    MlpParams target_;
    AdamState adam_;
    ReplayBuffer replay_;
    AgentPhase phase_ = AgentPhase::Warmup;
    std::uint64_t explore_steps_ = 0;
    std::uint64_t updates_ = 0;
};

struct GucbConfig {
    double exploration = 1.4142135623730951; // c in mean + c sqrt(ln t / n)
};

/// Independent UCB1 arm table per grid cell.
class GucbAgent {
public:
    GucbAgent(std::size_t n_cells, std::size_t n_actions, GucbConfig cfg = {});

    /// Unplayed arms first (lowest index), then the UCB1 index; lowest index on ties.
    std::size_t select(std::size_t cell) const;
    void update(std::size_t cell, std::size_t action, int reward);

    std::uint64_t pulls(std::size_t cell) const { return pulls_.at(cell); }
    std::uint64_t count(std::size_t cell, std::size_t action) const { return counts_.at(cell).at(action); }
    double mean(std::size_t cell, std::size_t action) const { return means_.at(cell).at(action); }

private:
    GucbConfig cfg_;
    std::vector<std::vector<std::uint64_t>> counts_;
    std::vector<std::vector<double>> means_;
    std::vector<std::uint64_t> pulls_;
};

/// Selects an arm for state.cell, applies it through env.step and feeds the
/// reward back into the arm table.
StepOutcome gucb_select_and_update(GucbAgent& agent, const EnvState& state, BeamEnv& env);

struct StepRecord {
    std::uint64_t ttu = 0; // environment TTU counter after the step
    int reward = 0;
    std::optional<double> loss;
};

struct EpisodeRecord {
    std::size_t episode = 0; // 0-based over the whole run, warmup included
    bool warmup = false;
    std::size_t cell = 0;
    std::size_t length = 0;  // steps after reset
    int reward_sum = 0;
    bool success = false;    // ended on a terminal (+1) step
    std::uint64_t ttu = 0;   // environment TTU counter at episode end
    std::uint32_t ttu_cost = 0;
    double mean_loss = std::nan("");
    double epsilon = 0.0;
};

struct RunLog {
    std::vector<StepRecord> steps;
    std::vector<EpisodeRecord> episodes;
};

using EpisodeHook = std::function<void(const EpisodeRecord&)>;

/// One full-length episode per listed cell, sweeping every action exactly once
/// in random order. All transitions go to the replay buffer and the network
/// trains on every step. Returns the TTU spent.
std::uint64_t run_warmup(DqnAgent& agent, BeamEnv& env, std::span<const std::size_t> cells, Rng& rng,
                         RunLog& log, const EpisodeHook& hook = {});

/// Epsilon-greedy online training over uniformly drawn cells.
void run_training(DqnAgent& agent, BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log,
                  const EpisodeHook& hook = {});

void run_gucb(GucbAgent& agent, BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log,
              const EpisodeHook& hook = {});

/// Each episode aligns one uniformly drawn cell with a full sweep (|A| TTU).
void run_exhaustive(BeamEnv& env, std::size_t episodes, Rng& rng, RunLog& log, const EpisodeHook& hook = {});

/// Greedy DQN action per cell, evaluated at the episode-start state (cell, none).
std::function<std::size_t(std::size_t)> dqn_policy(const DqnAgent& agent, const BeamEnv& env);

/// Greedy arm per cell (highest empirical mean, lowest index on ties).
std::function<std::size_t(std::size_t)> gucb_policy(const GucbAgent& agent, const BeamEnv& env);

} // namespace uavbeam
