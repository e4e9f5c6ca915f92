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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "uavbeam/channel.hpp"
#include "uavbeam/geometry.hpp"
#include "uavbeam/random.hpp"

namespace uavbeam {

struct AxisRange {
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;
};

struct GridConfig {
    AxisRange x{-60.0, 60.0, 20.0};
    AxisRange y{-60.0, 60.0, 20.0};
    std::vector<double> z_levels{41.5, 81.5};
    Eigen::Vector3d bs_position{0.0, 0.0, 25.0};

    void validate() const;

    /// Square sub-areas of the default coverage area centred on the BS:
    /// 1 -> one cell, 8 -> 2x2x2, 32 -> 4x4x2, 72 -> 6x6x2 cells of 20 m.
    static GridConfig preset(std::size_t n_cells);
};

/// Cell centres, enumerated row-major over (z, y, x): x varies fastest.
struct CoverageGrid {
    GridConfig config;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;
    std::vector<Eigen::Vector3d> cells;

    std::size_t size() const { return cells.size(); }

    /// Cell centre mapped to [-1, 1]^3 relative to the configured bounds
    /// (0 along an axis with zero extent).
    Eigen::Vector3d normalized(std::size_t cell) const;
};

CoverageGrid build_grid(const GridConfig& cfg);

struct BeamPair {
    std::size_t tx = 0;
    std::size_t rx = 0;
};

/// All (tx, rx) beam pairs; action a = tx * n_rx + rx.
struct ActionSpace {
    std::size_t n_tx = 0;
    std::size_t n_rx = 0;

    std::size_t size() const { return n_tx * n_rx; }
    std::size_t index(BeamPair p) const { return p.tx * n_rx + p.rx; }
    BeamPair pair(std::size_t action) const { return {action / n_rx, action % n_rx}; }
};

struct EnvState {
    std::size_t cell = 0;
    std::optional<std::size_t> last_action; // empty at the very start of an episode
};

struct StepOutcome {
    EnvState next_state;
    std::size_t action = 0;
    int reward = -1;        // +1 or -1, nothing else
    double rate = 0.0;      // bits per channel use
    double rss_dbm = 0.0;
    bool done = false;      // episode over (success or length cap)
    bool terminal = false;  // success: the best known rate was reached in the training phase
    std::uint32_t ttu_cost = 1;
};

/// Best rate observed per cell, R_max, and the action that produced it.
struct RateRecord {
    std::vector<std::optional<double>> best_rate;
    std::vector<std::optional<std::size_t>> best_action;

    explicit RateRecord(std::size_t n_cells = 0) : best_rate(n_cells), best_action(n_cells) {}

    void observe(std::size_t cell, std::size_t action, double rate);
    void decay(double factor);
};

struct SweepResult {
    std::size_t best_action = 0;
    double best_rate = 0.0;
    double best_rss_dbm = 0.0;
    std::uint32_t ttu_cost = 0;
};

enum class EnvPhase { Warmup, Training };

struct EnvConfig {
    GridConfig grid;
    ScenarioConfig channel;
    double rmax_decay = 1.0;       // per-episode discount on R_max; 1 keeps a hard maximum
    double rate_tolerance = 1e-12; // relative; rates this close count as equal

    void validate() const;
};

/// Beam-alignment environment over a coverage grid.
///
/// Every channel measurement (reset, step, each pair of an exhaustive sweep)
/// costs one TTU on the environment counter. The const oracle accessors
/// (rate, rss, best_action) read the simulator's ground truth and cost nothing;
/// they exist for metrics and tests only.
///
/// Not thread-safe; use one instance per worker.
class BeamEnv {
public:
    BeamEnv(EnvConfig cfg, std::uint64_t seed);

    const EnvConfig& config() const { return cfg_; }
    const CoverageGrid& grid() const { return grid_; }
    const ActionSpace& actions() const { return actions_; }
    const BeamCodebook<double>& tx_codebook() const { return tx_cb_; }
    const BeamCodebook<double>& rx_codebook() const { return rx_cb_; }
    std::size_t num_cells() const { return grid_.size(); }
    std::size_t num_actions() const { return actions_.size(); }

    void set_phase(EnvPhase phase) { phase_ = phase; }
    EnvPhase phase() const { return phase_; }

    /// Per-episode bookkeeping: discounts R_max and advances fading, if enabled.
    void begin_episode();

    /// Starts an episode at (cell, none) without any measurement.
    EnvState begin(std::size_t cell);

    /// Starts an episode at `cell` and applies one uniformly random action.
    /// Costs 1 TTU; the measurement feeds R_max but does not count toward the
    /// episode length. The returned next_state carries that action.
    StepOutcome reset(std::size_t cell, Rng& rng);

    StepOutcome step(const EnvState& state, std::size_t action);

    /// Measures every pair of the action space (|A| TTU); lowest index wins ties.
    SweepResult exhaustive_sweep(std::size_t cell);

    bool episode_active() const { return episode_active_; }
    std::size_t episode_length() const { return episode_steps_; }

    const RateRecord& record() const { return record_; }
    std::uint64_t ttu() const { return ttu_; }

    // Ground-truth oracle, no TTU cost.
    double rate(std::size_t cell, std::size_t action) const;
    double rss(std::size_t cell, std::size_t action) const;
    std::size_t best_action(std::size_t cell) const;
    const ChannelRealization& channel(std::size_t cell) const { return current_[cell]; }

    /// Network input for a state: normalized cell position (3 values) followed
    /// by a one-hot of the last action (all zero when there is none).
    Eigen::VectorXd encode(const EnvState& state) const;
    std::size_t encoding_size() const { return 3 + num_actions(); }

    /// True when `rate` reaches `reference` within the configured tolerance.
    bool reaches(double rate, double reference) const;

private:
    void check_cell(std::size_t cell) const;
    void refresh(std::size_t cell);
    StepOutcome measure(std::size_t cell, std::size_t action);

    EnvConfig cfg_;
    CoverageGrid grid_;
    ActionSpace actions_;
    BeamCodebook<double> tx_cb_;
    BeamCodebook<double> rx_cb_;
    Rng channel_rng_;
    std::vector<ChannelRealization> base_;
    std::vector<FadingState> fading_;
    std::vector<ChannelRealization> current_;
    std::vector<Eigen::MatrixXcd> gains_;
    std::vector<Eigen::VectorXd> rates_;
    RateRecord record_;
    EnvPhase phase_ = EnvPhase::Training;
    std::uint64_t ttu_ = 0;
    bool episode_active_ = false;
    std::size_t episode_cell_ = 0;
    std::size_t episode_steps_ = 0;
};

/// Mean over cells of (best RSS - RSS of the policy's action), in dB, on the
/// environment's current channel state.
double rss_error(const BeamEnv& env, const std::function<std::size_t(std::size_t)>& policy);

} // namespace uavbeam
