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

#include "uavbeam/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace uavbeam {

namespace {

double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

void check_length(const ComplexVecd& w, const UlaConfig& ula, const char* what)
{
    if (static_cast<std::size_t>(w.size()) != ula.n_antennas)
        throw DimensionError(std::string("narrowband_gain: ") + what + " has " + std::to_string(w.size()) +
                             " elements, array has " + std::to_string(ula.n_antennas));
}

} // namespace

void LinkBudget::validate() const
{
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
        throw ConfigError("LinkBudget: bandwidth_hz must be positive");
    if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
        throw ConfigError("LinkBudget: carrier_hz must be positive");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_psd_dbm_hz))
        throw ConfigError("LinkBudget: powers must be finite");
}

double LinkBudget::noise_power_dbm() const { return noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz); }

void ScenarioConfig::validate() const
{
    budget.validate();
    tx_array.validate();
    rx_array.validate();
    if (los_mode != LosMode::Los && reflections == 0)
        throw ConfigError("ScenarioConfig: a scenario without LoS needs at least one reflected path");
    if (!(los_probability >= 0.0 && los_probability <= 1.0))
        throw ConfigError("ScenarioConfig: los_probability must lie in [0, 1]");
    if (!(shadow_sigma_db >= 0.0) || !std::isfinite(shadow_sigma_db))
        throw ConfigError("ScenarioConfig: shadow_sigma_db must be nonnegative");
    if (!std::isfinite(excess_loss_db))
        throw ConfigError("ScenarioConfig: excess_loss_db must be finite");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw ConfigError("ScenarioConfig: rho must lie in [0, 1]");
    if (std::isnan(rician_k_db))
        throw ConfigError("ScenarioConfig: rician_k_db is NaN");
}

std::vector<std::complex<double>> FadingState::coefficients() const
{
    std::vector<std::complex<double>> g(diffuse.size());
    for (std::size_t m = 0; m < diffuse.size(); ++m) {
        const double k = k_factor[m];
        if (std::isinf(k)) {
            g[m] = 1.0;
        } else {
            g[m] = std::sqrt(k / (k + 1.0)) + std::sqrt(1.0 / (k + 1.0)) * diffuse[m];
        }
    }
    return g;
}

double pathloss_uma(double d3d_m, double h_ue_m, bool los, const LinkBudget& budget)
{
    if (!(d3d_m > 0.0) || !std::isfinite(d3d_m))
        throw DomainError("pathloss_uma: distance must be positive, got " + std::to_string(d3d_m));
    budget.validate();
    const double fc_term = 20.0 * std::log10(budget.carrier_hz / 1e9);
    const double pl_los = 28.0 + 22.0 * std::log10(d3d_m) + fc_term;
    if (los)
        return pl_los;
    const double pl_nlos = 13.54 + 39.08 * std::log10(d3d_m) + fc_term - 0.6 * (h_ue_m - 1.5);
    return std::max(pl_los, pl_nlos);
}

double direct_path_angle(const Eigen::Vector3d& ue_pos, const Eigen::Vector3d& bs_pos)
{
    const Eigen::Vector3d d = ue_pos - bs_pos;
    return std::atan2(std::abs(d.z()), d.head<2>().norm());
}

ChannelRealization realize_channel(const Eigen::Vector3d& ue_pos, const Eigen::Vector3d& bs_pos,
                                   const ScenarioConfig& scenario, Rng& rng)
{
    scenario.validate();
    const double d3d = (ue_pos - bs_pos).norm();
    if (!(d3d > 0.0))
        throw DomainError("realize_channel: UE and BS positions coincide");

    ChannelRealization ch;
    ch.tx_array = scenario.tx_array;
    ch.rx_array = scenario.rx_array;
    switch (scenario.los_mode) {
    case LosMode::Los: ch.los = true; break;
    case LosMode::Nlos: ch.los = false; break;
    case LosMode::Mixed: ch.los = std::bernoulli_distribution(scenario.los_probability)(rng); break;
    }
    ch.pathloss_db = pathloss_uma(d3d, ue_pos.z(), ch.los, scenario.budget);
    if (scenario.shadow_sigma_db > 0.0)
        ch.shadow_db = std::normal_distribution<double>(0.0, scenario.shadow_sigma_db)(rng);
    if (scenario.fading)
        ch.rician_k_db = scenario.rician_k_db;

    const double amplitude = db_to_amplitude(-(ch.pathloss_db + ch.shadow_db));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);

    ch.paths.reserve(scenario.reflections + 1);
    if (ch.los) {
        const double theta = direct_path_angle(ue_pos, bs_pos);
        ch.paths.push_back({theta, theta, std::polar(amplitude, phase(rng))});
    }
    const double reflected_amplitude = amplitude * db_to_amplitude(-scenario.excess_loss_db);
    for (std::size_t m = 0; m < scenario.reflections; ++m) {
        PathComponent p;
        p.aod = angle(rng);
        p.aoa = angle(rng);
        p.gain = reflected_amplitude * complex_normal(rng);
        ch.paths.push_back(p);
    }
    return ch;
}

std::complex<double> narrowband_gain(const ChannelRealization& ch, const ComplexVecd& w_tx,
                                     const ComplexVecd& w_rx)
{
    check_length(w_tx, ch.tx_array, "w_tx");
    check_length(w_rx, ch.rx_array, "w_rx");
    std::complex<double> g{0.0, 0.0};
    for (const auto& p : ch.paths) {
        const auto rx = beamforming_gain(w_rx, steering_vector(p.aoa, ch.rx_array));
        const auto tx = beamforming_gain(steering_vector(p.aod, ch.tx_array), w_tx);
        g += p.gain * rx * tx;
    }
    return g;
}

Eigen::MatrixXcd beam_gain_matrix(const ChannelRealization& ch, const BeamCodebook<double>& tx,
                                  const BeamCodebook<double>& rx)
{
    const auto n_paths = static_cast<Eigen::Index>(ch.paths.size());
    const auto n_tx = static_cast<Eigen::Index>(tx.size());
    const auto n_rx = static_cast<Eigen::Index>(rx.size());
    if (n_paths == 0)
        return Eigen::MatrixXcd::Zero(n_tx, n_rx);

    Eigen::MatrixXcd t(n_tx, n_paths);
    Eigen::MatrixXcd r(n_rx, n_paths);
    Eigen::VectorXcd beta(n_paths);
    for (Eigen::Index m = 0; m < n_paths; ++m) {
        const auto& p = ch.paths[static_cast<std::size_t>(m)];
        const ComplexVecd a_t = steering_vector(p.aod, ch.tx_array);
        const ComplexVecd a_r = steering_vector(p.aoa, ch.rx_array);
        for (Eigen::Index i = 0; i < n_tx; ++i)
            t(i, m) = beamforming_gain(a_t, tx.vectors[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n_rx; ++j)
            r(j, m) = beamforming_gain(rx.vectors[static_cast<std::size_t>(j)], a_r);
        beta(m) = p.gain;
    }
    return t * beta.asDiagonal() * r.transpose();
}

LinkQuality link_quality(std::complex<double> gain, const LinkBudget& budget)
{
    const double p_over_n = std::pow(10.0, (budget.tx_power_dbm - budget.noise_power_dbm()) / 10.0);
    LinkQuality q;
    q.snr = p_over_n * std::norm(gain);
    q.rate = std::log2(1.0 + q.snr);
    return q;
}

LinkQuality snr_and_rate(const ChannelRealization& ch, const ComplexVecd& w_tx, const ComplexVecd& w_rx,
                         const LinkBudget& budget)
{
    budget.validate();
    return link_quality(narrowband_gain(ch, w_tx, w_rx), budget);
}

double rss_dbm(std::complex<double> gain, const LinkBudget& budget)
{
    const double mag = std::abs(gain);
    if (mag == 0.0)
        return -400.0;
    return std::max(budget.tx_power_dbm + 20.0 * std::log10(mag), -400.0);
}

FadingState make_fading_state(const ChannelRealization& ch, double rho, Rng& rng)
{
    if (!(rho >= 0.0 && rho <= 1.0))
        throw ConfigError("make_fading_state: rho must lie in [0, 1]");
    FadingState s;
    s.rho = rho;
    s.diffuse.reserve(ch.paths.size());
    s.k_factor.reserve(ch.paths.size());
    const double k_lin = ch.rician_k_db ? std::pow(10.0, *ch.rician_k_db / 10.0)
                                        : std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < ch.paths.size(); ++m) {
        s.k_factor.push_back(k_lin);
        s.diffuse.push_back(complex_normal(rng));
    }
    return s;
}

FadingState step_fading(const FadingState& state, Rng& rng)
{
    FadingState next = state;
    const double innovation = std::sqrt(std::max(0.0, 1.0 - state.rho * state.rho));
    for (auto& h : next.diffuse)
        h = state.rho * h + innovation * complex_normal(rng);
    return next;
}

ChannelRealization apply_fading(const ChannelRealization& ch, const FadingState& state)
{
    if (state.diffuse.size() != ch.paths.size())
        throw DimensionError("apply_fading: fading state has " + std::to_string(state.diffuse.size()) +
                             " paths, realization has " + std::to_string(ch.paths.size()));
    ChannelRealization out = ch;
    const auto g = state.coefficients();
    for (std::size_t m = 0; m < out.paths.size(); ++m)
        out.paths[m].gain *= g[m];
    return out;
}

} // namespace uavbeam
