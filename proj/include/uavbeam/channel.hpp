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

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "uavbeam/geometry.hpp"
#include "uavbeam/random.hpp"

namespace uavbeam {

/// Transmit power, thermal noise density, bandwidth and carrier.
/// Noise power is noise_psd_dbm_hz + 10 log10(bandwidth_hz).
struct LinkBudget {
    double tx_power_dbm = 0.0;
    double noise_psd_dbm_hz = -174.0;
    double bandwidth_hz = 100e6;
    double carrier_hz = 30e9;

    void validate() const;
    double noise_power_dbm() const;
};

enum class LosMode { Los, Nlos, Mixed };

/// Per-experiment channel scenario. Large-scale parameters drawn from it stay
/// frozen per grid cell; only the optional fading process evolves in time.
struct ScenarioConfig {
    LosMode los_mode = LosMode::Nlos;
    double los_probability = 0.5; // used by LosMode::Mixed
    std::size_t reflections = 6;  // M reflected paths on top of the optional LoS path
    double shadow_sigma_db = 0.0;
    double excess_loss_db = 10.0; // extra attenuation of every reflected path
    bool fading = false;
    double rho = 0.99;            // AR(1) correlation per fading step
    double rician_k_db = 10.0;    // per-path K-factor of the slow variation
    LinkBudget budget;
    UlaConfig tx_array;           // UE
    UlaConfig rx_array;           // BS

    void validate() const;
};

struct PathComponent {
    double aod = 0.0; // radians, at the UE array
    double aoa = 0.0; // radians, at the BS array
    std::complex<double> gain{0.0, 0.0};
};

/// Frozen multipath state of one UE position. When `los` is set, paths[0] is
/// the direct path.
struct ChannelRealization {
    std::vector<PathComponent> paths;
    bool los = false;
    double pathloss_db = 0.0;
    double shadow_db = 0.0;
    std::optional<double> rician_k_db; // empty when the scenario has no fading
    UlaConfig tx_array;
    UlaConfig rx_array;
};

/// Per-path small-scale fading g_m = sqrt(K/(K+1)) + sqrt(1/(K+1)) h_m, where
/// h_m ~ CN(0, 1) follows h' = rho h + sqrt(1 - rho^2) n. Every g_m has unit
/// mean power. K = +inf gives a purely specular coefficient.
struct FadingState {
    std::vector<std::complex<double>> diffuse;
    std::vector<double> k_factor; // linear
    double rho = 1.0;

    std::vector<std::complex<double>> coefficients() const;
};

struct LinkQuality {
    double snr = 0.0;  // linear
    double rate = 0.0; // bits per channel use
};

/// UMa pathloss with aerial-UE extension, in dB.
///   LoS:  28.0 + 22 log10(d3d) + 20 log10(fc / 1 GHz)
///   nLoS: max(LoS, 13.54 + 39.08 log10(d3d) + 20 log10(fc / 1 GHz) - 0.6 (h_ue - 1.5))
double pathloss_uma(double d3d_m, double h_ue_m, bool los, const LinkBudget& budget);

/// Path angle seen by both vertical ULAs for the direct UE-BS ray: the
/// elevation of the ray above the horizontal plane, in [0, pi/2].
double direct_path_angle(const Eigen::Vector3d& ue_pos, const Eigen::Vector3d& bs_pos);

ChannelRealization realize_channel(const Eigen::Vector3d& ue_pos, const Eigen::Vector3d& bs_pos,
                                   const ScenarioConfig& scenario, Rng& rng);

/// sum_m beta_m (w_rx^H a_R(aoa_m)) (a_T(aod_m)^H w_tx)
std::complex<double> narrowband_gain(const ChannelRealization& ch, const ComplexVecd& w_tx,
                                     const ComplexVecd& w_rx);

/// Gains of every (tx, rx) codebook pair, G(p, q) = narrowband_gain(ch, tx[p], rx[q]).
Eigen::MatrixXcd beam_gain_matrix(const ChannelRealization& ch, const BeamCodebook<double>& tx,
                                  const BeamCodebook<double>& rx);

LinkQuality link_quality(std::complex<double> gain, const LinkBudget& budget);

LinkQuality snr_and_rate(const ChannelRealization& ch, const ComplexVecd& w_tx, const ComplexVecd& w_rx,
                         const LinkBudget& budget);

/// Received power P_tx + 20 log10 |gain|, floored at -400 dBm for a null gain.
double rss_dbm(std::complex<double> gain, const LinkBudget& budget);

/// Stationary initial fading for a realization; every path gets the scenario
/// K-factor (K = +inf when the realization carries none).
FadingState make_fading_state(const ChannelRealization& ch, double rho, Rng& rng);

FadingState step_fading(const FadingState& state, Rng& rng);

/// Realization with every path gain multiplied by its fading coefficient.
ChannelRealization apply_fading(const ChannelRealization& ch, const FadingState& state);

} // namespace uavbeam
