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
#include <iosfwd>
#include <span>
#include <vector>

#include "uavbeam/random.hpp"

// Fully connected ReLU network with a linear output layer, trained with a
// squared error on one selected output unit and Adam. Everything is float64.

namespace uavbeam {

struct DenseLayer {
    Eigen::MatrixXd weights; // fan_out x fan_in
    Eigen::VectorXd bias;
};

struct MlpParams {
    std::vector<DenseLayer> layers;

    std::vector<std::size_t> layer_sizes() const;
    std::size_t input_size() const;
    std::size_t output_size() const;

    bool same_shape(const MlpParams& other) const;

    /// All weights and biases zero.
    static MlpParams zeros(std::span<const std::size_t> sizes);

    /// Zero biases, weights ~ N(0, 2 / fan_in).
    static MlpParams kaiming(std::span<const std::size_t> sizes, Rng& rng);
};

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input);

/// Column-per-sample batch evaluation.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

struct LossAndGrad {
    double loss = 0.0;
    MlpParams grads;
};

/// (forward(params, input)[target_index] - target_value)^2 and its gradient.
LossAndGrad mse_loss_and_grad(const MlpParams& params, const Eigen::VectorXd& input,
                              std::size_t target_index, double target_value);

/// Mean of the per-sample losses and gradients over a column-per-sample batch.
LossAndGrad mse_loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& inputs,
                              std::span<const std::size_t> target_indices,
                              std::span<const double> target_values);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    AdamConfig config;
    MlpParams m; // first moments
    MlpParams v; // second moments
    std::uint64_t step = 0;

    static AdamState init(const MlpParams& params, const AdamConfig& config);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& opt);

// Checkpoint format (little-endian), see docs/checkpoint-format.md:
//   char[8]  magic "UAVBQNET"
//   u32      version (1)
//   u32      L + 1, the number of layer sizes
//   u64[L+1] layer sizes, input first
//   per layer: f64[out * in] weights row-major, then f64[out] bias
void save_checkpoint(std::ostream& os, const MlpParams& params);
MlpParams load_checkpoint(std::istream& is);

} // namespace uavbeam
