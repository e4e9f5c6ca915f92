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

#include "uavbeam/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "uavbeam/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace uavbeam {

namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'B', 'Q', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

void check_sizes(std::span<const std::size_t> sizes)
{
    if (sizes.size() < 2)
        throw ConfigError("MlpParams: need at least input and output sizes");
    for (auto s : sizes)
        if (s == 0)
            throw ConfigError("MlpParams: layer sizes must be positive");
}

template <typename T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw ConfigError("load_checkpoint: truncated stream");
    return v;
}

struct Activations {
    std::vector<Eigen::MatrixXd> pre;  // z_l per layer
    std::vector<Eigen::MatrixXd> post; // a_l, post[0] = input
};

Activations forward_trace(const MlpParams& params, const Eigen::MatrixXd& inputs)
{
    if (static_cast<std::size_t>(inputs.rows()) != params.input_size())
        throw DimensionError("forward: input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                             std::to_string(params.input_size()));
    Activations act;
    act.post.push_back(inputs);
    const std::size_t n = params.layers.size();
    for (std::size_t l = 0; l < n; ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = layer.weights * act.post.back();
        z.colwise() += layer.bias;
        act.pre.push_back(z);
        if (l + 1 < n)
            act.post.push_back(z.cwiseMax(0.0));
        else
            act.post.push_back(std::move(z));
    }
    return act;
}

} // namespace

std::vector<std::size_t> MlpParams::layer_sizes() const
{
    std::vector<std::size_t> s;
    if (layers.empty())
        return s;
    s.push_back(static_cast<std::size_t>(layers.front().weights.cols()));
    for (const auto& l : layers)
        s.push_back(static_cast<std::size_t>(l.weights.rows()));
    return s;
}

std::size_t MlpParams::input_size() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t MlpParams::output_size() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weights.rows());
}

bool MlpParams::same_shape(const MlpParams& other) const { return layer_sizes() == other.layer_sizes(); }

MlpParams MlpParams::zeros(std::span<const std::size_t> sizes)
{
    check_sizes(sizes);
    MlpParams p;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(sizes[i]);
        const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
        p.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    }
    return p;
}

MlpParams MlpParams::kaiming(std::span<const std::size_t> sizes, Rng& rng)
{
    MlpParams p = zeros(sizes);
    for (auto& layer : p.layers) {
        std::normal_distribution<double> n(0.0, std::sqrt(2.0 / static_cast<double>(layer.weights.cols())));
        // Fill row-major so the draw order matches the checkpoint layout.
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = n(rng);
    }
    return p;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input)
{
    return forward_batch(params, input);
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs)
{
    if (static_cast<std::size_t>(inputs.rows()) != params.input_size())
        throw DimensionError("forward: input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                             std::to_string(params.input_size()));
    Eigen::MatrixXd a = inputs;
    const std::size_t n = params.layers.size();
    for (std::size_t l = 0; l < n; ++l) {
        Eigen::MatrixXd z = params.layers[l].weights * a;
        z.colwise() += params.layers[l].bias;
        a = (l + 1 < n) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

LossAndGrad mse_loss_and_grad(const MlpParams& params, const Eigen::VectorXd& input,
                              std::size_t target_index, double target_value)
{
    const std::size_t idx[1] = {target_index};
    const double y[1] = {target_value};
    return mse_loss_and_grad(params, Eigen::MatrixXd(input), idx, y);
}

LossAndGrad mse_loss_and_grad(const MlpParams& params, const Eigen::MatrixXd& inputs,
                              std::span<const std::size_t> target_indices,
                              std::span<const double> target_values)
{
    const auto batch = inputs.cols();
    if (batch == 0 || static_cast<std::size_t>(batch) != target_indices.size() ||
        target_indices.size() != target_values.size())
        throw DimensionError("mse_loss_and_grad: batch, index and target counts differ or are zero");

    const Activations act = forward_trace(params, inputs);
    const Eigen::MatrixXd& q = act.post.back();
    const double inv_b = 1.0 / static_cast<double>(batch);

    LossAndGrad out;
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto k = target_indices[static_cast<std::size_t>(i)];
        if (k >= static_cast<std::size_t>(q.rows()))
            throw DimensionError("mse_loss_and_grad: target index " + std::to_string(k) + " out of range");
        const double err = q(static_cast<Eigen::Index>(k), i) - target_values[static_cast<std::size_t>(i)];
        out.loss += err * err * inv_b;
        delta(static_cast<Eigen::Index>(k), i) = 2.0 * err * inv_b;
    }

    out.grads.layers.resize(params.layers.size());
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        auto& g = out.grads.layers[l];
        g.weights = delta * act.post[l].transpose();
        g.bias = delta.rowwise().sum();
        if (l > 0) {
            delta = params.layers[l].weights.transpose() * delta;
            delta = delta.cwiseProduct((act.pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

void AdamConfig::validate() const
{
    if (!(learning_rate > 0.0))
        throw ConfigError("AdamConfig: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("AdamConfig: betas must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw ConfigError("AdamConfig: epsilon must be positive");
}

AdamState AdamState::init(const MlpParams& params, const AdamConfig& config)
{
    config.validate();
    AdamState s;
    s.config = config;
    const auto sizes = params.layer_sizes();
    s.m = MlpParams::zeros(sizes);
    s.v = MlpParams::zeros(sizes);
    return s;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& opt)
{
    if (!params.same_shape(grads) || !params.same_shape(opt.m))
        throw DimensionError("adam_step: parameter, gradient and optimizer shapes differ");
    ++opt.step;
    const auto& c = opt.config;
    const double t = static_cast<double>(opt.step);
    const double step_size = c.learning_rate / (1.0 - std::pow(c.beta1, t));
    const double v_corr = 1.0 / (1.0 - std::pow(c.beta2, t));

    auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        theta.array() -= step_size * m.array() / ((v.array() * v_corr).sqrt() + c.epsilon);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weights, grads.layers[l].weights, opt.m.layers[l].weights, opt.v.layers[l].weights);
        update(params.layers[l].bias, grads.layers[l].bias, opt.m.layers[l].bias, opt.v.layers[l].bias);
    }
}

void save_checkpoint(std::ostream& os, const MlpParams& params)
{
    const auto sizes = params.layer_sizes();
    os.write(kMagic, sizeof kMagic);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(sizes.size()));
    for (auto s : sizes)
        write_pod(os, static_cast<std::uint64_t>(s));
    for (const auto& layer : params.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                write_pod(os, layer.weights(r, c));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            write_pod(os, layer.bias(r));
    }
    if (!os)
        throw std::runtime_error("save_checkpoint: write failed");
}

MlpParams load_checkpoint(std::istream& is)
{
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ConfigError("load_checkpoint: bad magic");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion)
        throw ConfigError("load_checkpoint: unsupported version " + std::to_string(version));
    const auto n = read_pod<std::uint32_t>(is);
    if (n < 2 || n > 1024)
        throw ConfigError("load_checkpoint: implausible layer count");
    std::vector<std::size_t> sizes(n);
    for (auto& s : sizes)
        s = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
    MlpParams p = MlpParams::zeros(sizes);
    for (auto& layer : p.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = read_pod<double>(is);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            layer.bias(r) = read_pod<double>(is);
    }
    return p;
}

} // namespace uavbeam
