#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "uavbeam/neural.hpp"

namespace uavbeam::testing {

// Every parameter, flattened in layer order: weights (column-major), then bias.
inline std::vector<double*> parameter_refs(MlpParams& p)
{
    std::vector<double*> out;
    for (auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.weights.size(); ++i)
            out.push_back(l.weights.data() + i);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            out.push_back(l.bias.data() + i);
    }
    return out;
}

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) of
// the full gradient, central differences with step h.
inline double gradient_relative_error(const MlpParams& params, const Eigen::VectorXd& x, std::size_t target,
                                      double y, double h = 1e-6)
{
    MlpParams analytic = mse_loss_and_grad(params, x, target, y).grads;
    MlpParams probe = params;
    const auto a = parameter_refs(analytic);
    const auto p = parameter_refs(probe);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double keep = *p[k];
        *p[k] = keep + h;
        const double up = mse_loss_and_grad(probe, x, target, y).loss;
        *p[k] = keep - h;
        const double down = mse_loss_and_grad(probe, x, target, y).loss;
        *p[k] = keep;
        const double num = (up - down) / (2 * h);
        diff += (num - *a[k]) * (num - *a[k]);
        na += *a[k] * *a[k];
        nn += num * num;
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nn));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Kaiming weights plus random biases, so instances are generic rather than
// sitting on the ReLU kink (zero biases behind a dead layer give z == 0).
inline MlpParams random_instance(const std::vector<std::size_t>& shape, Rng& rng)
{
    MlpParams p = MlpParams::kaiming(shape, rng);
    std::normal_distribution<double> g(0.0, 0.1);
    for (auto& l : p.layers)
        for (auto& b : l.bias)
            b = g(rng);
    return p;
}

// Smallest |pre-activation| over the hidden layers.
inline double kink_distance(const MlpParams& p, const Eigen::VectorXd& x)
{
    Eigen::VectorXd a = x;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
        const Eigen::VectorXd z = p.layers[l].weights * a + p.layers[l].bias;
        m = std::min(m, z.cwiseAbs().minCoeff());
        a = z.cwiseMax(0.0);
    }
    return m;
}

} // namespace uavbeam::testing
