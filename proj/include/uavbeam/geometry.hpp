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
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "uavbeam/error.hpp"

// Uniform linear array (ULA) math: steering vectors, analog beamforming
// vectors and the discrete beam codebooks used at the UE and the BS.
//
// Index convention: codebook directions are numbered i = 1..N in the math
// (b_i = (i - 1) * pi / N); in every data layout the entry for b_i lives at
// zero-based position i - 1.

namespace uavbeam {

template <typename Scalar>
using ComplexVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

using ComplexVecd = ComplexVec<double>;

struct UlaConfig {
    std::size_t n_antennas = 8;
    double spacing_over_lambda = 0.5; // d / lambda

    void validate() const
    {
        if (n_antennas == 0)
            throw ConfigError("UlaConfig: n_antennas must be positive");
        if (!(spacing_over_lambda > 0.0) || !std::isfinite(spacing_over_lambda))
            throw ConfigError("UlaConfig: spacing_over_lambda must be positive and finite");
    }
};

/// Array response of an N-element ULA to a plane wave at angle theta,
/// [a(theta)]_l = exp(j 2 pi l (d/lambda) sin(theta)) / sqrt(N).
template <typename Scalar = double>
ComplexVec<Scalar> steering_vector(Scalar theta, const UlaConfig& cfg)
{
    cfg.validate();
    if (!std::isfinite(theta))
        throw DomainError("steering_vector: theta must be finite");

    const auto n = static_cast<Eigen::Index>(cfg.n_antennas);
    const Scalar norm = Scalar(1) / std::sqrt(static_cast<Scalar>(n));
    const Scalar phase_step = Scalar(2) * std::numbers::pi_v<Scalar> *
                              static_cast<Scalar>(cfg.spacing_over_lambda) * std::sin(theta);

    ComplexVec<Scalar> a(n);
    for (Eigen::Index l = 0; l < n; ++l)
        a(l) = std::polar(norm, phase_step * static_cast<Scalar>(l));
    return a;
}

/// The N beam directions b_i and their unit-norm beamforming vectors w(b_i).
///
/// Directions span [0, pi). Because sin(b) = sin(pi - b), entries i and N + 2 - i
/// (1-based) carry the same vector; rates measured through them tie and the
/// lower index wins wherever a tie-break is needed.
template <typename Scalar = double>
struct BeamCodebook {
    UlaConfig ula;
    std::vector<Scalar> angles;
    std::vector<ComplexVec<Scalar>> vectors;

    std::size_t size() const { return angles.size(); }
};

template <typename Scalar = double>
BeamCodebook<Scalar> make_codebook(const UlaConfig& cfg)
{
    cfg.validate();
    BeamCodebook<Scalar> cb;
    cb.ula = cfg;
    const std::size_t n = cfg.n_antennas;
    cb.angles.reserve(n);
    cb.vectors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Scalar b = static_cast<Scalar>(i) * std::numbers::pi_v<Scalar> / static_cast<Scalar>(n);
        cb.angles.push_back(b);
        cb.vectors.push_back(steering_vector<Scalar>(b, cfg));
    }
    return cb;
}

/// Hermitian inner product w^H a.
template <typename DerivedW, typename DerivedA>
typename DerivedW::Scalar beamforming_gain(const Eigen::MatrixBase<DerivedW>& w,
                                           const Eigen::MatrixBase<DerivedA>& a)
{
    if (w.size() != a.size() || w.size() == 0)
        throw DimensionError("beamforming_gain: vectors must be nonempty and of equal length (" +
                             std::to_string(w.size()) + " vs " + std::to_string(a.size()) + ")");
    return w.dot(a); // Eigen conjugates the left operand
}

} // namespace uavbeam
