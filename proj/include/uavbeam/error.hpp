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

#include <stdexcept>
#include <string>

namespace uavbeam {

/// Invalid or inconsistent configuration value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operand sizes do not match (vector lengths, layer shapes).
struct DimensionError : std::length_error {
    using std::length_error::length_error;
};

/// Argument outside the mathematical domain of a function.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Call sequence violates an object's protocol, e.g. stepping a finished episode.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace uavbeam
