/*
 * Copyright 2026 The roomtune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace roomtune {

/// A precondition of a public operation was not met (dimension mismatch,
/// out-of-range parameter, missing step event, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An observation carried a NaN or infinite value.
class NonFiniteValue : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The room temperature left the sanity band of the thermal model.
class SimulationDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few calibration episodes to estimate percentiles.
class CalibrationInsufficient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ContractError(message);
    }
}

} // namespace roomtune
