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

#include <algorithm>
#include <cmath>

#include "roomtune/errors.hpp"

namespace roomtune {

/// PI gains; the derivative gain of the loop is always zero.
/// kp in valve fraction per degC, ki in valve fraction per (degC * step).
struct PIGains {
    double kp = 0.0;
    double ki = 0.0;

    static constexpr double kd = 0.0;

    void validate() const
    {
        require(std::isfinite(kp) && kp >= 0.0, "kp must be finite and non-negative");
        require(std::isfinite(ki) && ki >= 0.0, "ki must be finite and non-negative");
    }

    bool operator==(const PIGains&) const = default;
};

struct ControllerState {
    double integrator = 0.0;
    double last_output = 0.0;

    bool operator==(const ControllerState&) const = default;
};

/// Integral contribution ki * integrator is kept inside this band.
inline constexpr double integral_min = -1.0;
inline constexpr double integral_max = 2.0;

struct ControlOutput {
    double valve = 0.0;
    ControllerState state;
};

/// Positional PI with output clamped to [0, 1] and conditional integration:
/// the error is not accumulated while the output is saturated in the
/// direction the error would push it.
inline ControlOutput control_step(const PIGains& gains, const ControllerState& state, double setpoint,
                                  double measurement)
{
    const double e = setpoint - measurement;
    double integrator = state.integrator + e;
    const double unsaturated = gains.kp * e + gains.ki * integrator;
    if ((unsaturated > 1.0 && e > 0.0) || (unsaturated < 0.0 && e < 0.0)) integrator = state.integrator;
    if (gains.ki > 0.0) integrator = std::clamp(integrator, integral_min / gains.ki, integral_max / gains.ki);
    const double u = std::clamp(gains.kp * e + gains.ki * integrator, 0.0, 1.0);
    return {u, ControllerState{integrator, u}};
}

inline ControllerState reset(const ControllerState&) { return ControllerState{}; }

} // namespace roomtune
