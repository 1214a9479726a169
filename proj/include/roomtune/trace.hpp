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

#include <cstddef>
#include <vector>

namespace roomtune {

/// One day of closed-loop samples. Sample k holds the setpoint, the room
/// temperature measured at the start of step k and the valve command applied
/// during step k.
struct EpisodeTrace {
    std::vector<double> setpoint;
    std::vector<double> t_room;
    std::vector<double> valve;
    int step_seconds = 300;
    /// First sample of the morning setpoint step.
    std::size_t step_index = 0;

    std::size_t size() const { return t_room.size(); }
};

} // namespace roomtune
