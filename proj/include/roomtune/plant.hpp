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
#include <concepts>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "roomtune/errors.hpp"
#include "roomtune/pid.hpp"
#include "roomtune/trace.hpp"

namespace roomtune {

/// Two-state (room air + wall mass) affine thermal model, one step per
/// `step_seconds`:
///
///   T'  = T + wall_coupling (W - T) + b_d (oat - T)
///           + radiator_ua b_u u max(T_water - T, 0) + solar + occupancy + noise
///   W'  = wall_pole W + (1 - wall_pole) T
///
/// The free-response pole of the room state is 1 - wall_coupling - b_d.
struct PlantParams {
    int step_seconds = 300;
    double b_u = 0.006;
    double b_d = 0.004;
    double wall_coupling = 0.01;
    double wall_pole = 0.998;
    double radiator_ua = 1.0;
    /// Standard deviation of the per-step disturbance, truncated at 3 sigma.
    double noise_sigma = 0.01;
    /// degC per step contributed by 1 W/m^2 of irradiance (CSV weather only).
    double solar_gain_per_wm2 = 2.5e-5;

    double room_pole() const { return 1.0 - wall_coupling - b_d; }
    double heating_gain() const { return b_u * radiator_ua; }
    int steps_per_day() const { return 86400 / step_seconds; }

    void validate() const
    {
        require(step_seconds == 60 || step_seconds == 300, "step_seconds must be 60 or 300");
        require(b_u > 0.0 && b_d > 0.0 && radiator_ua > 0.0, "plant gains must be positive");
        require(wall_coupling >= 0.0 && wall_coupling < 1.0, "wall_coupling must be in [0, 1)");
        require(wall_pole > 0.0 && wall_pole < 1.0, "wall_pole must be in (0, 1)");
        const double a = room_pole();
        require(a > 0.0 && a < 1.0, "room pole must be in (0, 1)");
        require(noise_sigma >= 0.0, "noise_sigma must be non-negative");
    }
};

/// Piecewise-linear heating curve mapping outside air temperature to supply
/// water temperature.
struct WeatherCompensation {
    std::vector<std::pair<double, double>> breakpoints{{-10.0, 70.0}, {-3.0, 60.0}, {20.0, 35.0}};

    void validate() const
    {
        require(!breakpoints.empty(), "heating curve needs at least one breakpoint");
        for (std::size_t i = 1; i < breakpoints.size(); ++i) {
            require(breakpoints[i].first > breakpoints[i - 1].first, "heating curve OAT breakpoints must increase");
            require(breakpoints[i].second <= breakpoints[i - 1].second,
                    "heating curve water temperature must not increase with OAT");
        }
    }
};

inline double heating_curve(const WeatherCompensation& comp, double oat)
{
    const auto& b = comp.breakpoints;
    if (oat <= b.front().first) return b.front().second;
    if (oat >= b.back().first) return b.back().second;
    const auto hi = std::upper_bound(b.begin(), b.end(), oat,
                                     [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto lo = hi - 1;
    if (oat == lo->first) return lo->second;
    const double t = (oat - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

/// Per-step exogenous inputs for one day. Solar and occupancy are already
/// expressed as degC per step.
struct WeatherDay {
    std::vector<double> oat;
    std::vector<double> solar;
    std::vector<double> occupancy;

    std::size_t steps() const { return oat.size(); }

    void validate(std::size_t steps_per_day) const
    {
        require(oat.size() == steps_per_day && solar.size() == steps_per_day && occupancy.size() == steps_per_day,
                "weather day profiles must have one value per step");
        for (std::size_t k = 0; k < steps_per_day; ++k) {
            require(std::isfinite(oat[k]) && std::isfinite(solar[k]) && std::isfinite(occupancy[k]),
                    "weather values must be finite");
        }
    }
};

struct RoomState {
    double t_room = 17.0;
    double t_wall = 17.0;

    bool operator==(const RoomState&) const = default;
};

inline constexpr double room_temperature_min = -20.0;
inline constexpr double room_temperature_max = 50.0;

inline RoomState step(const PlantParams& p, const RoomState& s, double valve, double oat, double water_temp,
                      double solar, double occupancy, double noise)
{
    require(valve >= 0.0 && valve <= 1.0, "valve command must be in [0, 1]");
    const double heat = p.heating_gain() * valve * std::max(water_temp - s.t_room, 0.0);
    RoomState next;
    next.t_room = s.t_room + p.wall_coupling * (s.t_wall - s.t_room) + p.b_d * (oat - s.t_room) + heat + solar
                  + occupancy + noise;
    next.t_wall = p.wall_pole * s.t_wall + (1.0 - p.wall_pole) * s.t_room;
    if (!std::isfinite(next.t_room) || next.t_room < room_temperature_min || next.t_room > room_temperature_max) {
        throw SimulationDiverged("room temperature left [-20, 50] degC: " + std::to_string(next.t_room));
    }
    return next;
}

/// Night setback with a morning step-up.
struct DailySchedule {
    double night_setpoint = 17.0;
    double day_setpoint = 21.0;
    double morning_hour = 6.0;
    double evening_hour = 22.0;

    void validate() const
    {
        require(day_setpoint > night_setpoint, "day setpoint must exceed the night setpoint");
        require(morning_hour >= 0.0 && morning_hour < evening_hour && evening_hour <= 24.0,
                "schedule hours must satisfy 0 <= morning < evening <= 24");
    }

    std::size_t morning_step(int step_seconds) const
    {
        return static_cast<std::size_t>(std::llround(morning_hour * 3600.0 / step_seconds));
    }

    std::size_t evening_step(int step_seconds) const
    {
        return static_cast<std::size_t>(std::llround(evening_hour * 3600.0 / step_seconds));
    }

    double setpoint_at(std::size_t k, int step_seconds) const
    {
        return (k >= morning_step(step_seconds) && k < evening_step(step_seconds)) ? day_setpoint : night_setpoint;
    }
};

inline double truncated_normal(std::mt19937_64& rng, double sigma)
{
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> n01;
    for (;;) {
        const double z = n01(rng);
        if (std::abs(z) <= 3.0) return sigma * z;
    }
}

struct DayOutcome {
    EpisodeTrace trace;
    RoomState final_state;
};

/// Closed-loop rollout of one day. `gains_at(k, trace_so_far)` supplies the
/// gains for step k, which lets an adaptive policy retune during the day.
/// The controller starts from a reset state; the plant state is carried in
/// and out. Disturbances are drawn from `rng` in a fixed order independent
/// of the gains.
template <class GainPolicy>
    requires std::invocable<GainPolicy&, std::size_t, const EpisodeTrace&>
DayOutcome simulate_day(const PlantParams& params, const WeatherCompensation& comp, const WeatherDay& weather,
                        const DailySchedule& schedule, const RoomState& initial, std::mt19937_64& rng,
                        GainPolicy&& gains_at)
{
    const auto n = static_cast<std::size_t>(params.steps_per_day());
    weather.validate(n);
    DayOutcome out;
    EpisodeTrace& tr = out.trace;
    tr.step_seconds = params.step_seconds;
    tr.step_index = schedule.morning_step(params.step_seconds);
    tr.setpoint.reserve(n);
    tr.t_room.reserve(n);
    tr.valve.reserve(n);

    std::vector<double> noise(n);
    for (double& v : noise) v = truncated_normal(rng, params.noise_sigma);

    RoomState s = initial;
    ControllerState ctl{};
    for (std::size_t k = 0; k < n; ++k) {
        const double sp = schedule.setpoint_at(k, params.step_seconds);
        const PIGains g = gains_at(k, static_cast<const EpisodeTrace&>(tr));
        const ControlOutput c = control_step(g, ctl, sp, s.t_room);
        ctl = c.state;
        tr.setpoint.push_back(sp);
        tr.t_room.push_back(s.t_room);
        tr.valve.push_back(c.valve);
        const double water = heating_curve(comp, weather.oat[k]);
        s = step(params, s, c.valve, weather.oat[k], water, weather.solar[k], weather.occupancy[k], noise[k]);
    }
    out.final_state = s;
    return out;
}

inline DayOutcome simulate_day(const PlantParams& params, const WeatherCompensation& comp, const WeatherDay& weather,
                               const DailySchedule& schedule, const RoomState& initial, std::mt19937_64& rng,
                               const PIGains& gains)
{
    return simulate_day(params, comp, weather, schedule, initial, rng,
                        [&gains](std::size_t, const EpisodeTrace&) { return gains; });
}

} // namespace roomtune
