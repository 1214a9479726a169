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
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "roomtune/errors.hpp"
#include "roomtune/trace.hpp"

namespace roomtune {

inline constexpr std::size_t cost_count = 4;
inline constexpr std::size_t constraint_count = 3;

/// Rise time, overshoot, valve-move norm and valve norm of one episode.
struct RawCosts {
    double rise_time_s = 0.0;
    double overshoot_c = 0.0;
    double valve_move_l2 = 0.0;
    double valve_l2 = 0.0;

    std::array<double, cost_count> as_array() const { return {rise_time_s, overshoot_c, valve_move_l2, valve_l2}; }

    bool operator==(const RawCosts&) const = default;
};

struct NormalizedCosts {
    std::array<double, cost_count> j{};
    double total = 0.0;

    bool operator==(const NormalizedCosts&) const = default;
};

inline constexpr double day_seconds = 86400.0;

namespace detail {

inline void require_step(const EpisodeTrace& tr)
{
    require(tr.setpoint.size() == tr.t_room.size() && tr.valve.size() == tr.t_room.size(),
            "trace arrays must have equal length");
    require(tr.step_index > 0 && tr.step_index < tr.size(), "trace has no morning step sample");
    require(tr.setpoint[tr.step_index] > tr.setpoint[tr.step_index - 1], "setpoint does not step up at step_index");
}

/// One past the last sample that still carries the stepped-up setpoint.
inline std::size_t step_window_end(const EpisodeTrace& tr)
{
    const double sp = tr.setpoint[tr.step_index];
    std::size_t k = tr.step_index;
    while (k < tr.size() && tr.setpoint[k] == sp) ++k;
    return k;
}

/// Interpolated time (in samples, relative to step_index) at which the
/// trace first reaches `level`, or a negative value if it never does.
inline double first_crossing(const EpisodeTrace& tr, double level, std::size_t end)
{
    const std::size_t s = tr.step_index;
    if (tr.t_room[s] >= level) return 0.0;
    for (std::size_t k = s + 1; k < end; ++k) {
        if (tr.t_room[k] >= level) {
            const double prev = tr.t_room[k - 1];
            const double f = (level - prev) / (tr.t_room[k] - prev);
            return static_cast<double>(k - 1 - s) + f;
        }
    }
    return -1.0;
}

} // namespace detail

/// 10-90 % rise time of the morning step in seconds, measured from the
/// temperature at the step sample to the new setpoint. Capped at one day if
/// the response never reaches 90 %.
inline double rise_time_10_90(const EpisodeTrace& tr)
{
    detail::require_step(tr);
    const double start = tr.t_room[tr.step_index];
    const double amplitude = tr.setpoint[tr.step_index] - start;
    if (amplitude <= 0.0) return 0.0;
    const std::size_t end = tr.size();
    const double t10 = detail::first_crossing(tr, start + 0.1 * amplitude, end);
    const double t90 = detail::first_crossing(tr, start + 0.9 * amplitude, end);
    if (t10 < 0.0 || t90 < 0.0) return day_seconds;
    return std::min(day_seconds, (t90 - t10) * tr.step_seconds);
}

/// Largest excursion above the stepped-up setpoint while it is active.
inline double overshoot(const EpisodeTrace& tr)
{
    detail::require_step(tr);
    const std::size_t end = detail::step_window_end(tr);
    double peak = 0.0;
    for (std::size_t k = tr.step_index; k < end; ++k) peak = std::max(peak, tr.t_room[k] - tr.setpoint[k]);
    return peak;
}

inline double output_derivative_l2(std::span<const double> valve)
{
    require(valve.size() >= 2, "valve-move norm needs at least two samples");
    double s = 0.0;
    for (std::size_t k = 1; k < valve.size(); ++k) {
        const double d = valve[k] - valve[k - 1];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double output_l2(std::span<const double> valve)
{
    require(!valve.empty(), "valve norm needs at least one sample");
    double s = 0.0;
    for (double u : valve) s += u * u;
    return std::sqrt(s);
}

inline double output_derivative_l2(const EpisodeTrace& tr) { return output_derivative_l2(tr.valve); }
inline double output_l2(const EpisodeTrace& tr) { return output_l2(tr.valve); }

inline RawCosts raw_costs(const EpisodeTrace& tr)
{
    return {rise_time_10_90(tr), overshoot(tr), output_derivative_l2(tr), output_l2(tr)};
}

/// Linear interpolation between order statistics at rank p (n - 1).
inline double percentile(std::vector<double> values, double p)
{
    require(!values.empty(), "percentile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "percentile rank must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Per-index scaling, constraint thresholds and cost weights.
struct CostNormalization {
    std::array<double, cost_count> scales{1.0, 1.0, 1.0, 1.0};
    std::array<double, constraint_count> thresholds{1.0, 1.0, 1.0};
    std::array<double, cost_count> weights{0.25, 0.25, 0.25, 0.25};

    void validate() const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < cost_count; ++i) {
            require(scales[i] > 0.0, "cost scales must be positive");
            require(weights[i] > 0.0, "cost weights must be positive");
            sum += weights[i];
        }
        require(std::abs(sum - 1.0) < 1e-9, "cost weights must sum to one");
        for (double c : thresholds) require(c > 0.0, "constraint thresholds must be positive");
    }

    NormalizedCosts normalize(const RawCosts& raw) const
    {
        NormalizedCosts n;
        const auto r = raw.as_array();
        for (std::size_t i = 0; i < cost_count; ++i) n.j[i] = r[i] / scales[i];
        n.total = total_cost(n.j);
        return n;
    }

    double total_cost(const std::array<double, cost_count>& j) const
    {
        double t = 0.0;
        for (std::size_t i = 0; i < cost_count; ++i) t += weights[i] * j[i];
        return t;
    }

    bool violates(const NormalizedCosts& n) const
    {
        for (std::size_t i = 0; i < constraint_count; ++i) {
            if (n.j[i] > thresholds[i]) return true;
        }
        return false;
    }

    bool operator==(const CostNormalization&) const = default;
};

inline double total_cost(const std::array<double, cost_count>& normalized, const std::array<double, cost_count>& weights)
{
    double t = 0.0;
    for (std::size_t i = 0; i < cost_count; ++i) {
        require(weights[i] > 0.0, "cost weights must be positive");
        t += weights[i] * normalized[i];
    }
    return t;
}

/// Floors for the scales so an index that never moves during calibration
/// (e.g. no overshoot at all) does not divide by zero: 1 min, 0.05 degC,
/// 0.01 and 0.01.
inline constexpr std::array<double, cost_count> minimum_scales{60.0, 0.05, 0.01, 0.01};

struct CalibrationPercentiles {
    double scale = 0.95;
    double threshold = 0.975;
    std::size_t minimum_episodes = 40;
    std::array<double, cost_count> scale_floor = minimum_scales;

    bool operator==(const CalibrationPercentiles&) const = default;
};

inline CostNormalization calibrate_normalization(std::span<const RawCosts> calibration,
                                                 const CalibrationPercentiles& pct = {})
{
    if (calibration.size() < pct.minimum_episodes) {
        throw CalibrationInsufficient("normalization needs at least " + std::to_string(pct.minimum_episodes)
                                      + " calibration episodes, got " + std::to_string(calibration.size()));
    }
    CostNormalization norm;
    for (std::size_t i = 0; i < cost_count; ++i) {
        std::vector<double> v;
        v.reserve(calibration.size());
        for (const RawCosts& r : calibration) {
            const double x = r.as_array()[i];
            if (!std::isfinite(x)) throw NonFiniteValue("calibration cost is not finite");
            v.push_back(x);
        }
        norm.scales[i] = std::max(percentile(v, pct.scale), pct.scale_floor[i]);
        if (i < constraint_count) {
            norm.thresholds[i] = std::max(percentile(v, pct.threshold) / norm.scales[i], 1.0);
        }
    }
    return norm;
}

} // namespace roomtune
