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
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roomtune/errors.hpp"
#include "roomtune/plant.hpp"

namespace roomtune {

/// Synthetic heating-season weather. OAT is a seasonal half-sine (coldest at
/// mid-season) plus a daily sinusoid (coldest 03:00) plus AR(1) noise; solar
/// gain is a clipped daytime sinusoid scaled by a per-day cloud factor;
/// occupancy is a constant gain during office hours.
struct SyntheticWeatherConfig {
    int days = 145;
    double oat_season_edge = 10.0;
    double oat_season_depth = 12.0;
    double oat_daily_amplitude = 3.0;
    double oat_noise_sigma = 3.0;
    double oat_noise_correlation_hours = 48.0;
    double solar_peak = 0.02;
    double sunrise_hour = 7.5;
    double sunset_hour = 16.5;
    double cloud_min = 0.1;
    double occupancy_gain = 0.004;
    double occupancy_start_hour = 8.0;
    double occupancy_end_hour = 18.0;

    void validate() const
    {
        require(days >= 1, "weather needs at least one day");
        require(oat_noise_sigma >= 0.0 && solar_peak >= 0.0 && occupancy_gain >= 0.0,
                "weather amplitudes must be non-negative");
        require(sunrise_hour < sunset_hour, "sunrise must precede sunset");
        require(cloud_min >= 0.0 && cloud_min <= 1.0, "cloud_min must be in [0, 1]");
        require(oat_noise_correlation_hours > 0.0, "noise correlation time must be positive");
    }
};

inline std::vector<double> occupancy_profile(const SyntheticWeatherConfig& cfg, int step_seconds)
{
    const int n = 86400 / step_seconds;
    std::vector<double> occ(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        const double h = k * step_seconds / 3600.0;
        if (h >= cfg.occupancy_start_hour && h < cfg.occupancy_end_hour) occ[static_cast<std::size_t>(k)] = cfg.occupancy_gain;
    }
    return occ;
}

inline std::vector<WeatherDay> synth_weather(const SyntheticWeatherConfig& cfg, int step_seconds, std::mt19937_64& rng)
{
    cfg.validate();
    const int n = 86400 / step_seconds;
    const double steps_total = static_cast<double>(cfg.days) * n;
    const double rho = std::exp(-step_seconds / (3600.0 * cfg.oat_noise_correlation_hours));
    const double innovation = cfg.oat_noise_sigma * std::sqrt(1.0 - rho * rho);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> cloud(cfg.cloud_min, 1.0);
    const std::vector<double> occ = occupancy_profile(cfg, step_seconds);

    double ar = cfg.oat_noise_sigma * n01(rng);
    std::vector<WeatherDay> days;
    days.reserve(static_cast<std::size_t>(cfg.days));
    for (int d = 0; d < cfg.days; ++d) {
        WeatherDay day;
        day.oat.resize(static_cast<std::size_t>(n));
        day.solar.resize(static_cast<std::size_t>(n));
        day.occupancy = occ;
        const double clouds = cloud(rng);
        for (int k = 0; k < n; ++k) {
            const double t = (static_cast<double>(d) * n + k + 0.5) / steps_total;
            const double h = k * step_seconds / 3600.0;
            const double seasonal = cfg.oat_season_edge - cfg.oat_season_depth * std::sin(std::numbers::pi * t);
            const double daily = -cfg.oat_daily_amplitude * std::cos(2.0 * std::numbers::pi * (h - 3.0) / 24.0);
            day.oat[static_cast<std::size_t>(k)] = seasonal + daily + ar;
            ar = rho * ar + innovation * n01(rng);
            double sun = 0.0;
            if (h > cfg.sunrise_hour && h < cfg.sunset_hour) {
                sun = std::sin(std::numbers::pi * (h - cfg.sunrise_hour) / (cfg.sunset_hour - cfg.sunrise_hour));
            }
            day.solar[static_cast<std::size_t>(k)] = cfg.solar_peak * clouds * sun;
        }
        days.push_back(std::move(day));
    }
    return days;
}

namespace detail {

/// Seconds since the epoch for "YYYY-MM-DDTHH:MM[:SS][Z]" (UTC).
inline long long parse_iso8601(const std::string& text)
{
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const int got = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (got < 6 || (sep != 'T' && sep != ' ')) throw ContractError("bad ISO-8601 timestamp '" + text + "'");
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    return static_cast<long long>(timegm(&tm));
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

} // namespace detail

/// Reads `timestamp,oat_celsius,solar_wm2` rows at a fixed interval and
/// resamples them to the plant step by linear interpolation. The first row
/// must be at midnight; only complete days are returned.
inline std::vector<WeatherDay> load_weather_csv(std::istream& in, int step_seconds, double solar_gain_per_wm2,
                                                const std::vector<double>& occupancy)
{
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "timestamp,oat_celsius,solar_wm2") {
        throw ContractError("weather CSV header must be 'timestamp,oat_celsius,solar_wm2'");
    }
    std::vector<long long> t;
    std::vector<double> oat, solar;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string ts, a, b;
        if (!std::getline(ss, ts, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b)) {
            throw ContractError("malformed weather CSV row: '" + line + "'");
        }
        t.push_back(detail::parse_iso8601(detail::trim(ts)));
        oat.push_back(std::stod(a));
        solar.push_back(std::stod(b));
        if (!std::isfinite(oat.back()) || !std::isfinite(solar.back())) throw NonFiniteValue("weather CSV value not finite");
    }
    require(t.size() >= 2, "weather CSV needs at least two rows");
    const long long interval = t[1] - t[0];
    require(interval > 0, "weather CSV timestamps must increase");
    for (std::size_t i = 1; i < t.size(); ++i) {
        require(t[i] - t[i - 1] == interval, "weather CSV rows must be at a fixed interval");
    }
    require(t[0] % 86400 == 0, "weather CSV must start at 00:00");

    const int n = 86400 / step_seconds;
    require(occupancy.size() == static_cast<std::size_t>(n), "occupancy profile length mismatch");
    const long long span = t.back() - t.front();
    const long long days = span / 86400;
    require(days >= 1, "weather CSV covers less than one full day");
    std::vector<WeatherDay> out;
    for (long long d = 0; d < days; ++d) {
        WeatherDay day;
        day.occupancy = occupancy;
        for (int k = 0; k < n; ++k) {
            const double at = static_cast<double>(d * 86400 + static_cast<long long>(k) * step_seconds);
            const double pos = at / static_cast<double>(interval);
            const auto i = std::min(static_cast<std::size_t>(pos), t.size() - 2);
            const double f = pos - static_cast<double>(i);
            day.oat.push_back(oat[i] + f * (oat[i + 1] - oat[i]));
            day.solar.push_back(solar_gain_per_wm2 * std::max(0.0, solar[i] + f * (solar[i + 1] - solar[i])));
        }
        out.push_back(std::move(day));
    }
    return out;
}

inline std::vector<WeatherDay> load_weather_csv(const std::string& path, int step_seconds, double solar_gain_per_wm2,
                                                const std::vector<double>& occupancy)
{
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open weather CSV '" + path + "'");
    return load_weather_csv(in, step_seconds, solar_gain_per_wm2, occupancy);
}

} // namespace roomtune
