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

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "roomtune/harness.hpp"

namespace roomtune {

using json = nlohmann::json;

namespace detail {

/// Reads the keys of one JSON object into an existing value, leaving
/// absent keys at their defaults and rejecting keys it does not know.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where)
        : j_(j)
        , where_(std::move(where))
    {
        if (!j_.is_object()) throw ContractError(where_ + " must be a JSON object");
    }

    template <class T>
    ObjectReader& operator()(const char* key, T& out)
    {
        seen_.insert(key);
        if (j_.contains(key)) {
            try {
                from_json_value(j_.at(key), out, where_ + "." + key);
            } catch (const json::exception& e) {
                throw ContractError(where_ + "." + key + ": " + e.what());
            }
        }
        return *this;
    }

    void finish() const
    {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ContractError("unknown key '" + item.key() + "' in " + where_);
        }
    }

private:
    template <class T>
    static void from_json_value(const json& v, T& out, const std::string& where);

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

} // namespace detail

inline json to_json_value(const PlantParams& p)
{
    return {{"step_seconds", p.step_seconds}, {"b_u", p.b_u}, {"b_d", p.b_d}, {"wall_coupling", p.wall_coupling},
            {"wall_pole", p.wall_pole}, {"radiator_ua", p.radiator_ua}, {"noise_sigma", p.noise_sigma},
            {"solar_gain_per_wm2", p.solar_gain_per_wm2}};
}

inline void read(const json& j, PlantParams& p, const std::string& where)
{
    detail::ObjectReader(j, where)("step_seconds", p.step_seconds)("b_u", p.b_u)("b_d", p.b_d)(
        "wall_coupling", p.wall_coupling)("wall_pole", p.wall_pole)("radiator_ua", p.radiator_ua)(
        "noise_sigma", p.noise_sigma)("solar_gain_per_wm2", p.solar_gain_per_wm2)
        .finish();
}

inline json to_json_value(const WeatherCompensation& c) { return {{"breakpoints", c.breakpoints}}; }

inline void read(const json& j, WeatherCompensation& c, const std::string& where)
{
    detail::ObjectReader(j, where)("breakpoints", c.breakpoints).finish();
}

inline json to_json_value(const DailySchedule& s)
{
    return {{"night_setpoint", s.night_setpoint}, {"day_setpoint", s.day_setpoint}, {"morning_hour", s.morning_hour},
            {"evening_hour", s.evening_hour}};
}

inline void read(const json& j, DailySchedule& s, const std::string& where)
{
    detail::ObjectReader(j, where)("night_setpoint", s.night_setpoint)("day_setpoint", s.day_setpoint)(
        "morning_hour", s.morning_hour)("evening_hour", s.evening_hour)
        .finish();
}

inline json to_json_value(const CostSettings& c)
{
    return {{"weights", c.weights},
            {"scale_percentile", c.percentiles.scale},
            {"threshold_percentile", c.percentiles.threshold},
            {"minimum_episodes", c.percentiles.minimum_episodes},
            {"scale_floor", c.percentiles.scale_floor}};
}

inline void read(const json& j, CostSettings& c, const std::string& where)
{
    detail::ObjectReader(j, where)("weights", c.weights)("scale_percentile", c.percentiles.scale)(
        "threshold_percentile", c.percentiles.threshold)("minimum_episodes", c.percentiles.minimum_episodes)(
        "scale_floor", c.percentiles.scale_floor)
        .finish();
}

inline json to_json_value(const PIGains& g) { return {{"kp", g.kp}, {"ki", g.ki}}; }

inline void read(const json& j, PIGains& g, const std::string& where)
{
    detail::ObjectReader(j, where)("kp", g.kp)("ki", g.ki).finish();
}

inline json to_json_value(const GainDomain& d)
{
    return {{"kp_min", d.kp_min}, {"kp_max", d.kp_max}, {"ki_min", d.ki_min},
            {"ki_max", d.ki_max}, {"kp_count", d.kp_count}, {"ki_count", d.ki_count}};
}

inline void read(const json& j, GainDomain& d, const std::string& where)
{
    detail::ObjectReader(j, where)("kp_min", d.kp_min)("kp_max", d.kp_max)("ki_min", d.ki_min)("ki_max", d.ki_max)(
        "kp_count", d.kp_count)("ki_count", d.ki_count)
        .finish();
}

inline json to_json_value(const OptimizerConfig& c)
{
    return {{"beta", c.beta}, {"epsilon", c.epsilon}, {"initial", to_json_value(c.initial)},
            {"domain", to_json_value(c.domain)}};
}

inline json to_json_value(const FitOptions& f)
{
    return {{"restarts", f.restarts},
            {"max_iterations", f.max_iterations},
            {"lengthscale_min", f.bounds.lengthscale_min},
            {"lengthscale_max", f.bounds.lengthscale_max},
            {"variance_min", f.bounds.variance_min},
            {"variance_max", f.bounds.variance_max}};
}

inline void read(const json& j, FitOptions& f, const std::string& where)
{
    detail::ObjectReader(j, where)("restarts", f.restarts)("max_iterations", f.max_iterations)(
        "lengthscale_min", f.bounds.lengthscale_min)("lengthscale_max", f.bounds.lengthscale_max)(
        "variance_min", f.bounds.variance_min)("variance_max", f.bounds.variance_max)
        .finish();
}

inline json to_json_value(const AdaptiveOptions& a)
{
    return {{"refit_every_steps", a.refit_every}, {"minimum_samples", a.minimum_samples},
            {"max_delay_steps", a.fit.max_delay}};
}

inline void read(const json& j, AdaptiveOptions& a, const std::string& where)
{
    detail::ObjectReader(j, where)("refit_every_steps", a.refit_every)("minimum_samples", a.minimum_samples)(
        "max_delay_steps", a.fit.max_delay)
        .finish();
}

inline json to_json_value(const OptimizerSettings& o)
{
    json j = to_json_value(o.search);
    j["hyperparameter_fit"] = to_json_value(o.fit);
    j["ada"] = to_json_value(o.ada);
    return j;
}

inline void read(const json& j, OptimizerSettings& o, const std::string& where)
{
    detail::ObjectReader(j, where)("beta", o.search.beta)("epsilon", o.search.epsilon)("initial", o.search.initial)(
        "domain", o.search.domain)("hyperparameter_fit", o.fit)("ada", o.ada)
        .finish();
}

inline json to_json_value(const SyntheticWeatherConfig& w)
{
    return {{"oat_season_edge", w.oat_season_edge},
            {"oat_season_depth", w.oat_season_depth},
            {"oat_daily_amplitude", w.oat_daily_amplitude},
            {"oat_noise_sigma", w.oat_noise_sigma},
            {"oat_noise_correlation_hours", w.oat_noise_correlation_hours},
            {"solar_peak", w.solar_peak},
            {"sunrise_hour", w.sunrise_hour},
            {"sunset_hour", w.sunset_hour},
            {"cloud_min", w.cloud_min},
            {"occupancy_gain", w.occupancy_gain},
            {"occupancy_start_hour", w.occupancy_start_hour},
            {"occupancy_end_hour", w.occupancy_end_hour}};
}

inline void read(const json& j, SyntheticWeatherConfig& w, const std::string& where)
{
    detail::ObjectReader(j, where)("oat_season_edge", w.oat_season_edge)("oat_season_depth", w.oat_season_depth)(
        "oat_daily_amplitude", w.oat_daily_amplitude)("oat_noise_sigma", w.oat_noise_sigma)(
        "oat_noise_correlation_hours", w.oat_noise_correlation_hours)("solar_peak", w.solar_peak)(
        "sunrise_hour", w.sunrise_hour)("sunset_hour", w.sunset_hour)("cloud_min", w.cloud_min)(
        "occupancy_gain", w.occupancy_gain)("occupancy_start_hour", w.occupancy_start_hour)(
        "occupancy_end_hour", w.occupancy_end_hour)
        .finish();
}

inline json to_json_value(const RoomState& r) { return {{"t_room", r.t_room}, {"t_wall", r.t_wall}}; }

inline void read(const json& j, RoomState& r, const std::string& where)
{
    detail::ObjectReader(j, where)("t_room", r.t_room)("t_wall", r.t_wall).finish();
}

inline json to_json_value(const SeasonSettings& s)
{
    return {{"days", s.days},
            {"seeds", s.seeds},
            {"first_seed", s.first_seed},
            {"output_dir", s.output_dir},
            {"initial_room", to_json_value(s.initial_room)},
            {"warmup_days", s.warmup_days},
            {"weather",
             {{"source", s.weather.kind}, {"path", s.weather.csv_path}, {"synthetic", to_json_value(s.weather.synthetic)}}},
            {"calibration", {{"seed", s.calibration.seed}, {"perturbation", s.calibration.perturbation}}}};
}

inline void read(const json& j, WeatherSource& w, const std::string& where)
{
    detail::ObjectReader(j, where)("source", w.kind)("path", w.csv_path)("synthetic", w.synthetic).finish();
}

inline void read(const json& j, CalibrationSettings& c, const std::string& where)
{
    detail::ObjectReader(j, where)("seed", c.seed)("perturbation", c.perturbation).finish();
}

inline void read(const json& j, SeasonSettings& s, const std::string& where)
{
    detail::ObjectReader(j, where)("days", s.days)("seeds", s.seeds)("first_seed", s.first_seed)(
        "output_dir", s.output_dir)("initial_room", s.initial_room)("warmup_days", s.warmup_days)("weather", s.weather)("calibration", s.calibration)
        .finish();
}

inline json to_json_value(const SeasonConfig& c)
{
    return {{"plant", to_json_value(c.plant)},       {"compensation", to_json_value(c.compensation)},
            {"schedule", to_json_value(c.schedule)}, {"costs", to_json_value(c.costs)},
            {"optimizer", to_json_value(c.optimizer)}, {"season", to_json_value(c.season)}};
}

inline void read(const json& j, SeasonConfig& c, const std::string& where)
{
    detail::ObjectReader(j, where)("plant", c.plant)("compensation", c.compensation)("schedule", c.schedule)(
        "costs", c.costs)("optimizer", c.optimizer)("season", c.season)
        .finish();
}

/// Parses a config document; sections and keys that are absent keep their
/// defaults.
inline SeasonConfig parse_config(const json& j)
{
    SeasonConfig c;
    read(j, c, "config");
    c.validate();
    return c;
}

inline json to_json_value(const KernelSpec& k)
{
    return {{"family", to_string(k.family)}, {"lengthscales", k.lengthscales}, {"signal_variance", k.signal_variance}};
}

inline json to_json_value(const Hyperparameters& h)
{
    json j = to_json_value(h.kernel);
    j["noise_variance"] = h.noise_variance;
    j["basis"] = h.basis ? json(*h.basis) : json(nullptr);
    return j;
}

inline void read(const json& j, Hyperparameters& h, const std::string& where)
{
    std::string family = to_string(h.kernel.family);
    json basis = nullptr;
    detail::ObjectReader(j, where)("family", family)("lengthscales", h.kernel.lengthscales)(
        "signal_variance", h.kernel.signal_variance)("noise_variance", h.noise_variance)("basis", basis)
        .finish();
    h.kernel.family = kernel_family_from_string(family);
    h.basis = basis.is_null() ? std::nullopt : std::optional<double>(basis.get<double>());
    h.kernel.validate();
}

inline json to_json_value(const SurrogateHyperparameters& s)
{
    json costs = json::array();
    json constraints = json::array();
    for (const auto& h : s.costs) costs.push_back(to_json_value(h));
    for (const auto& h : s.constraints) constraints.push_back(to_json_value(h));
    return {{"costs", costs}, {"constraints", constraints}};
}

inline void read(const json& j, SurrogateHyperparameters& s, const std::string& where)
{
    json costs = json::array();
    json constraints = json::array();
    detail::ObjectReader(j, where)("costs", costs)("constraints", constraints).finish();
    require(costs.size() == cost_count && constraints.size() == constraint_count,
            where + " needs 4 cost and 3 constraint entries");
    for (std::size_t i = 0; i < cost_count; ++i) read(costs[i], s.costs[i], where + ".costs");
    for (std::size_t i = 0; i < constraint_count; ++i) read(constraints[i], s.constraints[i], where + ".constraints");
}

/// Calibration document: `scales`, `thresholds` and `weights` at the top
/// level plus the context range and fitted hyperparameters.
inline json to_json_value(const Calibration& c)
{
    return {{"scales", c.normalization.scales},
            {"thresholds", c.normalization.thresholds},
            {"weights", c.normalization.weights},
            {"context_range", {{"min", c.context.min}, {"max", c.context.max}}},
            {"episodes", c.episodes},
            {"hyperparameters", {{"contextual", to_json_value(c.contextual)}, {"context_free", to_json_value(c.context_free)}}},
            {"warnings", c.warnings}};
}

inline void read(const json& j, Calibration& c, const std::string& where)
{
    json range = json::object();
    json hyper = json::object();
    detail::ObjectReader(j, where)("scales", c.normalization.scales)("thresholds", c.normalization.thresholds)(
        "weights", c.normalization.weights)("context_range", range)("episodes", c.episodes)("hyperparameters", hyper)(
        "warnings", c.warnings)
        .finish();
    detail::ObjectReader(range, where + ".context_range")("min", c.context.min)("max", c.context.max).finish();
    json ctx = json::object();
    json free = json::object();
    detail::ObjectReader(hyper, where + ".hyperparameters")("contextual", ctx)("context_free", free).finish();
    read(ctx, c.contextual, where + ".hyperparameters.contextual");
    read(free, c.context_free, where + ".hyperparameters.context_free");
    c.normalization.validate();
    c.context.validate();
}

inline json to_json_value(const Observation& o)
{
    return {{"day", o.day}, {"kp", o.gains.kp}, {"ki", o.gains.ki}, {"oat_c", o.context}, {"j", o.costs.j},
            {"j_total", o.costs.total}};
}

inline void read(const json& j, Observation& o, const std::string& where)
{
    detail::ObjectReader(j, where)("day", o.day)("kp", o.gains.kp)("ki", o.gains.ki)("oat_c", o.context)(
        "j", o.costs.j)("j_total", o.costs.total)
        .finish();
}

/// Checkpoint document: the full config and calibration, the run position
/// and the optimizer's observation log. Surrogates are rebuilt by replaying
/// the observations against the stored hyperparameters.
inline json checkpoint_to_json(const SeasonCheckpoint& cp, const SeasonConfig& cfg, const Calibration& cal)
{
    json j{{"method", to_string(cp.method)},
           {"seed", cp.seed},
           {"next_day", cp.next_day},
           {"room", to_json_value(cp.room)},
           {"config", to_json_value(cfg)},
           {"calibration", to_json_value(cal)}};
    j["ada_gains"] = cp.ada_gains ? to_json_value(*cp.ada_gains) : json(nullptr);
    json obs = json::array();
    if (cp.optimizer) {
        for (const Observation& o : cp.optimizer->observations()) obs.push_back(to_json_value(o));
    }
    j["observations"] = obs;
    return j;
}

struct LoadedCheckpoint {
    SeasonConfig config;
    Calibration calibration;
    SeasonCheckpoint checkpoint;
};

inline LoadedCheckpoint checkpoint_from_json(const json& j)
{
    LoadedCheckpoint out;
    std::string method;
    json config = json::object();
    json calibration = json::object();
    json ada = nullptr;
    json obs = json::array();
    SeasonCheckpoint& cp = out.checkpoint;
    detail::ObjectReader(j, "checkpoint")("method", method)("seed", cp.seed)("next_day", cp.next_day)("room", cp.room)(
        "config", config)("calibration", calibration)("ada_gains", ada)("observations", obs)
        .finish();
    cp.method = method_from_string(method);
    out.config = parse_config(config);
    read(calibration, out.calibration, "checkpoint.calibration");
    if (!ada.is_null()) {
        PIGains g;
        read(ada, g, "checkpoint.ada_gains");
        cp.ada_gains = g;
    }
    if (uses_optimizer(cp.method)) {
        cp.optimizer = make_optimizer(out.config, out.calibration, cp.method);
        for (const json& o : obs) {
            Observation ob;
            read(o, ob, "checkpoint.observations");
            cp.optimizer->update(ob.day, ob.gains, ob.context, ob.costs);
        }
    }
    return out;
}

inline json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ContractError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void save_json_file(const std::string& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

namespace detail {

template <class T>
void ObjectReader::from_json_value(const json& v, T& out, const std::string& where)
{
    if constexpr (requires { read(v, out, where); }) {
        read(v, out, where);
    } else {
        out = v.get<T>();
    }
}

} // namespace detail

} // namespace roomtune
