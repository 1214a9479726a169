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
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "roomtune/costs.hpp"
#include "roomtune/errors.hpp"
#include "roomtune/hyperfit.hpp"
#include "roomtune/pid.hpp"
#include "roomtune/plant.hpp"
#include "roomtune/safe_bo.hpp"
#include "roomtune/weather.hpp"
#include "roomtune/zn.hpp"

namespace roomtune {

enum class Method { Fixed, Ada, BO, CBO, SCBO };

inline constexpr std::array<Method, 5> all_methods{Method::Fixed, Method::Ada, Method::BO, Method::CBO, Method::SCBO};

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::Fixed: return "fixed";
    case Method::Ada: return "ada";
    case Method::BO: return "bo";
    case Method::CBO: return "cbo";
    case Method::SCBO: return "scbo";
    }
    return "?";
}

inline Method method_from_string(const std::string& s)
{
    for (Method m : all_methods) {
        if (to_string(m) == s) return m;
    }
    throw ContractError("unknown method '" + s + "' (expected fixed, ada, bo, cbo or scbo)");
}

inline bool uses_optimizer(Method m) { return m == Method::BO || m == Method::CBO || m == Method::SCBO; }

struct WeatherSource {
    /// "synthetic" or "csv".
    std::string kind = "synthetic";
    std::string csv_path;
    SyntheticWeatherConfig synthetic;

    bool operator==(const WeatherSource&) const = default;
};

struct CalibrationSettings {
    std::uint64_t seed = 1000;
    /// Each calibration day draws kp and ki uniformly within +-perturbation
    /// (relative) of the initial gains.
    double perturbation = 0.25;

    bool operator==(const CalibrationSettings&) const = default;
};

struct SeasonSettings {
    int days = 145;
    int seeds = 5;
    std::uint64_t first_seed = 1;
    std::string output_dir = "results";
    RoomState initial_room;
    /// Unscored days simulated on the first day's weather with the initial
    /// gains before day 1, so the wall starts near its operating point.
    int warmup_days = 3;
    WeatherSource weather;
    CalibrationSettings calibration;

    bool operator==(const SeasonSettings&) const = default;
};

struct CostSettings {
    std::array<double, cost_count> weights{0.25, 0.25, 0.25, 0.25};
    CalibrationPercentiles percentiles;

    bool operator==(const CostSettings&) const = default;
};

struct OptimizerSettings {
    OptimizerConfig search;
    FitOptions fit;
    AdaptiveOptions ada;
};

struct SeasonConfig {
    PlantParams plant;
    WeatherCompensation compensation;
    DailySchedule schedule;
    CostSettings costs;
    OptimizerSettings optimizer;
    SeasonSettings season;

    void validate() const
    {
        plant.validate();
        compensation.validate();
        schedule.validate();
        optimizer.search.validate();
        require(season.days >= 1, "season.days must be at least 1");
        require(season.seeds >= 1, "season.seeds must be at least 1");
        require(season.warmup_days >= 0, "season.warmup_days must be non-negative");
        require(season.calibration.perturbation >= 0.0 && season.calibration.perturbation < 1.0,
                "calibration perturbation must lie in [0, 1)");
        require(season.weather.kind == "synthetic" || season.weather.kind == "csv",
                "weather source must be 'synthetic' or 'csv'");
        if (season.weather.kind == "csv") require(!season.weather.csv_path.empty(), "csv weather needs a path");
        season.weather.synthetic.validate();
        double w = 0.0;
        for (double x : costs.weights) {
            require(x > 0.0, "cost weights must be positive");
            w += x;
        }
        require(std::abs(w - 1.0) < 1e-9, "cost weights must sum to one");
        require(schedule.morning_step(plant.step_seconds) < static_cast<std::size_t>(plant.steps_per_day()),
                "morning step lies outside the day");
    }
};

/// Everything derived from the calibration season.
struct Calibration {
    CostNormalization normalization;
    ContextRange context;
    /// Product kernels over (kp, ki, z).
    SurrogateHyperparameters contextual;
    /// Matern kernels over (kp, ki); only the cost entries are fitted.
    SurrogateHyperparameters context_free;
    std::size_t episodes = 0;
    std::vector<std::string> warnings;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace stream {
inline constexpr std::uint64_t weather = 1;
inline constexpr std::uint64_t plant_noise = 2;
inline constexpr std::uint64_t calibration_gains = 3;
inline constexpr std::uint64_t hyperfit = 4;
inline constexpr std::uint64_t warmup = 5;
} // namespace stream

/// Plant disturbance stream of one (seed, day), independent of the method.
inline std::mt19937_64 day_noise_rng(std::uint64_t seed, std::size_t day)
{
    return std::mt19937_64(mix_seed(seed, stream::plant_noise, day));
}

/// Weather for one seed: synthetic weather is drawn from the seed, CSV
/// weather is the same file for every seed. At most `season.days` days.
inline std::vector<WeatherDay> season_weather(const SeasonConfig& cfg, std::uint64_t seed)
{
    std::vector<WeatherDay> days;
    if (cfg.season.weather.kind == "csv") {
        SyntheticWeatherConfig occ = cfg.season.weather.synthetic;
        days = load_weather_csv(cfg.season.weather.csv_path, cfg.plant.step_seconds, cfg.plant.solar_gain_per_wm2,
                                occupancy_profile(occ, cfg.plant.step_seconds));
    } else {
        SyntheticWeatherConfig wc = cfg.season.weather.synthetic;
        wc.days = cfg.season.days;
        std::mt19937_64 rng(mix_seed(seed, stream::weather));
        days = synth_weather(wc, cfg.plant.step_seconds, rng);
    }
    if (days.size() > static_cast<std::size_t>(cfg.season.days)) days.resize(static_cast<std::size_t>(cfg.season.days));
    require(!days.empty(), "weather source yielded no complete day");
    return days;
}

/// Context of a day: outside air temperature at the morning setpoint step.
inline double day_context(const SeasonConfig& cfg, const WeatherDay& day)
{
    return day.oat[cfg.schedule.morning_step(cfg.plant.step_seconds)];
}

inline PIGains initial_gains(const SeasonConfig& cfg)
{
    const GainDomain& d = cfg.optimizer.search.domain;
    return d.at(d.nearest(cfg.optimizer.search.initial));
}

namespace detail {

inline DayOutcome simulate_checked(const SeasonConfig& cfg, const WeatherDay& w, const RoomState& s,
                                   std::mt19937_64& rng, const PIGains& g, const std::string& where);

} // namespace detail

/// Room state at the start of day 1 after the warm-up days.
inline RoomState warmed_up_room(const SeasonConfig& cfg, const WeatherDay& first, std::uint64_t seed)
{
    RoomState room = cfg.season.initial_room;
    const PIGains a0 = initial_gains(cfg);
    for (int d = 0; d < cfg.season.warmup_days; ++d) {
        std::mt19937_64 rng(mix_seed(seed, stream::warmup, static_cast<std::uint64_t>(d)));
        room = detail::simulate_checked(cfg, first, room, rng, a0, "warm-up day " + std::to_string(d + 1)).final_state;
    }
    return room;
}

namespace detail {

inline DayOutcome simulate_checked(const SeasonConfig& cfg, const WeatherDay& w, const RoomState& s,
                                   std::mt19937_64& rng, const PIGains& g, const std::string& where)
{
    try {
        return simulate_day(cfg.plant, cfg.compensation, w, cfg.schedule, s, rng, g);
    } catch (const SimulationDiverged& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf, " (%s, kp=%g, ki=%g, start T=%.3f W=%.3f)", where.c_str(), g.kp, g.ki, s.t_room,
                      s.t_wall);
        throw SimulationDiverged(std::string(e.what()) + buf);
    }
}

inline Hyperparameters fit_one(const KernelSpec& shape, bool basis, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               FitOptions opts, std::uint64_t seed, const std::string& name,
                               std::vector<std::string>& warnings)
{
    const double mean = y.mean();
    const double var = std::max((y.array() - mean).square().mean(), opts.bounds.variance_min);
    KernelSpec k = shape;
    k.signal_variance = std::clamp(var, opts.bounds.variance_min, opts.bounds.variance_max);
    const double noise = std::clamp(0.1 * var, opts.bounds.variance_min, opts.bounds.variance_max);
    Hyperparameters templ{k, noise, basis ? std::optional<double>(mean) : std::nullopt};
    opts.seed = seed;
    const FitResult r = fit_hyperparameters(templ, basis, x, y, opts);
    if (r.degenerate) warnings.push_back(name + ": calibration targets are degenerate, template hyperparameters kept");
    return r.hyper;
}

} // namespace detail

/// Runs the perturbed-gain calibration season, derives the cost
/// normalization and fits every surrogate's hyperparameters once.
inline Calibration run_calibration(const SeasonConfig& cfg)
{
    cfg.validate();
    const std::uint64_t seed = cfg.season.calibration.seed;
    const std::vector<WeatherDay> weather = season_weather(cfg, seed);
    const PIGains a0 = initial_gains(cfg);
    const GainDomain& domain = cfg.optimizer.search.domain;
    const double p = cfg.season.calibration.perturbation;
    std::mt19937_64 gain_rng(mix_seed(seed, stream::calibration_gains));
    std::uniform_real_distribution<double> factor(1.0 - p, 1.0 + p);

    std::vector<RawCosts> raw;
    std::vector<PIGains> gains;
    std::vector<double> contexts;
    RoomState room = warmed_up_room(cfg, weather.front(), seed);
    for (std::size_t d = 0; d < weather.size(); ++d) {
        PIGains g{a0.kp * factor(gain_rng), 0.0};
        g.ki = a0.ki * factor(gain_rng);
        std::mt19937_64 rng = day_noise_rng(seed, d + 1);
        const DayOutcome o = detail::simulate_checked(cfg, weather[d], room, rng, g, "calibration day " + std::to_string(d + 1));
        room = o.final_state;
        raw.push_back(raw_costs(o.trace));
        gains.push_back(g);
        contexts.push_back(day_context(cfg, weather[d]));
    }

    Calibration cal;
    cal.episodes = raw.size();
    cal.normalization = calibrate_normalization(raw, cfg.costs.percentiles);
    cal.normalization.weights = cfg.costs.weights;
    const auto [zmin, zmax] = std::minmax_element(contexts.begin(), contexts.end());
    cal.context = {*zmin, *zmax};
    if (cal.context.max - cal.context.min < 1.0) cal.context = {*zmin - 0.5, *zmin + 0.5};

    const auto n = static_cast<Eigen::Index>(raw.size());
    Eigen::MatrixXd x3(n, 3);
    Eigen::MatrixXd x2(n, 2);
    std::array<Eigen::VectorXd, cost_count> y;
    for (auto& v : y) v.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = static_cast<std::size_t>(r);
        const Eigen::Vector2d a = domain.normalize(gains[i]);
        x2.row(r) = a.transpose();
        x3.row(r) << a[0], a[1], cal.context.normalize(contexts[i]);
        const NormalizedCosts nc = cal.normalization.normalize(raw[i]);
        for (std::size_t c = 0; c < cost_count; ++c) y[c][r] = nc.j[c];
    }

    const FitOptions& fit = cfg.optimizer.fit;
    const KernelSpec product{KernelFamily::Product, {0.2, 0.2, 0.5}, 1.0};
    const KernelSpec matern{KernelFamily::Matern52, {0.2, 0.2}, 1.0};
    for (std::size_t c = 0; c < cost_count; ++c) {
        const std::string tag = "J" + std::to_string(c + 1);
        cal.contextual.costs[c] = detail::fit_one(product, true, x3, y[c], fit, mix_seed(seed, stream::hyperfit, c), "cost " + tag,
                                                  cal.warnings);
        cal.context_free.costs[c] = detail::fit_one(matern, true, x2, y[c], fit, mix_seed(seed, stream::hyperfit, 10 + c),
                                                    "context-free cost " + tag, cal.warnings);
        if (c < constraint_count) {
            const Eigen::VectorXd slack = y[c].array() - cal.normalization.thresholds[c];
            cal.contextual.constraints[c] = detail::fit_one(product, false, x3, slack, fit,
                                                            mix_seed(seed, stream::hyperfit, 20 + c), "constraint " + tag,
                                                            cal.warnings);
            cal.context_free.constraints[c] = {matern, cal.contextual.constraints[c].noise_variance, std::nullopt};
        }
    }
    return cal;
}

inline OptimizerState make_optimizer(const SeasonConfig& cfg, const Calibration& cal, Method m)
{
    require(uses_optimizer(m), "method " + to_string(m) + " has no optimizer state");
    const bool contextual = m != Method::BO;
    return OptimizerState(cfg.optimizer.search, cal.context, cal.normalization,
                          contextual ? cal.contextual : cal.context_free, contextual, m == Method::SCBO);
}

struct DailyResult {
    std::uint64_t seed = 0;
    std::size_t day = 0;
    double oat_c = 0.0;
    double kp = 0.0;
    double ki = 0.0;
    RawCosts raw;
    NormalizedCosts costs;
    std::size_t safe_set_size = 0;
    bool violation = false;

    bool operator==(const DailyResult&) const = default;
};

/// Resumable position inside a season run.
struct SeasonCheckpoint {
    Method method = Method::Fixed;
    std::uint64_t seed = 0;
    std::size_t next_day = 1;
    RoomState room;
    std::optional<PIGains> ada_gains;
    std::optional<OptimizerState> optimizer;
};

struct SeasonRun {
    std::vector<DailyResult> rows;
    SeasonCheckpoint checkpoint;
};

/// Runs days `resume.next_day` .. `last_day` (1-based, inclusive) of one
/// method for one seed. Without `resume` the season starts at day 1 from
/// the warmed-up room state.
inline SeasonRun run_season(const SeasonConfig& cfg, Method method, std::uint64_t seed, const Calibration& cal,
                            std::optional<SeasonCheckpoint> resume = std::nullopt,
                            std::optional<std::size_t> last_day = std::nullopt)
{
    cfg.validate();
    const std::vector<WeatherDay> weather = season_weather(cfg, seed);
    const std::size_t end = std::min(last_day.value_or(weather.size()), weather.size());
    const PIGains a0 = initial_gains(cfg);
    const GainDomain& domain = cfg.optimizer.search.domain;

    SeasonRun run;
    SeasonCheckpoint& cp = run.checkpoint;
    if (resume) {
        require(resume->method == method && resume->seed == seed, "checkpoint belongs to another method or seed");
        cp = std::move(*resume);
    } else {
        cp.method = method;
        cp.seed = seed;
        cp.room = warmed_up_room(cfg, weather.front(), seed);
        if (uses_optimizer(method)) cp.optimizer = make_optimizer(cfg, cal, method);
        if (method == Method::Ada) cp.ada_gains = a0;
    }
    AdaptivePolicy ada(cp.ada_gains.value_or(a0), {domain.kp_min, domain.ki_min}, {domain.kp_max, domain.ki_max},
                       cfg.optimizer.ada);
    const std::size_t morning = cfg.schedule.morning_step(cfg.plant.step_seconds);

    for (std::size_t day = cp.next_day; day <= end; ++day) {
        const WeatherDay& w = weather[day - 1];
        const double z = day_context(cfg, w);
        std::mt19937_64 rng = day_noise_rng(seed, day);
        DailyResult row;
        row.seed = seed;
        row.day = day;
        row.oat_c = z;
        PIGains g = a0;
        DayOutcome out;
        const std::string where = to_string(method) + " seed " + std::to_string(seed) + " day " + std::to_string(day);
        if (method == Method::Ada) {
            PIGains at_step = ada.gains();
            auto policy = [&](std::size_t k, const EpisodeTrace& tr) {
                const PIGains cur = ada(k, tr);
                if (k == morning) at_step = cur;
                return cur;
            };
            try {
                out = simulate_day(cfg.plant, cfg.compensation, w, cfg.schedule, cp.room, rng, policy);
            } catch (const SimulationDiverged& e) {
                throw SimulationDiverged(std::string(e.what()) + " (" + where + ")");
            }
            g = at_step;
            cp.ada_gains = ada.gains();
        } else {
            if (cp.optimizer) {
                const OptimizerState& st = *cp.optimizer;
                const std::vector<std::size_t> s = st.safe_set(z);
                row.safe_set_size = st.safe() ? s.size() : 0;
                g = domain.at(detail::lcb_argmin(st.cost_posterior(z), st.config().beta, s));
            }
            out = detail::simulate_checked(cfg, w, cp.room, rng, g, where);
        }
        cp.room = out.final_state;
        row.kp = g.kp;
        row.ki = g.ki;
        row.raw = raw_costs(out.trace);
        row.costs = cal.normalization.normalize(row.raw);
        for (double v : row.costs.j) {
            if (!std::isfinite(v)) throw NonFiniteValue("non-finite cost on " + where);
        }
        row.violation = cal.normalization.violates(row.costs);
        if (cp.optimizer) cp.optimizer->update(day, g, z, row.costs);
        run.rows.push_back(row);
        cp.next_day = day + 1;
    }
    return run;
}

inline const char* results_header()
{
    return "seed,day,oat_c,kp,ki,j1_raw,j2_raw,j3_raw,j4_raw,j1,j2,j3,j4,j_total,safe_set_size,violation";
}

inline void write_results_csv(std::ostream& out, const std::vector<DailyResult>& rows)
{
    out << results_header() << '\n';
    char buf[512];
    for (const DailyResult& r : rows) {
        std::snprintf(buf, sizeof buf, "%llu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu,%d\n",
                      static_cast<unsigned long long>(r.seed), r.day, r.oat_c, r.kp, r.ki, r.raw.rise_time_s,
                      r.raw.overshoot_c, r.raw.valve_move_l2, r.raw.valve_l2, r.costs.j[0], r.costs.j[1], r.costs.j[2],
                      r.costs.j[3], r.costs.total, r.safe_set_size, r.violation ? 1 : 0);
        out << buf;
    }
}

inline std::vector<DailyResult> read_results_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != results_header()) {
        throw ContractError("results CSV header does not match");
    }
    std::vector<DailyResult> rows;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 16) throw ContractError("results CSV row has " + std::to_string(f.size()) + " fields");
        DailyResult r;
        r.seed = std::stoull(f[0]);
        r.day = std::stoul(f[1]);
        r.oat_c = std::stod(f[2]);
        r.kp = std::stod(f[3]);
        r.ki = std::stod(f[4]);
        r.raw = {std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])};
        for (std::size_t i = 0; i < cost_count; ++i) r.costs.j[i] = std::stod(f[9 + i]);
        r.costs.total = std::stod(f[13]);
        r.safe_set_size = std::stoul(f[14]);
        r.violation = f[15] == "1";
        rows.push_back(r);
    }
    return rows;
}

/// Mean of the daily total cost over days 1..d, ordered by day index.
inline std::vector<double> cumulative_average(std::vector<DailyResult> rows)
{
    std::sort(rows.begin(), rows.end(), [](const DailyResult& a, const DailyResult& b) { return a.day < b.day; });
    std::vector<double> out;
    out.reserve(rows.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].day != i + 1) throw ContractError("results do not cover consecutive days from 1");
        sum += rows[i].costs.total;
        out.push_back(sum / static_cast<double>(i + 1));
    }
    return out;
}

inline double median(std::vector<double> v)
{
    require(!v.empty(), "median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct MethodSummary {
    Method method = Method::Fixed;
    std::size_t seeds = 0;
    /// Per day (index 0 = day 1): median, min and max over seeds of the
    /// cumulative average cost.
    std::vector<double> median;
    std::vector<double> min;
    std::vector<double> max;
    double final_median = 0.0;
    /// 100 (1 - final_median / fixed final_median); absent without a fixed run.
    std::optional<double> improvement_pct;
    double violation_fraction = 0.0;
    /// Largest single-day cost over all seeds and days.
    double worst_day = 0.0;
};

struct SeasonReport {
    std::size_t days = 0;
    std::vector<MethodSummary> methods;

    const MethodSummary* find(Method m) const
    {
        for (const MethodSummary& s : methods) {
            if (s.method == m) return &s;
        }
        return nullptr;
    }
};

/// runs[method] holds one row list per seed.
inline SeasonReport compare_report(const std::map<Method, std::vector<std::vector<DailyResult>>>& runs)
{
    require(!runs.empty(), "no runs to compare");
    SeasonReport rep;
    for (const auto& [method, seeds] : runs) {
        require(!seeds.empty(), "method " + to_string(method) + " has no seeds");
        MethodSummary s;
        s.method = method;
        s.seeds = seeds.size();
        std::vector<std::vector<double>> curves;
        std::size_t days = 0;
        std::size_t violations = 0;
        for (const auto& rows : seeds) {
            curves.push_back(cumulative_average(rows));
            if (days == 0) days = curves.back().size();
            if (curves.back().size() != days) throw ContractError("mismatched day counts across runs");
            for (const DailyResult& r : rows) {
                violations += r.violation;
                s.worst_day = std::max(s.worst_day, r.costs.total);
            }
        }
        if (rep.days == 0) rep.days = days;
        if (days != rep.days) throw ContractError("mismatched day counts across methods");
        for (std::size_t d = 0; d < days; ++d) {
            std::vector<double> at;
            for (const auto& c : curves) at.push_back(c[d]);
            s.median.push_back(roomtune::median(at));
            s.min.push_back(*std::min_element(at.begin(), at.end()));
            s.max.push_back(*std::max_element(at.begin(), at.end()));
        }
        s.final_median = s.median.back();
        s.violation_fraction = static_cast<double>(violations) / static_cast<double>(days * seeds.size());
        rep.methods.push_back(std::move(s));
    }
    if (const MethodSummary* fixed = rep.find(Method::Fixed)) {
        const double base = fixed->final_median;
        for (MethodSummary& s : rep.methods) s.improvement_pct = 100.0 * (1.0 - s.final_median / base);
    }
    return rep;
}

/// Rebuilds the optimizer as it stood after the observations of days <= day.
inline OptimizerState optimizer_at_day(const OptimizerState& trained, std::size_t day)
{
    OptimizerState s(trained.config(), trained.context_range(), trained.normalization(), trained.hyperparameters(),
                     trained.contextual(), trained.safe());
    for (const Observation& o : trained.observations()) {
        if (o.day <= day) s.update(o.day, o.gains, o.context, o.costs);
    }
    return s;
}

struct GainScheduleRow {
    double oat_c = 0.0;
    PIGains gains;
    std::size_t index = 0;
};

/// Safe gains minimizing the combined posterior mean at each OAT.
inline std::vector<GainScheduleRow> extract_gain_schedule(const OptimizerState& state, std::span<const double> oat_grid)
{
    std::vector<GainScheduleRow> out;
    for (double z : oat_grid) {
        const std::size_t k = state.exploit_index(z);
        out.push_back({z, state.domain().at(k), k});
    }
    return out;
}

struct SafeSetSnapshot {
    std::size_t kp_count = 0;
    std::size_t ki_count = 0;
    /// Row-major kp x ki membership, after the empty-set fallback.
    std::vector<bool> safe;
    std::size_t size = 0;
    bool fallback = false;

    bool at(std::size_t i, std::size_t j) const { return safe[i * ki_count + j]; }
};

inline SafeSetSnapshot extract_safe_set_snapshot(const OptimizerState& state, double z)
{
    SafeSetSnapshot snap;
    snap.kp_count = state.domain().kp_count;
    snap.ki_count = state.domain().ki_count;
    snap.safe.assign(state.domain().size(), false);
    const std::vector<std::size_t> members = state.safe_set(z);
    for (std::size_t k : members) snap.safe[k] = true;
    snap.size = members.size();
    const std::vector<bool> mask = state.safe_mask(z);
    snap.fallback = std::none_of(mask.begin(), mask.end(), [](bool b) { return b; });
    return snap;
}

} // namespace roomtune
