#include <cstdio>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "roomtune/costs.hpp"
#include "roomtune/plant.hpp"
#include "roomtune/weather.hpp"

using namespace roomtune;

namespace {

WeatherDay constant_day(const PlantParams& p, double oat, double solar = 0.0, double occ = 0.0)
{
    const auto n = static_cast<std::size_t>(p.steps_per_day());
    return WeatherDay{std::vector<double>(n, oat), std::vector<double>(n, solar), std::vector<double>(n, occ)};
}

} // namespace

TEST(HeatingCurve, NodesClampAndMidpoints)
{
    const WeatherCompensation comp;
    EXPECT_DOUBLE_EQ(heating_curve(comp, -3.0), 60.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, -10.0), 70.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, 20.0), 35.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, -25.0), 70.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, 30.0), 35.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, -6.5), 65.0);
    EXPECT_DOUBLE_EQ(heating_curve(comp, 8.5), 47.5);
}

TEST(HeatingCurve, MonotoneWithKinkAtMinusThree)
{
    const WeatherCompensation comp;
    comp.validate();
    double prev = heating_curve(comp, -20.0);
    for (double oat = -20.0; oat <= 25.0; oat += 0.05) {
        const double w = heating_curve(comp, oat);
        EXPECT_LE(w, prev + 1e-12);
        prev = w;
    }
    const double left = (heating_curve(comp, -3.0) - heating_curve(comp, -4.0));
    const double right = (heating_curve(comp, -2.0) - heating_curve(comp, -3.0));
    EXPECT_GT(std::abs(left - right), 0.1);
    WeatherCompensation bad{{{0.0, 40.0}, {5.0, 45.0}}};
    EXPECT_THROW(bad.validate(), ContractError);
}

TEST(PlantStep, EquilibriumIsUnchanged)
{
    const PlantParams p;
    const RoomState s{19.0, 19.0};
    const RoomState n = step(p, s, 0.0, 19.0, 55.0, 0.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(n.t_room, 19.0);
    EXPECT_DOUBLE_EQ(n.t_wall, 19.0);
}

TEST(PlantStep, OneStepHandArithmetic)
{
    PlantParams p;
    p.wall_coupling = 0.0;
    p.b_u = 0.01;
    p.b_d = 0.005;
    const RoomState s{18.0, 10.0};
    // 18 + 0.01 * 0.5 * (60 - 18) + 0.005 * (2 - 18) = 18 + 0.21 - 0.08
    const RoomState n = step(p, s, 0.5, 2.0, 60.0, 0.0, 0.0, 0.0);
    EXPECT_NEAR(n.t_room, 18.13, 1e-12);
    EXPECT_NEAR(n.t_wall, 0.998 * 10.0 + 0.002 * 18.0, 1e-12);
    // Radiators cannot cool.
    EXPECT_NEAR(step(p, s, 1.0, 18.0, 10.0, 0.0, 0.0, 0.0).t_room, 18.0, 1e-12);
}

TEST(PlantStep, DivergenceAndContracts)
{
    const PlantParams p;
    EXPECT_THROW(step(p, {49.9, 49.9}, 0.0, 20.0, 50.0, 5.0, 0.0, 0.0), SimulationDiverged);
    EXPECT_THROW(step(p, {20.0, 20.0}, 1.5, 0.0, 50.0, 0.0, 0.0, 0.0), ContractError);
    PlantParams bad;
    bad.step_seconds = 120;
    EXPECT_THROW(bad.validate(), ContractError);
}

TEST(PlantStep, ConvergesToAffineFixedPoint)
{
    const PlantParams p;
    const double u = 0.4, oat = 1.0, water = 55.0, solar = 0.002;
    // Steady state with the wall at room temperature:
    // b_d (oat - T) + b_u u (water - T) + solar = 0.
    const double fixed = (p.b_d * oat + p.heating_gain() * u * water + solar) / (p.b_d + p.heating_gain() * u);
    RoomState s{15.0, 15.0};
    double prev_gap = std::abs(s.t_room - fixed);
    for (int k = 0; k < 60000; ++k) {
        s = step(p, s, u, oat, water, solar, 0.0, 0.0);
        const double gap = std::abs(s.t_room - fixed);
        EXPECT_LE(gap, prev_gap + 1e-12);
        prev_gap = gap;
    }
    EXPECT_NEAR(s.t_room, fixed, 1e-6);
    EXPECT_NEAR(s.t_wall, fixed, 1e-6);
}

TEST(PlantStep, SteadyStateMonotoneInValve)
{
    const PlantParams p;
    std::mt19937_64 rng(4);
    std::vector<double> noise(5000);
    for (double& v : noise) v = truncated_normal(rng, p.noise_sigma);
    double last = -1e9;
    for (double u : {0.0, 0.1, 0.3, 0.6, 1.0}) {
        RoomState s{17.0, 17.0};
        for (double n : noise) s = step(p, s, u, 0.0, 56.0, 0.0, 0.0, n);
        EXPECT_GE(s.t_room, last);
        last = s.t_room;
    }
}

TEST(TruncatedNormal, BoundedByThreeSigma)
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100000; ++i) EXPECT_LE(std::abs(truncated_normal(rng, 0.01)), 0.03);
}

TEST(SimulateDay, ZeroGainsDecayTowardOutside)
{
    const PlantParams p;
    const WeatherDay day = constant_day(p, 2.0);
    std::mt19937_64 rng(1);
    const DayOutcome out = simulate_day(p, WeatherCompensation{}, day, DailySchedule{}, {20.0, 20.0}, rng, PIGains{});
    for (double u : out.trace.valve) EXPECT_EQ(u, 0.0);
    EXPECT_LT(out.final_state.t_room, 20.0);
    EXPECT_GT(out.final_state.t_room, 2.0);
    EXPECT_EQ(out.trace.size(), 288u);
    EXPECT_EQ(out.trace.step_index, 72u);
}

TEST(SimulateDay, AggressiveGainsMoveValveMore)
{
    const PlantParams p;
    const WeatherDay day = constant_day(p, 0.0);
    const DailySchedule flat{17.0, 21.0, 0.0, 24.0};
    std::mt19937_64 a(9), b(9);
    const auto moderate = simulate_day(p, WeatherCompensation{}, day, flat, {21.0, 21.0}, a, PIGains{0.6, 0.004});
    const auto wild = simulate_day(p, WeatherCompensation{}, day, flat, {21.0, 21.0}, b, PIGains{20.0, 0.2});
    EXPECT_GT(output_derivative_l2(wild.trace), output_derivative_l2(moderate.trace));
}

TEST(SimulateDay, NominalGainsWellPosed)
{
    const PlantParams p;
    const WeatherDay day = constant_day(p, 5.0, 0.0, 0.002);
    std::mt19937_64 rng(2);
    const auto out = simulate_day(p, WeatherCompensation{}, day, DailySchedule{}, {17.0, 17.5}, rng, PIGains{0.6, 0.004});
    const double rise = rise_time_10_90(out.trace);
    EXPECT_GT(rise, 0.0);
    EXPECT_LT(rise, day_seconds);
    EXPECT_GE(overshoot(out.trace), 0.0);
    for (double u : out.trace.valve) {
        EXPECT_GE(u, 0.0);
        EXPECT_LE(u, 1.0);
    }
}

TEST(SimulateDay, BitReproducibleForSeed)
{
    const PlantParams p;
    std::mt19937_64 wrng(3);
    const auto season = synth_weather(SyntheticWeatherConfig{}, p.step_seconds, wrng);
    std::mt19937_64 a(42), b(42);
    const auto x = simulate_day(p, WeatherCompensation{}, season[10], DailySchedule{}, {}, a, PIGains{0.6, 0.004});
    const auto y = simulate_day(p, WeatherCompensation{}, season[10], DailySchedule{}, {}, b, PIGains{0.6, 0.004});
    EXPECT_EQ(x.trace.t_room, y.trace.t_room);
    EXPECT_EQ(x.trace.valve, y.trace.valve);
    EXPECT_EQ(x.final_state, y.final_state);
}

TEST(SynthWeather, DeterministicAndSized)
{
    SyntheticWeatherConfig cfg;
    std::mt19937_64 a(5), b(5);
    const auto x = synth_weather(cfg, 300, a);
    const auto y = synth_weather(cfg, 300, b);
    ASSERT_EQ(x.size(), 145u);
    for (std::size_t d = 0; d < x.size(); ++d) {
        EXPECT_EQ(x[d].oat, y[d].oat);
        EXPECT_EQ(x[d].solar, y[d].solar);
        x[d].validate(288);
    }
}

TEST(SynthWeather, NoiselessMinimumAtMidSeason)
{
    SyntheticWeatherConfig cfg;
    cfg.oat_noise_sigma = 0.0;
    cfg.cloud_min = 1.0;
    std::mt19937_64 rng(0);
    const auto days = synth_weather(cfg, 300, rng);
    std::size_t argmin = 0;
    double best = 1e9;
    for (std::size_t d = 0; d < days.size(); ++d) {
        const double m = *std::min_element(days[d].oat.begin(), days[d].oat.end());
        if (m < best) {
            best = m;
            argmin = d;
        }
    }
    EXPECT_NEAR(static_cast<double>(argmin), 72.0, 1.0);
}

TEST(SynthWeather, SpansHeatingSeasonContexts)
{
    std::mt19937_64 rng(1);
    const auto days = synth_weather(SyntheticWeatherConfig{}, 300, rng);
    double lo = 1e9, hi = -1e9;
    for (const auto& d : days) {
        lo = std::min(lo, d.oat[72]);
        hi = std::max(hi, d.oat[72]);
    }
    EXPECT_LT(lo, -5.0);
    EXPECT_GT(hi, 5.0);
}

TEST(WeatherCsv, ResamplesLinearly)
{
    std::stringstream csv;
    csv << "timestamp,oat_celsius,solar_wm2\n";
    char stamp[32];
    for (int h = 0; h <= 48; ++h) {
        std::snprintf(stamp, sizeof stamp, "2016-10-%02dT%02d:00:00Z", 21 + h / 24, h % 24);
        csv << stamp << "," << (h * 0.5) << "," << (h % 24 == 12 ? 400 : 0) << "\n";
    }
    const std::vector<double> occ(288, 0.001);
    const auto days = load_weather_csv(csv, 300, 1e-4, occ);
    ASSERT_EQ(days.size(), 2u);
    EXPECT_DOUBLE_EQ(days[0].oat[0], 0.0);
    EXPECT_DOUBLE_EQ(days[0].oat[6], 0.25);   // 00:30
    EXPECT_DOUBLE_EQ(days[1].oat[12], 12.5);  // day 2, 01:00
    EXPECT_DOUBLE_EQ(days[0].solar[144], 400 * 1e-4);
    EXPECT_DOUBLE_EQ(days[0].solar[138], 200 * 1e-4);
    EXPECT_EQ(days[0].occupancy, occ);

    std::stringstream bad("time,oat\n");
    EXPECT_THROW(load_weather_csv(bad, 300, 1e-4, occ), ContractError);
    std::stringstream late("timestamp,oat_celsius,solar_wm2\n2016-10-21T01:00:00,1,0\n2016-10-21T02:00:00,1,0\n");
    EXPECT_THROW(load_weather_csv(late, 300, 1e-4, occ), ContractError);
}
