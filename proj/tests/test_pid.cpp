#include <random>

#include <gtest/gtest.h>

#include "roomtune/pid.hpp"

using namespace roomtune;

TEST(ControlStep, ZeroErrorZeroIntegratorGivesZero)
{
    const auto out = control_step({0.7, 0.01}, {}, 21.0, 21.0);
    EXPECT_EQ(out.valve, 0.0);
}

TEST(ControlStep, PureProportional)
{
    const auto out = control_step({0.5, 0.0}, {}, 21.0, 20.0);
    EXPECT_DOUBLE_EQ(out.valve, 0.5);
}

TEST(ControlStep, AntiWindupReleasesImmediately)
{
    // Scripted rollout: e = +5 for 100 steps saturates the valve; the
    // integrator must not wind up, so u leaves saturation as soon as e < 0.
    const PIGains g{1.0, 0.1};
    ControllerState s{};
    for (int k = 0; k < 100; ++k) {
        const auto out = control_step(g, s, 25.0, 20.0);
        EXPECT_EQ(out.valve, 1.0);
        s = out.state;
    }
    EXPECT_LE(g.ki * s.integrator, integral_max);
    EXPECT_EQ(s.integrator, 0.0);
    const auto flipped = control_step(g, s, 20.0, 21.0);
    EXPECT_LT(flipped.valve, 1.0);
}

TEST(ControlStep, IntegratorBandRespected)
{
    // Small kp keeps the output unsaturated for a while; ki * I stays in band.
    const PIGains g{0.0, 0.05};
    ControllerState s{};
    for (int k = 0; k < 1000; ++k) {
        s = control_step(g, s, 21.0, 20.9).state;
        EXPECT_LE(g.ki * s.integrator, integral_max + 1e-12);
        EXPECT_GE(g.ki * s.integrator, integral_min - 1e-12);
    }
    for (int k = 0; k < 1000; ++k) {
        s = control_step(g, s, 21.0, 25.0).state;
        EXPECT_GE(g.ki * s.integrator, integral_min - 1e-12);
    }
}

TEST(Reset, ClearsStateAndIsIdempotent)
{
    ControllerState s{};
    for (int k = 0; k < 20; ++k) s = control_step({2.0, 0.1}, s, 25.0, 18.0).state;
    s = control_step({0.0, 0.1}, s, 21.0, 20.5).state;
    const ControllerState r = reset(s);
    EXPECT_EQ(r, ControllerState{});
    EXPECT_EQ(reset(r), r);
    EXPECT_EQ(control_step({0.7, 0.01}, r, 21.0, 21.0).valve, 0.0);
}

TEST(ControlStepProperty, OutputInUnitIntervalAndProportionalScaling)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> kp(0.0, 20.0), ki(0.0, 0.2), e(-10.0, 10.0);
    ControllerState s{};
    for (int t = 0; t < 5000; ++t) {
        const PIGains g{kp(rng), ki(rng)};
        const auto out = control_step(g, s, 21.0, 21.0 - e(rng));
        EXPECT_GE(out.valve, 0.0);
        EXPECT_LE(out.valve, 1.0);
        s = out.state;
    }
    for (int t = 0; t < 500; ++t) {
        const double k = kp(rng);
        const double err = std::uniform_real_distribution<double>(0.0, 0.5 / std::max(k, 1e-9))(rng);
        ControllerState random_state{e(rng) * 100.0, 0.3};
        const double u1 = control_step({k, 0.0}, random_state, err, 0.0).valve;
        const double u2 = control_step({k, 0.0}, {}, 2.0 * err, 0.0).valve;
        // Memoryless with ki = 0, and linear while unsaturated.
        EXPECT_DOUBLE_EQ(u1, control_step({k, 0.0}, {}, err, 0.0).valve);
        EXPECT_NEAR(u2, 2.0 * u1, 1e-12);
    }
}
