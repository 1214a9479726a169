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
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "roomtune/errors.hpp"
#include "roomtune/pid.hpp"
#include "roomtune/trace.hpp"

namespace roomtune {

/// First-order-plus-dead-time model, times in steps.
struct FopdtModel {
    double gain = 0.0;
    double time_constant = 0.0;
    std::size_t delay = 0;
    double offset = 0.0;
    double residual = 0.0;
};

struct FopdtFitOptions {
    std::size_t max_delay = 12;
    /// Relative rank tolerance of the regression matrix.
    double rank_tolerance = 1e-9;
};

/// Least-squares fit of y[k+1] = phi y[k] + g u[k-L] + c for each delay L
/// in 0..max_delay; keeps the delay with the smallest residual sum of
/// squares. Returns nothing when the regression is rank deficient for every
/// delay or the best fit is not a stable positive-gain lag.
inline std::optional<FopdtModel> fit_fopdt(std::span<const double> u, std::span<const double> y,
                                           const FopdtFitOptions& opts = {})
{
    require(u.size() == y.size(), "input and output series differ in length");
    std::optional<FopdtModel> best;
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_theta;
    for (std::size_t lag = 0; lag <= opts.max_delay; ++lag) {
        if (y.size() < lag + 5) break;
        const auto rows = static_cast<Eigen::Index>(y.size() - 1 - lag);
        Eigen::MatrixXd a(rows, 3);
        Eigen::VectorXd b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const std::size_t k = static_cast<std::size_t>(r) + lag;
            a(r, 0) = y[k];
            a(r, 1) = u[k - lag];
            a(r, 2) = 1.0;
            b[r] = y[k + 1];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        qr.setThreshold(opts.rank_tolerance);
        if (qr.rank() < 3) continue;
        const Eigen::Vector3d theta = qr.solve(b);
        const double rss = (a * theta - b).squaredNorm();
        if (rss < best_rss) {
            best_rss = rss;
            best_theta = theta;
            best = FopdtModel{0.0, 0.0, lag, theta[2], rss};
        }
    }
    if (!best) return std::nullopt;
    const double phi = best_theta[0];
    const double g = best_theta[1];
    if (!(phi > 0.0 && phi < 1.0) || !(g > 0.0)) return std::nullopt;
    best->gain = g / (1.0 - phi);
    best->time_constant = -1.0 / std::log(phi);
    return best;
}

/// Open-loop Ziegler-Nichols PI rule: kp = 0.9 tau / (K L), Ti = L / 0.3,
/// ki = kp / Ti (per step). The delay is clamped to at least one step.
inline PIGains ziegler_nichols_pi(const FopdtModel& m)
{
    require(m.gain > 0.0 && m.time_constant > 0.0, "FOPDT model must have positive gain and time constant");
    const double lag = std::max(1.0, static_cast<double>(m.delay));
    const double kp = 0.9 * m.time_constant / (m.gain * lag);
    const double ti = lag / 0.3;
    return {kp, kp / ti};
}

struct AdaptiveOptions {
    /// Steps between refits (one hour at 300 s).
    std::size_t refit_every = 12;
    /// Samples required before the first refit of a day (two hours).
    std::size_t minimum_samples = 24;
    FopdtFitOptions fit;
};

/// Gain policy that refits a FOPDT model to the day's trace at a fixed
/// cadence and applies the Ziegler-Nichols PI rule. Gains persist across
/// days; a failed fit keeps the previous gains.
class AdaptivePolicy {
public:
    AdaptivePolicy(PIGains initial, PIGains lower, PIGains upper, AdaptiveOptions opts = {})
        : gains_(initial)
        , lower_(lower)
        , upper_(upper)
        , opts_(opts)
    {
        initial.validate();
        require(opts_.refit_every > 0, "refit cadence must be positive");
    }

    PIGains operator()(std::size_t k, const EpisodeTrace& tr)
    {
        if (k >= opts_.minimum_samples && k % opts_.refit_every == 0) refit(tr);
        return gains_;
    }

    const PIGains& gains() const { return gains_; }
    void set_gains(const PIGains& g) { gains_ = g; }
    std::size_t refits() const { return refits_; }
    std::size_t failed_refits() const { return failed_; }

private:
    void refit(const EpisodeTrace& tr)
    {
        const std::optional<FopdtModel> m = fit_fopdt(tr.valve, tr.t_room, opts_.fit);
        if (!m) {
            ++failed_;
            return;
        }
        const PIGains g = ziegler_nichols_pi(*m);
        if (!std::isfinite(g.kp) || !std::isfinite(g.ki)) {
            ++failed_;
            return;
        }
        gains_ = {std::clamp(g.kp, lower_.kp, upper_.kp), std::clamp(g.ki, lower_.ki, upper_.ki)};
        ++refits_;
    }

    PIGains gains_;
    PIGains lower_;
    PIGains upper_;
    AdaptiveOptions opts_;
    std::size_t refits_ = 0;
    std::size_t failed_ = 0;
};

} // namespace roomtune
