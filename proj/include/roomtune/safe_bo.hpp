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
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "roomtune/costs.hpp"
#include "roomtune/errors.hpp"
#include "roomtune/gp.hpp"
#include "roomtune/hyperfit.hpp"
#include "roomtune/pid.hpp"

namespace roomtune {

/// Log-spaced grid of candidate PI gains. Grid index = i * ki_count + j
/// where i indexes kp and j indexes ki, both ascending.
struct GainDomain {
    double kp_min = 0.02;
    double kp_max = 20.0;
    double ki_min = 1e-4;
    double ki_max = 0.2;
    std::size_t kp_count = 40;
    std::size_t ki_count = 40;

    void validate() const
    {
        require(kp_min > 0.0 && kp_max > kp_min, "kp range must be positive and increasing");
        require(ki_min > 0.0 && ki_max > ki_min, "ki range must be positive and increasing");
        require(kp_count >= 2 && ki_count >= 2, "gain grid needs at least two values per axis");
    }

    std::size_t size() const { return kp_count * ki_count; }

    double kp_at(std::size_t i) const { return log_space(kp_min, kp_max, i, kp_count); }
    double ki_at(std::size_t j) const { return log_space(ki_min, ki_max, j, ki_count); }

    std::size_t index_of(std::size_t i, std::size_t j) const { return i * ki_count + j; }

    PIGains at(std::size_t index) const
    {
        require(index < size(), "grid index out of range");
        return {kp_at(index / ki_count), ki_at(index % ki_count)};
    }

    /// Gains mapped to [0, 1]^2 by log scaling.
    Eigen::Vector2d normalize(const PIGains& g) const
    {
        require(g.kp > 0.0 && g.ki > 0.0, "gains must be positive to normalize");
        return {std::log(g.kp / kp_min) / std::log(kp_max / kp_min),
                std::log(g.ki / ki_min) / std::log(ki_max / ki_min)};
    }

    /// Closest grid node in normalized coordinates.
    std::size_t nearest(const PIGains& g) const
    {
        const Eigen::Vector2d u = normalize(clamp(g));
        const auto snap = [](double t, std::size_t n) {
            const double k = std::round(t * static_cast<double>(n - 1));
            return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n - 1)));
        };
        return index_of(snap(u[0], kp_count), snap(u[1], ki_count));
    }

    PIGains clamp(const PIGains& g) const
    {
        return {std::clamp(g.kp, kp_min, kp_max), std::clamp(g.ki, ki_min, ki_max)};
    }

    /// size() x 2 matrix of normalized grid coordinates.
    Eigen::MatrixXd normalized_points() const
    {
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(size()), 2);
        for (std::size_t i = 0; i < kp_count; ++i) {
            for (std::size_t j = 0; j < ki_count; ++j) {
                const auto r = static_cast<Eigen::Index>(index_of(i, j));
                pts(r, 0) = static_cast<double>(i) / static_cast<double>(kp_count - 1);
                pts(r, 1) = static_cast<double>(j) / static_cast<double>(ki_count - 1);
            }
        }
        return pts;
    }

    bool operator==(const GainDomain&) const = default;

private:
    static double log_space(double lo, double hi, std::size_t k, std::size_t n)
    {
        require(k < n, "grid index out of range");
        if (k == n - 1) return hi;
        return lo * std::exp(std::log(hi / lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
};

/// Affine map of outside air temperature onto [0, 1] (values outside the
/// calibration range extrapolate linearly).
struct ContextRange {
    double min = -10.0;
    double max = 15.0;

    void validate() const { require(std::isfinite(min) && std::isfinite(max) && max > min, "context range must be increasing"); }

    double normalize(double z) const { return (z - min) / (max - min); }

    bool operator==(const ContextRange&) const = default;
};

struct OptimizerConfig {
    double beta = 2.0;
    double epsilon = 0.05;
    PIGains initial{10.0, 0.01};
    GainDomain domain;

    void validate() const
    {
        require(std::isfinite(beta) && beta >= 0.0, "beta must be non-negative");
        require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 0.5)");
        initial.validate();
        domain.validate();
    }

    bool operator==(const OptimizerConfig&) const = default;
};

/// One set of fitted hyperparameters per surrogate.
struct SurrogateHyperparameters {
    std::array<Hyperparameters, cost_count> costs;
    std::array<Hyperparameters, constraint_count> constraints;

    bool operator==(const SurrogateHyperparameters&) const = default;
};

struct Observation {
    std::size_t day = 0;
    PIGains gains;
    double context = 0.0;
    NormalizedCosts costs;
};

/// Standard normal quantile.
inline double normal_quantile(double p)
{
    require(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace detail {

/// Candidate minimizing mean - beta * stddev; `candidates` must be ascending
/// so the first minimum found is the lowest (kp, ki).
inline std::size_t lcb_argmin(const PosteriorBatch& post, double beta, std::span<const std::size_t> candidates)
{
    require(!candidates.empty(), "no candidates to choose from");
    std::size_t best = candidates.front();
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t c : candidates) {
        const auto r = static_cast<Eigen::Index>(c);
        const double v = post.mean[r] - beta * std::sqrt(post.variance[r]);
        if (v < best_value) {
            best_value = v;
            best = c;
        }
    }
    return best;
}

} // namespace detail

/// Surrogates and bookkeeping of one optimizer run.
///
/// Cost models regress the normalized indexes J1..J4 with a constant basis
/// mean. Constraint models are zero-mean GPs on the slack J_i - c_i, so an
/// untrained constraint model is centred on its threshold. When
/// `contextual` is false the context dimension is dropped from every input.
class OptimizerState {
public:
    OptimizerState(OptimizerConfig config, ContextRange context, CostNormalization normalization,
                   SurrogateHyperparameters hyper, bool contextual, bool safe)
        : config_(std::move(config))
        , context_(context)
        , normalization_(normalization)
        , hyper_(std::move(hyper))
        , contextual_(contextual)
        , safe_(safe)
    {
        config_.validate();
        context_.validate();
        normalization_.validate();
        const std::size_t dim = contextual_ ? 3 : 2;
        for (std::size_t i = 0; i < cost_count; ++i) {
            require(hyper_.costs[i].kernel.input_dim() == dim, "cost kernel dimension does not match the inputs");
            costs_[i] = hyper_.costs[i].make_model();
        }
        if (safe_) {
            for (std::size_t i = 0; i < constraint_count; ++i) {
                require(hyper_.constraints[i].kernel.input_dim() == dim,
                        "constraint kernel dimension does not match the inputs");
                Hyperparameters h = hyper_.constraints[i];
                h.basis.reset();
                constraints_[i] = h.make_model();
            }
        }
        gain_points_ = config_.domain.normalized_points();
        initial_index_ = config_.domain.nearest(config_.initial);
    }

    const OptimizerConfig& config() const { return config_; }
    const GainDomain& domain() const { return config_.domain; }
    const ContextRange& context_range() const { return context_; }
    const CostNormalization& normalization() const { return normalization_; }
    const SurrogateHyperparameters& hyperparameters() const { return hyper_; }
    bool contextual() const { return contextual_; }
    bool safe() const { return safe_; }
    const std::vector<Observation>& observations() const { return log_; }
    const std::array<GPModel, cost_count>& cost_models() const { return costs_; }
    const std::array<GPModel, constraint_count>& constraint_models() const { return constraints_; }

    /// Grid index of the initial safe gains.
    std::size_t initial_index() const { return initial_index_; }
    PIGains initial_gains() const { return config_.domain.at(initial_index_); }

    Eigen::VectorXd input(const PIGains& g, double z) const
    {
        const Eigen::Vector2d a = config_.domain.normalize(g);
        if (!contextual_) return a;
        return Eigen::Vector3d(a[0], a[1], context_.normalize(z));
    }

    /// Kernel inputs for every grid node at context z.
    Eigen::MatrixXd grid_inputs(double z) const
    {
        if (!contextual_) return gain_points_;
        Eigen::MatrixXd x(gain_points_.rows(), 3);
        x.leftCols(2) = gain_points_;
        x.col(2).setConstant(context_.normalize(z));
        return x;
    }

    PosteriorBatch cost_posterior(double z) const
    {
        return combine_gps_batch(costs_, normalization_.weights, grid_inputs(z));
    }

    /// Posterior of constraint index i on the J scale (slack + threshold).
    PosteriorBatch constraint_posterior(std::size_t i, double z) const
    {
        require(safe_, "optimizer has no constraint models");
        require(i < constraint_count, "constraint index out of range");
        PosteriorBatch p = constraints_[i].posterior_batch(grid_inputs(z));
        p.mean.array() += normalization_.thresholds[i];
        return p;
    }

    /// Membership of each grid node before the empty-set fallback.
    std::vector<bool> safe_mask(double z) const
    {
        std::vector<bool> mask(config_.domain.size(), true);
        if (!safe_) return mask;
        const double q = normal_quantile(1.0 - config_.epsilon);
        for (std::size_t i = 0; i < constraint_count; ++i) {
            const PosteriorBatch p = constraint_posterior(i, z);
            for (std::size_t k = 0; k < mask.size(); ++k) {
                const auto r = static_cast<Eigen::Index>(k);
                if (p.mean[r] + q * std::sqrt(p.variance[r]) > normalization_.thresholds[i]) mask[k] = false;
            }
        }
        return mask;
    }

    /// Ascending grid indexes of the safe set; falls back to the initial
    /// gains when no node is certified.
    std::vector<std::size_t> safe_set(double z) const
    {
        const std::vector<bool> mask = safe_mask(z);
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (mask[k]) out.push_back(k);
        }
        if (out.empty()) out.push_back(initial_index_);
        return out;
    }

    std::size_t acquire_index(double z) const
    {
        const std::vector<std::size_t> s = safe_set(z);
        return detail::lcb_argmin(cost_posterior(z), config_.beta, s);
    }

    PIGains acquire(double z) const { return config_.domain.at(acquire_index(z)); }

    /// Safe node minimizing the combined posterior mean.
    std::size_t exploit_index(double z) const
    {
        const std::vector<std::size_t> s = safe_set(z);
        return detail::lcb_argmin(cost_posterior(z), 0.0, s);
    }

    void update(std::size_t day, const PIGains& gains, double z, const NormalizedCosts& observed)
    {
        for (double v : observed.j) {
            if (!std::isfinite(v)) throw NonFiniteValue("observed cost is not finite");
        }
        const Eigen::VectorXd x = input(gains, z);
        for (std::size_t i = 0; i < cost_count; ++i) costs_[i].add_observation(x, observed.j[i]);
        if (safe_) {
            for (std::size_t i = 0; i < constraint_count; ++i) {
                constraints_[i].add_observation(x, observed.j[i] - normalization_.thresholds[i]);
            }
        }
        log_.push_back({day, gains, z, observed});
    }

private:
    OptimizerConfig config_;
    ContextRange context_;
    CostNormalization normalization_;
    SurrogateHyperparameters hyper_;
    bool contextual_ = true;
    bool safe_ = true;
    std::array<GPModel, cost_count> costs_;
    std::array<GPModel, constraint_count> constraints_;
    std::vector<Observation> log_;
    Eigen::MatrixXd gain_points_;
    std::size_t initial_index_ = 0;
};

inline std::vector<std::size_t> safe_set(const OptimizerState& state, double z) { return state.safe_set(z); }

inline PIGains acquire(const OptimizerState& state, double z) { return state.acquire(z); }

inline OptimizerState update(OptimizerState state, std::size_t day, const PIGains& gains, double z,
                             const NormalizedCosts& observed)
{
    state.update(day, gains, z, observed);
    return state;
}

/// Context-free, unconstrained step: LCB argmin over the full grid.
inline PIGains baseline_bo_step(const OptimizerState& state, double z)
{
    require(!state.contextual() && !state.safe(), "BO baseline expects a context-free unconstrained state");
    return state.acquire(z);
}

/// Contextual, unconstrained step.
inline PIGains baseline_cbo_step(const OptimizerState& state, double z)
{
    require(state.contextual() && !state.safe(), "CBO baseline expects a contextual unconstrained state");
    return state.acquire(z);
}

} // namespace roomtune
