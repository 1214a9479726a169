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
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "roomtune/gp.hpp"

namespace roomtune {

/// Hyperparameters of one surrogate: kernel, observation noise and the
/// optional constant mean coefficient.
struct Hyperparameters {
    KernelSpec kernel;
    double noise_variance = 1e-2;
    std::optional<double> basis;

    GPModel make_model() const { return GPModel(kernel, noise_variance, basis); }

    bool operator==(const Hyperparameters&) const = default;
};

/// Box for the log-likelihood search. Lengthscales are in normalized input
/// units; variances bound both the signal and the noise variance.
struct FitBounds {
    double lengthscale_min = 0.05;
    double lengthscale_max = 10.0;
    double variance_min = 1e-4;
    double variance_max = 10.0;
};

struct FitOptions {
    FitBounds bounds;
    int restarts = 5;
    int max_iterations = 300;
    std::uint64_t seed = 0;
};

struct FitResult {
    Hyperparameters hyper;
    double log_marginal_likelihood = -std::numeric_limits<double>::infinity();
    /// Set when the targets carry no information (constant); `hyper` then
    /// holds the template values.
    bool degenerate = false;
};

/// Log-parameter vector layout: (log l_1, ..., log l_d, log signal variance,
/// log noise variance).
inline Eigen::VectorXd to_log_parameters(const KernelSpec& kernel, double noise_variance)
{
    const auto d = static_cast<Eigen::Index>(kernel.input_dim());
    Eigen::VectorXd theta(d + 2);
    for (Eigen::Index i = 0; i < d; ++i) theta[i] = std::log(kernel.lengthscales[i]);
    theta[d] = std::log(kernel.signal_variance);
    theta[d + 1] = std::log(noise_variance);
    return theta;
}

inline std::pair<KernelSpec, double> from_log_parameters(const KernelSpec& templ, const Eigen::VectorXd& theta)
{
    KernelSpec k = templ;
    const auto d = static_cast<Eigen::Index>(templ.input_dim());
    require(theta.size() == d + 2, "log-parameter vector has wrong size");
    for (Eigen::Index i = 0; i < d; ++i) k.lengthscales[i] = std::exp(theta[i]);
    k.signal_variance = std::exp(theta[d]);
    return {k, std::exp(theta[d + 1])};
}

struct LikelihoodValue {
    double value = -std::numeric_limits<double>::infinity();
    /// Gradient with respect to the log-parameter vector.
    Eigen::VectorXd gradient;
    /// Generalized least squares estimate of the constant mean (basis only).
    std::optional<double> basis;
};

/// Log marginal likelihood of (inputs, targets). When `with_basis` is set the
/// constant mean is concentrated out by generalized least squares; its
/// gradient contribution vanishes at the GLS estimate.
inline LikelihoodValue log_marginal_likelihood(const KernelSpec& kernel, double noise_variance, bool with_basis,
                                               const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                               bool want_gradient = true)
{
    require(inputs.rows() == targets.size() && inputs.rows() > 0, "likelihood needs matching, non-empty data");
    const Eigen::Index n = inputs.rows();
    const auto d = static_cast<Eigen::Index>(kernel.input_dim());

    Eigen::MatrixXd k = gram_matrix(kernel, inputs);
    k.diagonal().array() += noise_variance + gram_jitter * kernel.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    LikelihoodValue out;
    if (llt.info() != Eigen::Success) return out;

    Eigen::VectorXd residual = targets;
    if (with_basis) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd kinv_ones = llt.solve(ones);
        const double alpha = kinv_ones.dot(targets) / kinv_ones.dot(ones);
        residual.array() -= alpha;
        out.basis = alpha;
    }
    const Eigen::VectorXd beta = llt.solve(residual);
    const Eigen::MatrixXd& l = llt.matrixLLT();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    out.value = -0.5 * residual.dot(beta) - 0.5 * log_det
                - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!want_gradient) return out;

    // dL/dtheta_j = 0.5 tr((beta beta^T - K^-1) dK/dtheta_j)
    Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(n, n));
    w = beta * beta.transpose() - w;

    out.gradient = Eigen::VectorXd::Zero(d + 2);
    std::vector<double> g(static_cast<std::size_t>(d + 1));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            kernel_log_gradient(kernel, inputs.row(i), inputs.row(j), g);
            const double weight = (i == j ? 0.5 : 1.0) * w(i, j);
            for (Eigen::Index p = 0; p <= d; ++p) out.gradient[p] += weight * g[static_cast<std::size_t>(p)];
        }
    }
    // The jitter scales with the signal variance.
    out.gradient[d] += 0.5 * gram_jitter * kernel.signal_variance * w.trace();
    out.gradient[d + 1] = 0.5 * noise_variance * w.trace();
    return out;
}

namespace detail {

struct BoxedObjective {
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)> eval;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

inline Eigen::VectorXd project(const BoxedObjective& obj, Eigen::VectorXd x)
{
    return x.cwiseMax(obj.lower).cwiseMin(obj.upper);
}

/// Gradient with components zeroed where a bound blocks descent.
inline Eigen::VectorXd projected_gradient(const BoxedObjective& obj, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& g)
{
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x[i] <= obj.lower[i] && g[i] > 0.0) || (x[i] >= obj.upper[i] && g[i] < 0.0)) pg[i] = 0.0;
    }
    return pg;
}

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
};

/// Projected BFGS with Armijo backtracking on a box. Coordinates held at an
/// active bound are removed from the quasi-Newton direction.
inline MinimizeResult minimize_box(const BoxedObjective& obj, Eigen::VectorXd x, int max_iterations,
                                   double gradient_tolerance = 1e-7)
{
    const Eigen::Index n = x.size();
    x = project(obj, x);
    auto [f, g] = obj.eval(x);
    if (!std::isfinite(f)) return {x, f};
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd pg = projected_gradient(obj, x, g);
        if (pg.lpNorm<Eigen::Infinity>() < gradient_tolerance) break;

        std::vector<bool> active(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = (pg[i] == 0.0 && g[i] != 0.0);
        Eigen::MatrixXd hr = h;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            hr.row(i).setZero();
            hr.col(i).setZero();
        }
        Eigen::VectorXd dir = -(hr * pg);
        if (dir.dot(pg) >= 0.0) {
            h.setIdentity();
            dir = -pg;
        }

        double step = 1.0;
        const double max_move = dir.lpNorm<Eigen::Infinity>();
        if (max_move > 2.0) step = 2.0 / max_move;
        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = 0.0;
        Eigen::VectorXd g_new;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = project(obj, x + step * dir);
            auto [fv, gv] = obj.eval(x_new);
            if (std::isfinite(fv) && fv <= f + 1e-4 * g.dot(x_new - x)) {
                f_new = fv;
                g_new = std::move(gv);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (h.isIdentity()) break;
            h.setIdentity();
            continue;
        }
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const bool stalled = std::abs(f - f_new) <= 1e-15 * (1.0 + std::abs(f)) && s.norm() < 1e-12;
        x = std::move(x_new);
        f = f_new;
        g = std::move(g_new);
        if (stalled) break;
    }
    return {x, f};
}

inline bool targets_constant(const Eigen::VectorXd& y)
{
    const double span = y.maxCoeff() - y.minCoeff();
    return span <= 1e-12 * (1.0 + y.cwiseAbs().maxCoeff());
}

} // namespace detail

inline detail::BoxedObjective likelihood_objective(const KernelSpec& templ, bool with_basis, const Eigen::MatrixXd& inputs,
                                                   const Eigen::VectorXd& targets, const FitBounds& bounds)
{
    const auto d = static_cast<Eigen::Index>(templ.input_dim());
    detail::BoxedObjective obj;
    obj.lower.resize(d + 2);
    obj.upper.resize(d + 2);
    obj.lower.head(d).setConstant(std::log(bounds.lengthscale_min));
    obj.upper.head(d).setConstant(std::log(bounds.lengthscale_max));
    obj.lower.tail(2).setConstant(std::log(bounds.variance_min));
    obj.upper.tail(2).setConstant(std::log(bounds.variance_max));
    obj.eval = [templ, with_basis, &inputs, &targets](const Eigen::VectorXd& theta) {
        const auto [kernel, noise] = from_log_parameters(templ, theta);
        LikelihoodValue v = log_marginal_likelihood(kernel, noise, with_basis, inputs, targets);
        if (!std::isfinite(v.value)) {
            return std::pair<double, Eigen::VectorXd>{std::numeric_limits<double>::infinity(),
                                                      Eigen::VectorXd::Zero(theta.size())};
        }
        return std::pair<double, Eigen::VectorXd>{-v.value, -v.gradient};
    };
    return obj;
}

/// Maximum-likelihood hyperparameters by multi-start projected BFGS in
/// log-parameter space. The template supplies the kernel family and the
/// first starting point; `opts.restarts` further starts are drawn uniformly
/// in the log box.
inline FitResult fit_hyperparameters(const Hyperparameters& templ, bool with_basis, const Eigen::MatrixXd& inputs,
                                     const Eigen::VectorXd& targets, const FitOptions& opts = {})
{
    require(inputs.rows() >= 10, "hyperparameter fitting needs at least 10 samples");
    require(inputs.rows() == targets.size(), "inputs and targets differ in length");
    require(static_cast<std::size_t>(inputs.cols()) == templ.kernel.input_dim(), "input dimension mismatch");
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        if (!std::isfinite(targets[i])) throw NonFiniteValue("calibration target is not finite");
    }
    templ.kernel.validate();

    FitResult result;
    result.hyper = templ;
    if (detail::targets_constant(targets)) {
        result.degenerate = true;
        if (with_basis) result.hyper.basis = targets[0];
        return result;
    }

    const detail::BoxedObjective obj = likelihood_objective(templ.kernel, with_basis, inputs, targets, opts.bounds);
    std::mt19937_64 rng(opts.seed);
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(to_log_parameters(templ.kernel, templ.noise_variance));
    for (int s = 0; s < opts.restarts; ++s) {
        Eigen::VectorXd x(obj.lower.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            std::uniform_real_distribution<double> u(obj.lower[i], obj.upper[i]);
            x[i] = u(rng);
        }
        starts.push_back(std::move(x));
    }

    detail::MinimizeResult best;
    for (const Eigen::VectorXd& x0 : starts) {
        detail::MinimizeResult r = detail::minimize_box(obj, x0, opts.max_iterations);
        if (r.f < best.f) best = std::move(r);
    }
    if (!std::isfinite(best.f)) {
        result.degenerate = true;
        return result;
    }
    const auto [kernel, noise] = from_log_parameters(templ.kernel, best.x);
    const LikelihoodValue v = log_marginal_likelihood(kernel, noise, with_basis, inputs, targets, false);
    result.hyper.kernel = kernel;
    result.hyper.noise_variance = noise;
    result.hyper.basis = with_basis ? v.basis : std::nullopt;
    result.log_marginal_likelihood = v.value;
    return result;
}

} // namespace roomtune
