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

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "roomtune/errors.hpp"

namespace roomtune {

enum class KernelFamily {
    Matern52,
    SquaredExponential,
    /// Matérn 5/2 over the two gain inputs times a squared exponential over
    /// the context input. Input layout is (kp, ki, z).
    Product,
};

inline std::string to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::SquaredExponential: return "squared_exponential";
    case KernelFamily::Product: return "product";
    }
    return "unknown";
}

inline KernelFamily kernel_family_from_string(const std::string& name)
{
    if (name == "matern52") return KernelFamily::Matern52;
    if (name == "squared_exponential") return KernelFamily::SquaredExponential;
    if (name == "product") return KernelFamily::Product;
    throw ContractError("unknown kernel family '" + name + "'");
}

/// Stationary kernel with one lengthscale per input dimension.
struct KernelSpec {
    KernelFamily family = KernelFamily::Product;
    std::vector<double> lengthscales{0.2, 0.2, 0.5};
    double signal_variance = 1.0;

    static constexpr std::size_t product_gain_dims = 2;

    std::size_t input_dim() const { return lengthscales.size(); }

    void validate() const
    {
        require(!lengthscales.empty(), "kernel needs at least one lengthscale");
        for (double l : lengthscales) {
            require(std::isfinite(l) && l > 0.0, "kernel lengthscales must be positive");
        }
        require(std::isfinite(signal_variance) && signal_variance > 0.0,
                "kernel signal variance must be positive");
        if (family == KernelFamily::Product) {
            require(lengthscales.size() == product_gain_dims + 1,
                    "product kernel needs exactly two gain dimensions and one context dimension");
        }
    }

    bool operator==(const KernelSpec&) const = default;
};

namespace detail {

inline double matern52_shape(double r)
{
    const double s = std::sqrt(5.0) * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

/// Derivative of the Matérn 5/2 shape with respect to log(l_d), divided by
/// the squared scaled coordinate (dx_d / l_d)^2.
inline double matern52_log_lengthscale_factor(double r)
{
    const double s = std::sqrt(5.0) * r;
    return (5.0 / 3.0) * (1.0 + s) * std::exp(-s);
}

template <class A, class B>
void check_dims(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y)
{
    if (static_cast<std::size_t>(x.size()) != spec.input_dim()
        || static_cast<std::size_t>(y.size()) != spec.input_dim()) {
        throw ContractError("kernel input dimension mismatch: expected "
                            + std::to_string(spec.input_dim()) + ", got "
                            + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    }
}

} // namespace detail

/// k(x, x2). Dimensions are not checked here; see kernel_eval.
template <class A, class B>
double kernel_eval_unchecked(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                             const Eigen::MatrixBase<B>& y)
{
    const auto d = static_cast<Eigen::Index>(spec.lengthscales.size());
    switch (spec.family) {
    case KernelFamily::Matern52: {
        double r2 = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double u = (x[i] - y[i]) / spec.lengthscales[i];
            r2 += u * u;
        }
        return spec.signal_variance * detail::matern52_shape(std::sqrt(r2));
    }
    case KernelFamily::SquaredExponential: {
        double r2 = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double u = (x[i] - y[i]) / spec.lengthscales[i];
            r2 += u * u;
        }
        return spec.signal_variance * std::exp(-0.5 * r2);
    }
    case KernelFamily::Product: {
        const double u0 = (x[0] - y[0]) / spec.lengthscales[0];
        const double u1 = (x[1] - y[1]) / spec.lengthscales[1];
        const double uz = (x[2] - y[2]) / spec.lengthscales[2];
        return spec.signal_variance * detail::matern52_shape(std::sqrt(u0 * u0 + u1 * u1))
               * std::exp(-0.5 * uz * uz);
    }
    }
    return 0.0;
}

template <class A, class B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y)
{
    detail::check_dims(spec, x, y);
    return kernel_eval_unchecked(spec, x, y);
}

/// Gradient of k(x, y) with respect to (log l_1, ..., log l_d, log signal_variance).
template <class A, class B>
void kernel_log_gradient(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                         const Eigen::MatrixBase<B>& y, std::span<double> out)
{
    const std::size_t d = spec.lengthscales.size();
    require(out.size() == d + 1, "kernel gradient buffer has wrong size");
    std::array<double, 8> u2{};
    require(d <= u2.size(), "too many kernel dimensions");
    for (std::size_t i = 0; i < d; ++i) {
        const double u = (x[i] - y[i]) / spec.lengthscales[i];
        u2[i] = u * u;
    }
    switch (spec.family) {
    case KernelFamily::Matern52: {
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) r2 += u2[i];
        const double r = std::sqrt(r2);
        const double factor = spec.signal_variance * detail::matern52_log_lengthscale_factor(r);
        for (std::size_t i = 0; i < d; ++i) out[i] = factor * u2[i];
        out[d] = spec.signal_variance * detail::matern52_shape(r);
        break;
    }
    case KernelFamily::SquaredExponential: {
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) r2 += u2[i];
        const double k = spec.signal_variance * std::exp(-0.5 * r2);
        for (std::size_t i = 0; i < d; ++i) out[i] = k * u2[i];
        out[d] = k;
        break;
    }
    case KernelFamily::Product: {
        const double r = std::sqrt(u2[0] + u2[1]);
        const double se = std::exp(-0.5 * u2[2]);
        const double factor = spec.signal_variance * detail::matern52_log_lengthscale_factor(r) * se;
        const double k = spec.signal_variance * detail::matern52_shape(r) * se;
        out[0] = factor * u2[0];
        out[1] = factor * u2[1];
        out[2] = k * u2[2];
        out[3] = k;
        break;
    }
    }
}

/// Rows of `points` are input points.
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& points)
{
    require(points.rows() > 0, "gram matrix needs at least one point");
    require(static_cast<std::size_t>(points.cols()) == spec.input_dim(),
            "kernel input dimension mismatch");
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = spec.signal_variance;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = kernel_eval_unchecked(spec, points.row(i), points.row(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Cross-covariance matrix with entries k(a_i, b_j).
inline Eigen::MatrixXd cross_covariance(const KernelSpec& spec, const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& b)
{
    require(static_cast<std::size_t>(a.cols()) == spec.input_dim()
                && static_cast<std::size_t>(b.cols()) == spec.input_dim(),
            "kernel input dimension mismatch");
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            k(i, j) = kernel_eval_unchecked(spec, a.row(i), b.row(j));
        }
    }
    return k;
}

struct PosteriorEstimate {
    double mean = 0.0;
    double variance = 0.0;

    double stddev() const { return std::sqrt(variance); }
};

struct PosteriorBatch {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Relative diagonal jitter added to the Gram matrix before factorization.
inline constexpr double gram_jitter = 1e-9;

/// Exact GP regression model over a growing observation set.
///
/// The posterior is conditioned on (K + noise I + jitter I); the lower
/// Cholesky factor is extended by one row per observation, which gives the
/// same factor as a batch rebuild up to round-off. An optional constant
/// basis coefficient shifts the prior mean.
class GPModel {
public:
    GPModel() = default;

    GPModel(KernelSpec kernel, double noise_variance, std::optional<double> basis_coefficient = {})
        : kernel_(std::move(kernel))
        , noise_variance_(noise_variance)
        , basis_(basis_coefficient)
        , inputs_(0, static_cast<Eigen::Index>(kernel_.input_dim()))
    {
        kernel_.validate();
        require(std::isfinite(noise_variance) && noise_variance > 0.0,
                "noise variance must be positive");
        if (basis_) require(std::isfinite(*basis_), "basis coefficient must be finite");
    }

    const KernelSpec& kernel() const { return kernel_; }
    double noise_variance() const { return noise_variance_; }
    std::optional<double> basis_coefficient() const { return basis_; }
    double prior_mean() const { return basis_.value_or(0.0); }

    std::size_t size() const { return static_cast<std::size_t>(targets_.size()); }
    bool empty() const { return size() == 0; }

    /// n x d, one row per observation.
    const Eigen::MatrixXd& inputs() const { return inputs_; }
    const Eigen::VectorXd& targets() const { return targets_; }
    /// Lower-triangular factor of (K_t + I noise + I jitter).
    const Eigen::MatrixXd& gram_factor() const { return factor_; }

    double diagonal_offset() const { return noise_variance_ + gram_jitter * kernel_.signal_variance; }

    template <class A>
    void add_observation(const Eigen::MatrixBase<A>& x, double y)
    {
        if (!std::isfinite(y)) throw NonFiniteValue("GP observation target is not finite");
        require(static_cast<std::size_t>(x.size()) == kernel_.input_dim(),
                "GP observation input has wrong dimension");
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) throw NonFiniteValue("GP observation input is not finite");
        }
        const Eigen::Index n = inputs_.rows();
        Eigen::VectorXd kx(n);
        for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel_eval_unchecked(kernel_, inputs_.row(i), x);

        Eigen::VectorXd row = kx;
        if (n > 0) factor_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(row);
        const double pivot2 = kernel_.signal_variance + diagonal_offset() - row.squaredNorm();
        if (!(pivot2 > 0.0)) {
            throw ContractError("Gram matrix lost positive definiteness on update");
        }

        inputs_.conservativeResize(n + 1, Eigen::NoChange);
        inputs_.row(n) = x.transpose();
        targets_.conservativeResize(n + 1);
        targets_[n] = y;
        Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
        grown.topLeftCorner(n, n) = factor_;
        grown.block(n, 0, 1, n) = row.transpose();
        grown(n, n) = std::sqrt(pivot2);
        factor_ = std::move(grown);
        refresh_weights();
    }

    template <class A>
    GPModel with_observation(const Eigen::MatrixBase<A>& x, double y) const
    {
        GPModel next = *this;
        next.add_observation(x, y);
        return next;
    }

    template <class A>
    PosteriorEstimate posterior(const Eigen::MatrixBase<A>& x) const
    {
        require(static_cast<std::size_t>(x.size()) == kernel_.input_dim(),
                "GP query has wrong dimension");
        const double prior_var = kernel_.signal_variance;
        if (empty()) return {prior_mean(), prior_var};
        const Eigen::Index n = inputs_.rows();
        Eigen::VectorXd kx(n);
        for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel_eval_unchecked(kernel_, inputs_.row(i), x);
        const double mean = prior_mean() + kx.dot(weights_);
        factor_.triangularView<Eigen::Lower>().solveInPlace(kx);
        return {mean, std::max(0.0, prior_var - kx.squaredNorm())};
    }

    /// Posterior at each row of `queries`.
    PosteriorBatch posterior_batch(const Eigen::MatrixXd& queries) const
    {
        require(static_cast<std::size_t>(queries.cols()) == kernel_.input_dim(),
                "GP query has wrong dimension");
        const Eigen::Index m = queries.rows();
        PosteriorBatch out{Eigen::VectorXd::Constant(m, prior_mean()),
                           Eigen::VectorXd::Constant(m, kernel_.signal_variance)};
        if (empty() || m == 0) return out;
        Eigen::MatrixXd kxs = cross_covariance(kernel_, inputs_, queries);
        out.mean.noalias() += kxs.transpose() * weights_;
        factor_.triangularView<Eigen::Lower>().solveInPlace(kxs);
        out.variance -= kxs.colwise().squaredNorm().transpose();
        out.variance = out.variance.cwiseMax(0.0);
        return out;
    }

private:
    void refresh_weights()
    {
        weights_ = targets_.array() - prior_mean();
        factor_.triangularView<Eigen::Lower>().solveInPlace(weights_);
        factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(weights_);
    }

    KernelSpec kernel_;
    double noise_variance_ = 1e-2;
    std::optional<double> basis_;
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd targets_;
    Eigen::MatrixXd factor_;
    Eigen::VectorXd weights_;
};

/// Builds a model from a full observation set in one factorization.
inline GPModel build_gp(const KernelSpec& kernel, double noise_variance, std::optional<double> basis,
                        const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets)
{
    require(inputs.rows() == targets.size(), "inputs and targets differ in length");
    GPModel model(kernel, noise_variance, basis);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) model.add_observation(inputs.row(i).transpose(), targets[i]);
    return model;
}

/// Weighted sum of independent GPs: mean sum w_i mu_i, variance sum w_i^2 var_i.
template <class A>
PosteriorEstimate combine_gps(std::span<const GPModel> models, std::span<const double> weights,
                              const Eigen::MatrixBase<A>& x)
{
    require(models.size() == weights.size(), "one weight per model is required");
    PosteriorEstimate out;
    for (std::size_t i = 0; i < models.size(); ++i) {
        require(weights[i] > 0.0, "combination weights must be positive");
        const PosteriorEstimate p = models[i].posterior(x);
        out.mean += weights[i] * p.mean;
        out.variance += weights[i] * weights[i] * p.variance;
    }
    return out;
}

inline PosteriorBatch combine_gps_batch(std::span<const GPModel> models, std::span<const double> weights,
                                        const Eigen::MatrixXd& queries)
{
    require(models.size() == weights.size(), "one weight per model is required");
    PosteriorBatch out{Eigen::VectorXd::Zero(queries.rows()), Eigen::VectorXd::Zero(queries.rows())};
    for (std::size_t i = 0; i < models.size(); ++i) {
        require(weights[i] > 0.0, "combination weights must be positive");
        const PosteriorBatch p = models[i].posterior_batch(queries);
        out.mean += weights[i] * p.mean;
        out.variance += (weights[i] * weights[i]) * p.variance;
    }
    return out;
}

} // namespace roomtune
