// Test-only reference implementations. Kept deliberately naive and
// independent of the library code paths they check.
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double matern52(double r, double lengthscale, double variance)
{
    const double a = std::sqrt(5.0) * r / lengthscale;
    return variance * (1.0 + a + 5.0 * r * r / (3.0 * lengthscale * lengthscale)) * std::exp(-a);
}

/// Product kernel (kp, ki, z) written from the closed forms directly.
inline double product_kernel(const Eigen::Vector3d& x, const Eigen::Vector3d& y, double l0, double l1, double lz,
                             double variance)
{
    const double r = std::hypot((x[0] - y[0]) / l0, (x[1] - y[1]) / l1);
    const double dz = x[2] - y[2];
    return matern52(r, 1.0, variance) * std::exp(-dz * dz / (2.0 * lz * lz));
}

struct Dense {
    double mean;
    double variance;
};

/// Posterior via an explicit inverse of (K + diag I).
template <class Kernel>
Dense dense_posterior(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys, double diag,
                      double prior_mean, const Eigen::VectorXd& q, Kernel k)
{
    const auto n = static_cast<Eigen::Index>(xs.size());
    if (n == 0) return {prior_mean, k(q, q)};
    Eigen::MatrixXd kk(n, n);
    Eigen::VectorXd kq(n);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) kk(i, j) = k(xs[i], xs[j]);
        kk(i, i) += diag;
        kq[i] = k(q, xs[i]);
        y[i] = ys[i] - prior_mean;
    }
    const Eigen::MatrixXd inv = kk.fullPivLu().inverse();
    return {prior_mean + kq.dot(inv * y), k(q, q) - kq.dot(inv * kq)};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace oracle
