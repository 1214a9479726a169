#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roomtune/gp.hpp"

using namespace roomtune;

namespace {

KernelSpec random_product(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> l(0.1, 1.5);
    std::uniform_real_distribution<double> s(0.2, 3.0);
    return KernelSpec{KernelFamily::Product, {l(rng), l(rng), l(rng)}, s(rng)};
}

Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd p(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) p(i, j) = u(rng);
    return p;
}

} // namespace

TEST(Kernel, ZeroDistanceGivesSignalVariance)
{
    Eigen::Vector3d x(0.3, 0.7, 0.1);
    for (auto family : {KernelFamily::Matern52, KernelFamily::SquaredExponential, KernelFamily::Product}) {
        KernelSpec k{family, {0.4, 0.9, 0.2}, 2.5};
        EXPECT_DOUBLE_EQ(kernel_eval(k, x, x), 2.5);
    }
}

TEST(Kernel, SquaredExponentialDecays)
{
    KernelSpec k{KernelFamily::SquaredExponential, {1.0}, 1.0};
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 1e6;
    EXPECT_LE(kernel_eval(k, a, b), 1e-12);
}

TEST(Kernel, Matern52AtUnitDistance)
{
    // Closed form evaluated in a scratch script and cross-checked against
    // scikit-learn's Matern(nu=2.5).
    constexpr double expected = 0.5239941088318203;
    KernelSpec k{KernelFamily::Matern52, {1.0}, 1.0};
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 1.0;
    EXPECT_NEAR(kernel_eval(k, a, b), expected, 1e-15);
}

TEST(Kernel, ProductMatchesClosedForms)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        KernelSpec k = random_product(rng);
        Eigen::MatrixXd p = random_points(rng, 2, 3);
        Eigen::Vector3d x = p.row(0).transpose(), y = p.row(1).transpose();
        EXPECT_NEAR(kernel_eval(k, x, y),
                    oracle::product_kernel(x, y, k.lengthscales[0], k.lengthscales[1], k.lengthscales[2],
                                           k.signal_variance),
                    1e-13);
    }
}

TEST(Kernel, DimensionMismatchThrows)
{
    KernelSpec k;
    Eigen::VectorXd a(2), b(3);
    a.setZero();
    b.setZero();
    EXPECT_THROW(kernel_eval(k, a, b), ContractError);
    EXPECT_THROW(KernelSpec({KernelFamily::Product, {1.0, 1.0}, 1.0}).validate(), ContractError);
    EXPECT_THROW(KernelSpec({KernelFamily::Matern52, {1.0, -1.0}, 1.0}).validate(), ContractError);
}

TEST(Kernel, Symmetric)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        KernelSpec k = random_product(rng);
        Eigen::MatrixXd p = random_points(rng, 2, 3);
        EXPECT_EQ(kernel_eval(k, p.row(0), p.row(1)), kernel_eval(k, p.row(1), p.row(0)));
    }
}

TEST(Gram, SinglePointAndDuplicates)
{
    KernelSpec k{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.7};
    Eigen::MatrixXd one(1, 3);
    one << 0.1, 0.2, 0.3;
    EXPECT_DOUBLE_EQ(gram_matrix(k, one)(0, 0), 1.7);

    Eigen::MatrixXd two(2, 3);
    two << 0.1, 0.2, 0.3, 0.1, 0.2, 0.3;
    Eigen::MatrixXd g = gram_matrix(k, two);
    EXPECT_TRUE((g.array() == 1.7).all());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
    EXPECT_EQ(lu.rank(), 1);
}

TEST(Gram, MatchesEntrywiseLoop)
{
    std::mt19937_64 rng(5);
    KernelSpec k = random_product(rng);
    Eigen::MatrixXd p = random_points(rng, 5, 3);
    Eigen::MatrixXd g = gram_matrix(k, p);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(g(i, j), kernel_eval(k, p.row(i), p.row(j)));
}

TEST(Gram, PositiveSemidefinite)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 50);
        KernelSpec k = random_product(rng);
        Eigen::MatrixXd g = gram_matrix(k, random_points(rng, n, 3));
        g.diagonal().array() += 1e-9;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Posterior, PriorWithoutData)
{
    GPModel gp(KernelSpec{KernelFamily::Product, {0.3, 0.3, 0.5}, 0.8}, 0.01);
    const auto p = gp.posterior(Eigen::Vector3d(0.5, 0.5, 0.5));
    EXPECT_EQ(p.mean, 0.0);
    EXPECT_EQ(p.variance, 0.8);

    GPModel with_basis(KernelSpec{KernelFamily::Product, {0.3, 0.3, 0.5}, 0.8}, 0.01, 0.42);
    EXPECT_EQ(with_basis.posterior(Eigen::Vector3d(0.5, 0.5, 0.5)).mean, 0.42);
}

TEST(Posterior, InterpolatesNoiselessDatum)
{
    GPModel gp(KernelSpec{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.0}, 1e-12);
    const Eigen::Vector3d x(0.2, 0.4, 0.6);
    gp.add_observation(x, 1.25);
    const auto p = gp.posterior(x);
    EXPECT_NEAR(p.mean, 1.25, 1e-5);
    EXPECT_LE(p.variance, 1e-6);
}

TEST(Posterior, TwoObservationsMatchDenseSolve)
{
    KernelSpec k{KernelFamily::Product, {0.4, 0.25, 0.7}, 1.3};
    GPModel gp(k, 0.05);
    std::vector<Eigen::VectorXd> xs{Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(0.4, 0.1, 0.9)};
    std::vector<double> ys{0.7, -0.2};
    for (std::size_t i = 0; i < 2; ++i) gp.add_observation(xs[i], ys[i]);
    const Eigen::Vector3d q(0.3, 0.3, 0.5);
    auto kf = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return oracle::product_kernel(a, b, 0.4, 0.25, 0.7, 1.3);
    };
    const auto ref = oracle::dense_posterior(xs, ys, 0.05 + gram_jitter * 1.3, 0.0, q, kf);
    const auto p = gp.posterior(q);
    EXPECT_NEAR(p.mean, ref.mean, 1e-10);
    EXPECT_NEAR(p.variance, ref.variance, 1e-10);
}

TEST(Posterior, RandomInstancesMatchDenseSolve)
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 30; ++t) {
        KernelSpec k = random_product(rng);
        const double noise = 0.001 + 0.1 * std::uniform_real_distribution<double>()(rng);
        const double basis = n01(rng);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 30);
        Eigen::MatrixXd p = random_points(rng, n + 4, 3);
        GPModel gp(k, noise, basis);
        std::vector<Eigen::VectorXd> xs;
        std::vector<double> ys;
        for (Eigen::Index i = 0; i < n; ++i) {
            xs.push_back(p.row(i).transpose());
            ys.push_back(n01(rng));
            gp.add_observation(xs.back(), ys.back());
        }
        auto kf = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return kernel_eval(k, a, b); };
        for (Eigen::Index q = n; q < n + 4; ++q) {
            Eigen::VectorXd x = p.row(q).transpose();
            const auto ref = oracle::dense_posterior(xs, ys, noise + gram_jitter * k.signal_variance, basis, x, kf);
            const auto got = gp.posterior(x);
            EXPECT_NEAR(got.mean, ref.mean, 1e-8);
            EXPECT_NEAR(got.variance, std::max(0.0, ref.variance), 1e-8);
            EXPECT_LE(got.variance, k.signal_variance);
        }
    }
}

TEST(Posterior, BatchMatchesPointwise)
{
    std::mt19937_64 rng(2);
    KernelSpec k = random_product(rng);
    GPModel gp(k, 0.01, 0.3);
    Eigen::MatrixXd p = random_points(rng, 20, 3);
    for (int i = 0; i < 12; ++i) gp.add_observation(p.row(i).transpose(), std::sin(3.0 * p(i, 0)));
    const PosteriorBatch b = gp.posterior_batch(p);
    for (int i = 0; i < 20; ++i) {
        const auto one = gp.posterior(p.row(i).transpose());
        EXPECT_NEAR(b.mean[i], one.mean, 1e-12);
        EXPECT_NEAR(b.variance[i], one.variance, 1e-12);
    }
}

TEST(Posterior, BasisMeanRecoveredFarFromData)
{
    KernelSpec k{KernelFamily::Product, {0.1, 0.1, 0.1}, 1.0};
    GPModel gp(k, 0.01, 0.6);
    gp.add_observation(Eigen::Vector3d(0.0, 0.0, 0.0), 3.0);
    gp.add_observation(Eigen::Vector3d(0.05, 0.0, 0.02), -2.0);
    EXPECT_NEAR(gp.posterior(Eigen::Vector3d(2.0, 2.0, 2.0)).mean, 0.6, 1e-3);
}

TEST(AddObservation, RejectsNonFinite)
{
    GPModel gp(KernelSpec{}, 0.01);
    EXPECT_THROW(gp.add_observation(Eigen::Vector3d(0, 0, 0), std::nan("")), NonFiniteValue);
    EXPECT_THROW(gp.add_observation(Eigen::Vector3d(0, 0, 0), INFINITY), NonFiniteValue);
    EXPECT_EQ(gp.size(), 0u);
}

TEST(AddObservation, VarianceDecreasesElsewhere)
{
    GPModel gp(KernelSpec{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.0}, 0.01);
    const Eigen::Vector3d q(0.4, 0.4, 0.4);
    const double before = gp.posterior(q).variance;
    GPModel after = gp.with_observation(Eigen::Vector3d(0.5, 0.5, 0.5), 1.0);
    EXPECT_LT(after.posterior(q).variance, before);
    EXPECT_EQ(gp.size(), 0u);
}

TEST(AddObservation, DuplicatePointMatchesDenseSolve)
{
    KernelSpec k{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.0};
    const Eigen::Vector3d x(0.5, 0.5, 0.5);
    GPModel gp(k, 0.04);
    gp.add_observation(x, 0.9);
    const double once = gp.posterior(x).mean;
    gp.add_observation(x, 0.9);
    const double twice = gp.posterior(x).mean;

    // Dense solve on two duplicates: mean = 2 s y / (2 s + noise) with s = k(x,x).
    const double d = 0.04 + gram_jitter;
    EXPECT_NEAR(once, 0.9 / (1.0 + d), 1e-12);
    EXPECT_NEAR(twice, 2.0 * 0.9 / (2.0 + d), 1e-12);
    EXPECT_LT(std::abs(twice - 0.9), std::abs(once - 0.9));
}

TEST(AddObservation, IncrementalEqualsBatchUnderPermutation)
{
    std::mt19937_64 rng(99);
    KernelSpec k = random_product(rng);
    Eigen::MatrixXd p = random_points(rng, 10, 3);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y[i] = std::cos(4.0 * p(i, 1)) + p(i, 2);

    // Batch: a single Cholesky of the full Gram matrix.
    Eigen::MatrixXd full = gram_matrix(k, p);
    full.diagonal().array() += 0.02 + gram_jitter * k.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(full);
    const Eigen::VectorXd w = llt.solve((y.array() - 0.1).matrix());

    std::vector<int> order(10);
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd queries = random_points(rng, 8, 3);
    for (int perm = 0; perm < 5; ++perm) {
        std::shuffle(order.begin(), order.end(), rng);
        GPModel gp(k, 0.02, 0.1);
        for (int i : order) gp.add_observation(p.row(i).transpose(), y[i]);
        for (int q = 0; q < 8; ++q) {
            Eigen::VectorXd kq(10);
            for (int i = 0; i < 10; ++i) kq[i] = kernel_eval(k, p.row(i), queries.row(q));
            const double mean = 0.1 + kq.dot(w);
            const double var = k.signal_variance - kq.dot(llt.solve(kq));
            const auto got = gp.posterior(queries.row(q).transpose());
            EXPECT_NEAR(got.mean, mean, 1e-8);
            EXPECT_NEAR(got.variance, var, 1e-8);
        }
    }
}

TEST(Combine, IdenticalModels)
{
    KernelSpec k{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.0};
    std::vector<GPModel> models;
    for (int i = 0; i < 4; ++i) {
        GPModel m(k, 1e-12, 1.0);
        models.push_back(m);
    }
    const std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};
    const Eigen::Vector3d x(0.1, 0.1, 0.1);
    const auto prior = combine_gps(models, w, x);
    EXPECT_DOUBLE_EQ(prior.mean, 1.0);
    EXPECT_DOUBLE_EQ(prior.variance, 0.25 * 1.0);

    // Noiseless observation collapses all four variances to ~0.
    for (auto& m : models) m.add_observation(x, 1.0);
    const auto post = combine_gps(models, w, x);
    EXPECT_NEAR(post.mean, 1.0, 1e-6);
    EXPECT_NEAR(post.variance, 0.0, 1e-8);
}

TEST(Combine, DegenerateWeighting)
{
    KernelSpec k{KernelFamily::Product, {0.3, 0.3, 0.5}, 1.0};
    std::vector<GPModel> models;
    for (int i = 0; i < 4; ++i) models.emplace_back(k, 0.01, double(i));
    models[2].add_observation(Eigen::Vector3d(0.5, 0.5, 0.5), 5.0);
    const std::array<double, 4> w{1e-12, 1e-12, 1.0, 1e-12};
    const Eigen::Vector3d x(0.45, 0.5, 0.5);
    const auto c = combine_gps(models, w, x);
    const auto one = models[2].posterior(x);
    EXPECT_NEAR(c.mean, one.mean, 1e-10);
    EXPECT_NEAR(c.variance, one.variance, 1e-10);

    const std::array<double, 4> bad{0.5, 0.0, 0.25, 0.25};
    EXPECT_THROW(combine_gps(models, bad, x), ContractError);
}

TEST(Combine, UntrainedPriorsQuarterVariance)
{
    KernelSpec k{KernelFamily::Product, {0.3, 0.3, 0.5}, 0.64};
    std::vector<GPModel> models(4, GPModel(k, 0.01));
    const std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};
    Eigen::MatrixXd q(3, 3);
    q.setRandom();
    const PosteriorBatch b = combine_gps_batch(models, w, q);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b.variance[i], 0.25 * 0.64);
}
