#include <gtest/gtest.h>

#include <cmath>

#include <dsparse/diagnostics.hpp>
#include <dsparse/simulate.hpp>

#include "oracles.hpp"

using namespace dsparse;

namespace {

Eigen::MatrixXd scaled_identity(Index n) { return std::sqrt(static_cast<double>(n)) * Eigen::MatrixXd::Identity(n, n); }

Eigen::MatrixXd gaussian(Index n, Index p, std::uint64_t seed)
{
    return gen_design(n, p, DesignKind::gaussian_iid, {seed, 0, 0, StreamPurpose::generic});
}

} // namespace

TEST(Dsrip, IdentityDesignIsIsometric)
{
    const auto report = dsrip(scaled_identity(12), 4, 3, 2, 2, Exhaustive{});
    EXPECT_NEAR(report.upper, 12.0, 1e-12);
    EXPECT_NEAR(report.lower, 12.0, 1e-12);
    EXPECT_NEAR(report.delta, 0.0, 1e-14);
    EXPECT_EQ(report.method, "exhaustive");
    EXPECT_FALSE(report.is_lower_bound_on_delta);
}

TEST(Dsrip, DuplicatedColumnsAreRankDeficient)
{
    Eigen::MatrixXd x = gaussian(20, 12, 3);
    x.col(1) = x.col(0);
    const auto report = dsrip(x, 4, 3, 2, 2, Exhaustive{});
    EXPECT_NEAR(report.lower, 0.0, 1e-10);
    EXPECT_NEAR(report.delta, 1.0, 1e-10);
}

TEST(Dsrip, MonteCarloNeverExceedsExhaustive)
{
    const auto x = gaussian(10, 12, 4);
    const auto exact = dsrip(x, 4, 3, 2, 2, Exhaustive{});
    const auto sampled = dsrip(x, 4, 3, 2, 2, MonteCarlo{10000, {4, 0, 0, StreamPurpose::generic}});
    EXPECT_TRUE(sampled.is_lower_bound_on_delta);
    EXPECT_EQ(sampled.trials, 10000u);
    EXPECT_LE(sampled.delta, exact.delta);
    EXPECT_LE(sampled.upper, exact.upper);
    EXPECT_GE(sampled.lower, exact.lower);
}

TEST(Dsrip, ReportInvariants)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = dsrip(gaussian(8, 15, seed), 5, 3, 2, 2, Exhaustive{});
        EXPECT_LE(0.0, r.lower);
        EXPECT_LE(r.lower, r.upper);
        EXPECT_GE(r.delta, 0.0);
        EXPECT_LE(r.delta, 1.0);
    }
}

TEST(Dsrip, NondecreasingInBudget)
{
    const auto x = gaussian(9, 16, 5);
    double previous = -1.0;
    for (auto [s, s0] : {std::pair<Index, Index>{1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}}) {
        const double delta = dsrip(x, 4, 4, s, s0, Exhaustive{}).delta;
        EXPECT_GE(delta, previous);
        previous = delta;
    }
}

TEST(Dsrip, GuardsEnumerationSize)
{
    EXPECT_THROW(dsrip(gaussian(50, 400, 1), 20, 20, 4, 4, Exhaustive{}), InstanceTooLarge);
}

TEST(SparseEigen, IdentityDesign)
{
    const auto tau = sparse_eigen_constants(scaled_identity(16), 4, 4, 2, 2, Exhaustive{});
    EXPECT_NEAR(tau.tau_upper, 1.0, 1e-14);
    EXPECT_NEAR(tau.tau_lower, 1.0, 1e-14);
}

TEST(SparseEigen, RankDeficientSubmatrix)
{
    Eigen::MatrixXd x = gaussian(20, 16, 6);
    x.col(5) = -x.col(4);
    EXPECT_NEAR(sparse_eigen_constants(x, 4, 4, 2, 2, Exhaustive{}).tau_lower, 0.0, 1e-7);
}

TEST(SparseEigen, AgreesWithDsripDelta)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto x = gaussian(12, 16, seed);
        const auto tau = sparse_eigen_constants(x, 4, 4, 2, 2, Exhaustive{});
        const auto report = dsrip(x, 4, 4, 2, 2, Exhaustive{});
        const double ratio = tau.tau_lower / tau.tau_upper;
        EXPECT_NEAR(report.delta, 1.0 - ratio * ratio, 1e-10);
    }
}

TEST(NoiseEvent, ZeroNoise)
{
    EXPECT_EQ(noise_event_stat(gaussian(30, 20, 1), Eigen::VectorXd::Zero(30), 5, 4, 2, 2), 0.0);
}

TEST(NoiseEvent, ClosedFormMatchesEnumeration)
{
    Stream rng({12, 0, 0, StreamPurpose::generic});
    int checked = 0;
    for (int m = 1; m <= 5; ++m)
        for (int d = 1; d <= 5; ++d)
            for (int s = 1; s <= m; ++s)
                for (int s0 = 1; s0 <= d; ++s0) {
                    if (oracle::support_count(m, d, s, s0) > 1e4) continue;
                    const Index n = 25;
                    const auto x = gaussian(n, m * d, static_cast<std::uint64_t>(checked));
                    Eigen::VectorXd xi(n);
                    for (Index i = 0; i < n; ++i) xi(i) = rng.normal();
                    const auto corr = noise_correlations(x, xi, m, d);
                    const auto best = oracle::best_support(corr.values(), s, s0);
                    const double stat = noise_event_stat(x, xi, m, d, s, s0);
                    ASSERT_NEAR(stat, best.energy, 1e-12 * best.energy);
                    const auto closed = support_of(project_double_sparse(corr, s, s0));
                    ASSERT_EQ(closed.size(), best.entries.size());
                    for (auto [i, j] : best.entries) ASSERT_TRUE(closed.contains({i, j}));
                    ++checked;
                }
    EXPECT_GT(checked, 100);
}

TEST(NoiseEvent, BoundRarelyExceeded)
{
    const Index m = 20, d = 10, s = 3, s0 = 3, n = 200;
    const double sigma = 1.0;
    const auto x = gaussian(n, m * d, 77);
    const double bound = noise_event_bound(sigma, n, m * d, d, s, s0);
    int exceed = 0;
    const int replicates = 100;
    for (int r = 0; r < replicates; ++r) {
        const Eigen::VectorXd xi = gen_regression(x, Eigen::VectorXd::Zero(m * d), {sigma, n},
                                                  {77, 0, static_cast<std::uint64_t>(r), StreamPurpose::generic});
        exceed += noise_event_stat(x, xi, m, d, s, s0) > bound;
    }
    EXPECT_LE(exceed, replicates * 5 / 100);
}

TEST(RecSlack, Examples)
{
    const double d = 20.0;
    EXPECT_NEAR(rec_slack(1.0, std::log(d), 1.0, d, 1.0), 1.0, 1e-14);
    EXPECT_NEAR(rec_slack(2.0, 100, 4.0, d, 0.3), 2.0 * rec_slack(2.0, 100, 2.0, d, 0.3), 1e-15);
    EXPECT_NEAR(rec_slack(1.0, 400, 2.0, std::exp(4.0), 0.5), 2.0 * std::pow(0.01, 0.75), 1e-15);
    EXPECT_NEAR(rec_slack(1.0, 400, 2.0, std::exp(4.0), 0.5), 0.0632, 1e-4);
    EXPECT_THROW(rec_slack(1.0, 400, 2.0, 10.0, 0.0), ValidationError);
}
