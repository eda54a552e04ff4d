#include <gtest/gtest.h>

#include <set>

#include <dsparse/combinatorics.hpp>
#include <dsparse/core.hpp>
#include <dsparse/rng.hpp>

using namespace dsparse;

TEST(VecToMatrix, ColumnsAreContiguousBlocks)
{
    Eigen::VectorXd beta(4);
    beta << 1, 2, 3, 4;
    const auto theta = vec_to_matrix(beta, 2, 2);
    EXPECT_EQ(theta.rows(), 2);
    EXPECT_EQ(theta.cols(), 2);
    EXPECT_EQ(theta(0, 0), 1);
    EXPECT_EQ(theta(1, 0), 2);
    EXPECT_EQ(theta(0, 1), 3);
    EXPECT_EQ(theta(1, 1), 4);
}

TEST(VecToMatrix, ZeroVectorGivesZeroMatrix)
{
    const auto theta = vec_to_matrix(Eigen::VectorXd::Zero(15), 3, 5);
    EXPECT_EQ(theta.values(), Eigen::MatrixXd::Zero(5, 3));
}

TEST(VecToMatrix, RoundTripIsBitExact)
{
    Stream rng({7, 0, 0, StreamPurpose::generic});
    for (auto [m, d] : {std::pair{3, 4}, {1, 12}, {12, 1}, {5, 7}}) {
        Eigen::VectorXd beta(m * d);
        for (Index k = 0; k < beta.size(); ++k) beta(k) = rng.normal() * 1e3;
        const auto back = matrix_to_vec(vec_to_matrix(beta, m, d));
        ASSERT_EQ(back.size(), beta.size());
        for (Index k = 0; k < beta.size(); ++k) EXPECT_EQ(back(k), beta(k));
        const auto theta = vec_to_matrix(beta, m, d);
        EXPECT_EQ(vec_to_matrix(matrix_to_vec(theta), m, d), theta);
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < d; ++i) EXPECT_EQ(theta(i, j), beta(d * j + i));
    }
}

TEST(VecToMatrix, NormIsPreserved)
{
    Stream rng({8, 0, 0, StreamPurpose::generic});
    Eigen::VectorXd beta(60);
    for (Index k = 0; k < beta.size(); ++k) beta(k) = rng.normal();
    EXPECT_NEAR(vec_to_matrix(beta, 6, 10).frobenius_norm() / beta.norm(), 1.0, 1e-14);
}

TEST(VecToMatrix, RejectsDimensionMismatch)
{
    EXPECT_THROW(vec_to_matrix(Eigen::VectorXd::Zero(5), 2, 2), ValidationError);
}

TEST(GroupedMatrixShape, RejectsEmptyShapes)
{
    EXPECT_THROW(GroupedMatrix(0, 3), ValidationError);
    EXPECT_THROW(GroupedMatrix(Eigen::MatrixXd(2, 0)), ValidationError);
}

TEST(Budget, HardBoundsAreChecked)
{
    EXPECT_NO_THROW(SparsityBudget::hard(4, 3, 4, 3));
    EXPECT_THROW(SparsityBudget::hard(4, 3, 5, 1), ValidationError);
    EXPECT_THROW(SparsityBudget::hard(4, 3, 1, 4), ValidationError);
    EXPECT_THROW(SparsityBudget::hard(4, 3, 0, 1), ValidationError);
}

TEST(Budget, HeterogeneousTotalIsCapped)
{
    EXPECT_NO_THROW(SparsityBudget::heterogeneous(4, 3, 2, 2, 6));
    EXPECT_THROW(SparsityBudget::heterogeneous(4, 3, 2, 2, 7), ValidationError);
    EXPECT_THROW(SparsityBudget::heterogeneous(4, 3, 2, 2, 0), ValidationError);
}

TEST(Budget, SoftParametersAreChecked)
{
    const auto b = SparsityBudget::soft(8, 16, 2, 0.5, 1.0);
    EXPECT_TRUE(b.is_soft());
    EXPECT_THROW(b.s0(), ValidationError);
    EXPECT_THROW(SparsityBudget::soft(8, 16, 2, 1.5, 1.0), ValidationError);
    EXPECT_THROW(SparsityBudget::soft(8, 16, 2, 0.5, -1.0), ValidationError);
}

TEST(Budget, SoftRegimeWarnsInsteadOfRejecting)
{
    const auto inside = check_soft_regime(SparsityBudget::soft(8, 1000, 2, 1.0, 1.0), 100);
    EXPECT_TRUE(inside.satisfied);
    const auto outside = check_soft_regime(SparsityBudget::soft(8, 4, 2, 1.0, 10.0), 10000);
    EXPECT_FALSE(outside.satisfied);
    EXPECT_FALSE(outside.message.empty());
}

TEST(Support, ZeroMatrixHasEmptySupport) { EXPECT_TRUE(support_of(GroupedMatrix(4, 5)).empty()); }

TEST(Support, SingleEntry)
{
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 5);
    v(2, 3) = -0.25;
    const auto support = support_of(GroupedMatrix(v));
    ASSERT_EQ(support.size(), 1u);
    EXPECT_TRUE(support.contains({2, 3}));
}

TEST(Support, ExcessSupport)
{
    const SupportSet truth(4, 4, {{0, 0}, {1, 0}, {2, 3}});
    EXPECT_TRUE(excess_support(truth, truth).empty());

    const SupportSet disjoint(4, 4, {{3, 1}, {0, 2}});
    EXPECT_EQ(excess_support(disjoint, truth), disjoint);

    const SupportSet cover(4, 4, {{0, 0}, {1, 0}, {2, 3}, {3, 2}});
    EXPECT_EQ(excess_support(cover, truth), SupportSet(4, 4, {{3, 2}}));

    EXPECT_THROW(excess_support(SupportSet(3, 4), truth), ValidationError);
}

TEST(Support, MembershipAgreesWithBruteForceCounting)
{
    Stream rng({11, 0, 0, StreamPurpose::generic});
    for (int trial = 0; trial < 10000; ++trial) {
        const Index d = 1 + static_cast<Index>(rng.below(6));
        const Index m = 1 + static_cast<Index>(rng.below(6));
        std::vector<Entry> entries;
        std::set<std::pair<Index, Index>> distinct;
        const auto count = rng.below(static_cast<std::uint64_t>(m * d + 1));
        for (std::uint64_t k = 0; k < count; ++k) {
            const Entry e{static_cast<Index>(rng.below(d)), static_cast<Index>(rng.below(m))};
            entries.push_back(e);
            distinct.insert({e.row, e.col});
        }
        const SupportSet set(d, m, entries);
        const Index s = 1 + static_cast<Index>(rng.below(m));
        const Index s0 = 1 + static_cast<Index>(rng.below(d));
        const Index total = 1 + static_cast<Index>(rng.below(m * d));

        std::vector<Index> per_column(static_cast<std::size_t>(m), 0);
        for (auto [i, j] : distinct) per_column[static_cast<std::size_t>(j)]++;
        Index used_columns = 0, widest = 0;
        for (Index c : per_column) {
            used_columns += c > 0;
            widest = std::max(widest, c);
        }
        ASSERT_EQ(set.size(), distinct.size());
        ASSERT_EQ(set.in_double_sparse(s, s0), used_columns <= s && widest <= s0);
        ASSERT_EQ(set.in_heterogeneous(s, total), used_columns <= s && static_cast<Index>(distinct.size()) <= total);
    }
}

TEST(Noise, ZeroSigmaIsAllowed)
{
    EXPECT_NO_THROW((NoiseModel{0.0, 10}.validate()));
    EXPECT_THROW((NoiseModel{-1.0, 10}.validate()), ValidationError);
    EXPECT_THROW((NoiseModel{1.0, 0}.validate()), ValidationError);
}

TEST(Streams, SameIdSameNumbers)
{
    Stream a({5, 2, 3, StreamPurpose::noise});
    Stream b({5, 2, 3, StreamPurpose::noise});
    for (int k = 0; k < 100; ++k) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Streams, DistinctIdsDiffer)
{
    Stream a({5, 2, 3, StreamPurpose::noise});
    Stream b({5, 2, 4, StreamPurpose::noise});
    Stream c({5, 2, 3, StreamPurpose::signal});
    const double x = a.uniform();
    EXPECT_NE(x, b.uniform());
    EXPECT_NE(x, c.uniform());
}

TEST(Streams, SamplingWithoutReplacementIsSortedAndDistinct)
{
    Stream rng({1, 0, 0, StreamPurpose::generic});
    for (int k = 0; k < 200; ++k) {
        const auto pick = rng.sample_without_replacement(20, 7);
        ASSERT_EQ(pick.size(), 7u);
        EXPECT_TRUE(std::is_sorted(pick.begin(), pick.end()));
        EXPECT_EQ(std::adjacent_find(pick.begin(), pick.end()), pick.end());
        EXPECT_GE(pick.front(), 0);
        EXPECT_LT(pick.back(), 20);
    }
}

TEST(Combinatorics, CountsAndEnumerationAgree)
{
    EXPECT_EQ(binomial(5, 2), 10.0);
    EXPECT_EQ(binomial(3, 0), 1.0);
    EXPECT_EQ(count_double_sparse_supports(4, 3, 2, 2), 6.0 * 9.0);
    std::size_t seen = 0;
    std::set<std::vector<Index>> unique;
    for_each_double_sparse_support(4, 3, 2, 2, [&](std::span<const Index> flat) {
        ++seen;
        unique.insert(std::vector<Index>(flat.begin(), flat.end()));
        return true;
    });
    EXPECT_EQ(seen, 54u);
    EXPECT_EQ(unique.size(), 54u);
}
