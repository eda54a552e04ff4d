#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <set>

#include <dsparse/bounds.hpp>
#include <dsparse/io.hpp>

#include "oracles.hpp"

using namespace dsparse;

TEST(RateHard, HandValue)
{
    const auto r = rate_hard(1.0, 100, 20, 10, 2, 3);
    EXPECT_NEAR(r.total, 0.19829007011943706, 1e-15);
    EXPECT_EQ(r.total, r.group_term + r.within_term);
    EXPECT_EQ(r.regime, Regime::hard);
}

TEST(RateHard, SaturatedBudgetHasUnitLogs)
{
    // s = m and s0 = d leave ln(e) = 1 in both terms
    EXPECT_NEAR(rate_hard(1.0, 10, 5, 4, 5, 4).total, (5.0 + 20.0) / 10.0, 1e-14);
}

TEST(RateHard, QuadraticInSigmaAndMatchesOracle)
{
    Stream rng({9, 0, 0, StreamPurpose::generic});
    for (int trial = 0; trial < 200; ++trial) {
        const double m = 1 + static_cast<double>(rng.below(100));
        const double d = 1 + static_cast<double>(rng.below(100));
        const double s = 1 + static_cast<double>(rng.below(static_cast<std::uint64_t>(m)));
        const double s0 = 1 + static_cast<double>(rng.below(static_cast<std::uint64_t>(d)));
        const double sigma = 0.1 + 3 * rng.uniform();
        const double n = 10 + static_cast<double>(rng.below(5000));
        const double r = rate_hard(sigma, n, m, d, s, s0).total;
        EXPECT_NEAR(r, oracle::rate_hard(sigma, n, m, d, s, s0), 1e-13 * r);
        EXPECT_NEAR(rate_hard(2 * sigma, n, m, d, s, s0).total, 4 * r, 1e-13 * r);
    }
}

TEST(RateHard, RejectsEmptyBudget)
{
    EXPECT_THROW(rate_hard(1, 10, 5, 5, 0, 1), ValidationError);
    EXPECT_THROW(rate_hard(1, 10, 5, 5, 6, 1), ValidationError);
}

TEST(RateSoft, Example)
{
    const auto r = rate_soft(1.0, 400, 10, std::exp(4.0), 2, 0.5, 1.0);
    EXPECT_NEAR(r.within_term, 0.0632, 1e-4);
    EXPECT_NEAR(r.within_term, 2 * std::pow(0.01, 0.75), 1e-15);
    EXPECT_EQ(r.regime, Regime::soft);
}

TEST(RateSoft, EmptyGroupSetIsZero) { EXPECT_EQ(rate_soft(1, 100, 10, 10, 0, 0.5, 1).total, 0.0); }

TEST(RateSoft, SubstitutionRecoversHardScaling)
{
    // with R = s0 (sigma^2 ln d / n)^{q/2} the within-group cost becomes
    // s s0 sigma^2 ln(d) / n; the hard rate carries ln(e d / s0) there instead
    const double sigma = 1.3, n = 250, m = 40, d = 30, s = 3, s0 = 5;
    for (double q : {0.25, 0.5, 1.0}) {
        const double radius = s0 * std::pow(sigma * sigma * std::log(d) / n, q / 2);
        const auto soft = rate_soft(sigma, n, m, d, s, q, radius);
        const auto hard = rate_hard(sigma, n, m, d, s, s0);
        EXPECT_EQ(soft.group_term, hard.group_term);
        EXPECT_NEAR(soft.within_term, s * s0 * sigma * sigma * std::log(d) / n, 1e-13);
    }
}

TEST(CoveringHard, UnitLogValue) { EXPECT_NEAR(covering_bound_hard(std::exp(1.0), std::exp(1.0), 1, 1), 4.0, 1e-14); }

TEST(CoveringHard, IsRateTimesNOverSigmaSquared)
{
    EXPECT_NEAR(covering_bound_hard(50, 20, 3, 4), 300.0 / 4.0 * rate_hard(2.0, 300, 50, 20, 3, 4).total, 1e-11);
}

TEST(CoveringHard, IncreasesWithAmbientSize)
{
    double previous = 0.0;
    for (double m : {4.0, 8.0, 16.0, 32.0}) {
        const double v = covering_bound_hard(m, m, 2, 2);
        EXPECT_GT(v, previous);
        previous = v;
    }
}

TEST(CoveringHard, IncreasesInSparsityWhileGroupsStaySmall)
{
    const double m = 40, d = 24;
    for (double s = 1; 4 * (s + 1) <= m; ++s)
        for (double s0 = 1; 4 * s0 <= d; ++s0) EXPECT_LT(covering_bound_hard(m, d, s, s0), covering_bound_hard(m, d, s + 1, s0));
    for (double s = 1; 4 * s <= m; ++s)
        for (double s0 = 1; 4 * (s0 + 1) <= d; ++s0) EXPECT_LT(covering_bound_hard(m, d, s, s0), covering_bound_hard(m, d, s, s0 + 1));
}

TEST(CoveringSoft, UpperEdgeOfWindow)
{
    const double m = 30, d = 50, s = 3, q = 0.5, radius = 2;
    const auto window = covering_window_soft(d, s, q, radius);
    EXPECT_NEAR(window.hi, std::sqrt(s) * std::pow(radius, 1 / q), 1e-12);
    const double group = s * std::log(std::exp(1.0) * m / s);
    EXPECT_NEAR(covering_bound_soft(m, d, s, q, radius, window.hi) - group, s * std::log(d), 1e-12);
}

TEST(CoveringSoft, NonincreasingInRadius)
{
    const double m = 30, d = 50, s = 3, q = 0.7, radius = 2;
    const auto window = covering_window_soft(d, s, q, radius);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20; ++k) {
        const double eps = window.lo + (window.hi - window.lo) * k / 20.0;
        const double v = covering_bound_soft(m, d, s, q, radius, eps);
        EXPECT_LE(v, previous);
        previous = v;
    }
}

TEST(CoveringSoft, LinearCaseHandFormula)
{
    const double m = 12, d = 40, s = 2, radius = 1.5;
    const auto window = covering_window_soft(d, s, 1.0, radius);
    EXPECT_NEAR(window.lo, std::sqrt(s) * radius * std::sqrt(std::log(d) / d), 1e-14);
    const double eps = 0.5 * (window.lo + window.hi);
    const double want = s * std::log(std::exp(1.0) * m / s) + s * (s * radius * radius / (eps * eps)) * std::log(d);
    EXPECT_NEAR(covering_bound_soft(m, d, s, 1.0, radius, eps), want, 1e-12 * want);
}

TEST(CoveringSoft, OutsideWindowThrows)
{
    const auto window = covering_window_soft(50, 3, 0.5, 2);
    EXPECT_THROW(covering_bound_soft(30, 50, 3, 0.5, 2, window.hi * 1.01), ValidationError);
    EXPECT_THROW(covering_bound_soft(30, 50, 3, 0.5, 2, window.lo * 0.99), ValidationError);
}

TEST(GvSphere, SmallCases)
{
    const auto code = gv_sphere_packing(4, 2, 1);
    EXPECT_GE(code.size(), 2u);
    EXPECT_TRUE(code.meets_bound());
    EXPECT_EQ(gv_sphere_packing(6, 2, 4).size(), 1u);
}

TEST(GvSphere, WeightsDistancesAndBound)
{
    for (Index m = 3; m <= 10; ++m)
        for (Index k = 1; k <= m; ++k)
            for (Index rho = 0; rho <= 2 * k; ++rho) {
                const auto code = gv_sphere_packing(m, k, rho);
                ASSERT_TRUE(code.meets_bound());
                std::set<Word> distinct(code.words.begin(), code.words.end());
                ASSERT_EQ(distinct.size(), code.size());
                for (std::size_t a = 0; a < code.size(); ++a) {
                    Index weight = 0;
                    for (auto bit : code.words[a]) weight += bit;
                    ASSERT_EQ(weight, k);
                    for (std::size_t b = a + 1; b < code.size(); ++b) ASSERT_GT(hamming(code.words[a], code.words[b]), rho);
                }
            }
}

TEST(GvQary, SmallCases)
{
    const auto repetition = gv_qary_code(2, 3, 3);
    EXPECT_GE(repetition.size(), 2u);
    EXPECT_TRUE(repetition.meets_bound());
    EXPECT_EQ(gv_qary_code(3, 2, 1).size(), 9u);
    EXPECT_THROW(gv_qary_code(1, 3, 1), ValidationError);
    EXPECT_THROW(gv_qary_code(3, 3, 4), ValidationError);
}

TEST(GvQary, DistancesAndBound)
{
    for (Index q = 2; q <= 5; ++q)
        for (Index n = 1; n <= 5; ++n)
            for (Index dist = 1; dist <= n; ++dist) {
                const auto code = gv_qary_code(q, n, dist);
                ASSERT_TRUE(code.meets_bound());
                for (std::size_t a = 0; a < code.size(); ++a)
                    for (std::size_t b = a + 1; b < code.size(); ++b) ASSERT_GE(hamming(code.words[a], code.words[b]), dist);
            }
}

TEST(Packing, FullPairwiseCheckAgainstMaterialisedElements)
{
    const auto set = build_product_packing(6, 6, 2, 2, 0.5);
    ASSERT_GT(set.size(), 1u);
    EXPECT_EQ(set.target, 1);
    EXPECT_TRUE(set.stages_meet_bounds());
    std::vector<Eigen::MatrixXd> elements;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto g = set.element(k);
        ASSERT_TRUE(support_of(g).in_double_sparse(2, 2));
        elements.push_back(g.values());
    }
    Index smallest = std::numeric_limits<Index>::max();
    for (std::size_t a = 0; a < elements.size(); ++a)
        for (std::size_t b = a + 1; b < elements.size(); ++b)
            smallest = std::min<Index>(smallest, (elements[a].array() != elements[b].array()).count());
    EXPECT_EQ(smallest, set.min_pairwise_hamming);
    EXPECT_GE(smallest, set.target);
}

TEST(Packing, SeparationAndSize)
{
    for (auto [m, d, s, s0] : {std::array<Index, 4>{8, 8, 2, 2}, {8, 4, 4, 4}, {10, 6, 3, 3}}) {
        const auto set = build_product_packing(m, d, s, s0);
        EXPECT_GE(set.min_pairwise_hamming, set.target) << m << ' ' << d << ' ' << s << ' ' << s0;
        EXPECT_EQ(min_pairwise_distance(set, 1), set.min_pairwise_hamming);
        EXPECT_TRUE(set.stages_meet_bounds());
        EXPECT_EQ(set.size(), set.column_locations.size() * set.pattern_code.size());
    }
}

TEST(Packing, GuardsAndValidation)
{
    EXPECT_THROW(build_product_packing(8, 8, 4, 4), InstanceTooLarge);
    EXPECT_THROW(build_product_packing(4, 4, 5, 1), ValidationError);
    EXPECT_THROW(build_product_packing(4, 4, 1, 1, 0.0), ValidationError);
}

TEST(Packing, CodebookRoundTrip)
{
    const auto set = build_product_packing(6, 5, 2, 2, -1.25);
    const auto book = io::codebook_from_text(io::codebook_text(set));
    EXPECT_EQ(book.m, 6);
    EXPECT_EQ(book.d, 5);
    EXPECT_EQ(book.magnitude, -1.25);
    EXPECT_EQ(book.min_distance, set.min_pairwise_hamming);
    ASSERT_EQ(book.elements.size(), set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
        Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(5, 6);
        for (const auto& [entry, value] : book.elements[k]) rebuilt(entry.row, entry.col) = value;
        ASSERT_EQ(rebuilt, set.element(k).values());
    }
}
