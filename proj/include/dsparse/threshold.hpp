#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"

namespace dsparse::threshold {

/// Result of the double-sparse thresholding operator.
///
/// `result` is zero outside `active_set` and equals the post-entrywise input
/// inside it. `selected_columns` is the column set J that passed the column
/// condition, `row_cut` is i_max (0 when no row depth qualifies).
struct ThresholdOutcome
{
    GroupedMatrix result;
    std::vector<Index> selected_columns;
    Index row_cut = 0;
    SupportSet active_set;
};

namespace detail {

inline void check_lambda(double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) dsparse::detail::fail("threshold: lambda must be positive, got ", lambda);
}

inline std::vector<Index> column_condition(const Eigen::MatrixXd& u, double lambda, Index s0)
{
    const double level = static_cast<double>(s0) * (lambda * lambda);
    std::vector<Index> selected;
    for (Index j = 0; j < u.cols(); ++j) {
        if (u.col(j).squaredNorm() >= level) selected.push_back(j);
    }
    return selected;
}

inline ThresholdOutcome keep_on(const Eigen::MatrixXd& u, std::vector<Index> selected, Index row_cut,
                                std::vector<Entry> active)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
    for (const auto& e : active) out(e.row, e.col) = u(e.row, e.col);
    return {GroupedMatrix(std::move(out)), std::move(selected), row_cut,
            SupportSet(u.rows(), u.cols(), std::move(active))};
}

} // namespace detail

/// T1: entrywise hard thresholding, keeping entries with |U_ij| >= lambda.
inline GroupedMatrix step1_entrywise(const GroupedMatrix& u, double lambda)
{
    detail::check_lambda(lambda);
    Eigen::MatrixXd out = u.values();
    for (Index k = 0; k < out.size(); ++k) {
        if (!(std::abs(out(k)) >= lambda)) out(k) = 0.0;
    }
    return GroupedMatrix(std::move(out));
}

/// T2: the matrix condition.
///
/// Column condition: J = { j : sum_i U_ij^2 >= s0 lambda^2 }.
/// Row condition: i_max is the largest depth i with
/// sum_j U_(i)j^2 >= s lambda^2, where U_(i)j is the i-th largest magnitude in
/// column j and the sum runs over all m columns.
/// Active set: (i, j) with j in J and #{k : |U_kj| >= |U_ij|} <= i_max. The
/// rank is counted with ties, so a tied column may keep fewer than i_max
/// entries.
inline ThresholdOutcome step2_matrix(const GroupedMatrix& u, double lambda, Index s, Index s0)
{
    detail::check_lambda(lambda);
    const Index d = u.rows();
    const Index m = u.cols();
    if (s < 1 || s > m) dsparse::detail::fail("step2_matrix: s must lie in [1, m], got ", s);
    if (s0 < 1 || s0 > d) dsparse::detail::fail("step2_matrix: s0 must lie in [1, d], got ", s0);

    const auto& values = u.values();
    auto selected = detail::column_condition(values, lambda, s0);

    // per-column magnitudes sorted non-increasing
    std::vector<std::vector<double>> sorted(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
        auto& col = sorted[static_cast<std::size_t>(j)];
        col.resize(static_cast<std::size_t>(d));
        for (Index i = 0; i < d; ++i) col[static_cast<std::size_t>(i)] = std::abs(values(i, j));
        std::sort(col.begin(), col.end(), std::greater<>());
    }

    const double row_level = static_cast<double>(s) * (lambda * lambda);
    Index row_cut = 0;
    for (Index i = 0; i < d; ++i) {
        double depth_energy = 0.0;
        for (Index j = 0; j < m; ++j) {
            const double v = sorted[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            depth_energy += v * v;
        }
        if (depth_energy >= row_level) row_cut = i + 1;
    }

    std::vector<Entry> active;
    if (row_cut > 0) {
        for (Index j : selected) {
            const auto& col = sorted[static_cast<std::size_t>(j)];
            for (Index i = 0; i < d; ++i) {
                const double mag = std::abs(values(i, j));
                // entries with magnitude >= mag form a prefix of the sorted column
                const auto rank = std::upper_bound(col.begin(), col.end(), mag, std::greater<>()) - col.begin();
                if (rank <= row_cut) active.push_back({i, j});
            }
        }
    }
    return detail::keep_on(values, std::move(selected), row_cut, std::move(active));
}

/// The double-sparse thresholding operator T2 o T1 for a hard budget.
inline ThresholdOutcome apply(const GroupedMatrix& u, double lambda, const SparsityBudget& budget)
{
    if (!budget.is_hard()) {
        throw ValidationError("threshold::apply: operator is defined for hard sparsity budgets only");
    }
    if (u.rows() != budget.d() || u.cols() != budget.m()) {
        dsparse::detail::fail("threshold::apply: matrix is ", u.rows(), "x", u.cols(), " but budget is ", budget.d(),
                              "x", budget.m());
    }
    return step2_matrix(step1_entrywise(u, lambda), lambda, budget.s(), budget.s0());
}

/// Variant for heterogeneous budgets: entrywise step, then the column
/// condition only. Every surviving entry of a selected column is kept and
/// `row_cut` is reported as d.
inline ThresholdOutcome apply_heterogeneous(const GroupedMatrix& u, double lambda, const SparsityBudget& budget)
{
    if (!budget.is_heterogeneous()) {
        throw ValidationError("threshold::apply_heterogeneous: needs a heterogeneous sparsity budget");
    }
    if (u.rows() != budget.d() || u.cols() != budget.m()) {
        dsparse::detail::fail("threshold::apply_heterogeneous: matrix is ", u.rows(), "x", u.cols(),
                              " but budget is ", budget.d(), "x", budget.m());
    }
    const auto kept = step1_entrywise(u, lambda);
    const auto& values = kept.values();
    auto selected = detail::column_condition(values, lambda, budget.s0());
    std::vector<Entry> active;
    for (Index j : selected) {
        for (Index i = 0; i < values.rows(); ++i) {
            if (values(i, j) != 0.0) active.push_back({i, j});
        }
    }
    return detail::keep_on(values, std::move(selected), values.rows(), std::move(active));
}

} // namespace dsparse::threshold
