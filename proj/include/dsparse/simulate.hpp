#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "core.hpp"
#include "rng.hpp"

namespace dsparse {

struct ConstantMagnitude
{
    double value;
};

struct UniformMagnitude
{
    double lo;
    double hi;
};

/// Two-point {0, delta} signal of the lower-bound construction. In soft mode
/// each selected column gets floor(R_q / delta^q) entries equal to delta, so
/// its l_q mass equals R_q whenever delta^q s0 = R_q holds with integer s0.
struct LeastFavorableMagnitude
{
    double delta;
};

using Magnitude = std::variant<ConstantMagnitude, UniformMagnitude, LeastFavorableMagnitude>;

enum class SignPattern { positive, random };

struct SignalSpec
{
    SparsityBudget budget;
    Magnitude magnitude = ConstantMagnitude{1.0};
    SignPattern sign = SignPattern::positive;
    /// Soft mode only: nonzeros per selected column for non-least-favorable
    /// magnitudes (0 means d).
    Index soft_column_support = 0;
    /// Soft mode only: rescale each column so its l_q mass equals R_q.
    /// Columns whose mass exceeds R_q are always scaled down.
    bool rescale_to_budget = false;
};

/// l_q mass sum_i |v_i|^q of one column.
inline double lq_mass(const Eigen::Ref<const Eigen::VectorXd>& v, double q)
{
    double mass = 0.0;
    for (Index i = 0; i < v.size(); ++i) mass += std::pow(std::abs(v(i)), q);
    return mass;
}

/// Whether theta lies in the parameter space described by the budget.
/// The l_q check allows a relative slack of 1e-12 for the rescaling round-off.
inline bool in_parameter_space(const GroupedMatrix& theta, const SparsityBudget& budget)
{
    if (theta.rows() != budget.d() || theta.cols() != budget.m()) return false;
    const auto support = support_of(theta);
    const auto s = budget.s();
    if (budget.is_hard()) return support.in_double_sparse(s, budget.s0());
    if (budget.is_heterogeneous()) return support.in_heterogeneous(s, budget.total());
    if (static_cast<Index>(support.columns().size()) > s) return false;
    const auto& sp = budget.soft_params();
    for (Index j = 0; j < theta.cols(); ++j) {
        if (lq_mass(theta.column(j), sp.q) > sp.radius * (1.0 + 1e-12)) return false;
    }
    return true;
}

namespace detail {

inline double draw_magnitude(const Magnitude& magnitude, Stream& rng)
{
    if (auto c = std::get_if<ConstantMagnitude>(&magnitude)) return c->value;
    if (auto u = std::get_if<UniformMagnitude>(&magnitude)) return u->lo + (u->hi - u->lo) * rng.uniform();
    return std::get<LeastFavorableMagnitude>(magnitude).delta;
}

inline void validate_magnitude(const Magnitude& magnitude)
{
    if (auto c = std::get_if<ConstantMagnitude>(&magnitude)) {
        if (!(c->value != 0.0) || !std::isfinite(c->value)) fail("signal: constant magnitude must be nonzero");
    } else if (auto u = std::get_if<UniformMagnitude>(&magnitude)) {
        if (!(u->lo > 0.0 && u->hi >= u->lo) || !std::isfinite(u->hi)) fail("signal: uniform range needs 0 < lo <= hi");
    } else {
        const double delta = std::get<LeastFavorableMagnitude>(magnitude).delta;
        if (!(delta > 0.0) || !std::isfinite(delta)) fail("signal: least-favorable delta must be positive");
    }
}

} // namespace detail

/// Draw a signal from the budget's parameter space.
///
/// The s columns are chosen uniformly without replacement, then the rows of
/// each column (s0 per column in hard mode). Heterogeneous mode places one
/// entry in each chosen column and spreads the remaining s' - s uniformly
/// over the chosen columns.
inline GroupedMatrix gen_signal(const SignalSpec& spec, const StreamId& id)
{
    detail::validate_magnitude(spec.magnitude);
    const auto& budget = spec.budget;
    const Index m = budget.m();
    const Index d = budget.d();
    const Index s = budget.s();
    Stream rng(id.with_purpose(StreamPurpose::signal));

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(d, m);
    auto fill = [&](Index i, Index j) {
        double v = detail::draw_magnitude(spec.magnitude, rng);
        if (spec.sign == SignPattern::random && rng.coin()) v = -v;
        theta(i, j) = v;
    };

    const auto columns = rng.sample_without_replacement(m, s);
    if (budget.is_hard()) {
        for (Index j : columns) {
            for (Index i : rng.sample_without_replacement(d, budget.s0())) fill(i, j);
        }
    } else if (budget.is_heterogeneous()) {
        const Index total = budget.total();
        std::vector<Index> slots; // flat positions within the chosen columns
        const Index first = std::min(total, s);
        for (Index c = 0; c < first; ++c) slots.push_back(c * d + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d))));
        if (total > first) {
            std::vector<Index> rest;
            for (Index k = 0; k < s * d; ++k) {
                if (std::find(slots.begin(), slots.end(), k) == slots.end()) rest.push_back(k);
            }
            for (Index pick : rng.sample_without_replacement(static_cast<Index>(rest.size()), total - first)) {
                slots.push_back(rest[static_cast<std::size_t>(pick)]);
            }
        }
        std::sort(slots.begin(), slots.end());
        for (Index k : slots) fill(k % d, columns[static_cast<std::size_t>(k / d)]);
    } else {
        const auto& sp = budget.soft_params();
        Index per_column = spec.soft_column_support > 0 ? spec.soft_column_support : d;
        if (auto lf = std::get_if<LeastFavorableMagnitude>(&spec.magnitude)) {
            per_column = static_cast<Index>(std::floor(sp.radius / std::pow(lf->delta, sp.q) + 1e-9));
            if (per_column < 1) detail::fail("signal: delta^q exceeds R_q, no least-favorable column fits");
        }
        per_column = std::min(per_column, d);
        for (Index j : columns) {
            for (Index i : rng.sample_without_replacement(d, per_column)) fill(i, j);
            const double mass = lq_mass(theta.col(j), sp.q);
            const bool lf = std::holds_alternative<LeastFavorableMagnitude>(spec.magnitude);
            if (mass > sp.radius || (spec.rescale_to_budget && !lf)) {
                theta.col(j) *= std::pow(sp.radius / mass, 1.0 / sp.q);
            }
        }
    }

    GroupedMatrix out(std::move(theta));
    if (!in_parameter_space(out, budget)) {
        throw std::logic_error("gen_signal: generated signal violates its own budget");
    }
    return out;
}

/// Gaussian location model Y = theta* + Z with Z_ij ~ N(0, sigma^2 / n).
inline GroupedMatrix gen_glm(const GroupedMatrix& theta, const NoiseModel& noise, const StreamId& id)
{
    noise.validate();
    if (noise.sigma == 0.0) return theta;
    Stream rng(id.with_purpose(StreamPurpose::noise));
    const double sd = noise.sigma / std::sqrt(static_cast<double>(noise.n));
    Eigen::MatrixXd y = theta.values();
    for (Index k = 0; k < y.size(); ++k) y(k) += sd * rng.normal();
    return GroupedMatrix(std::move(y));
}

enum class DesignKind { identity_scaled, gaussian_iid };

/// Design with columns of norm sqrt(n). identity_scaled is sqrt(n) [I_p; 0];
/// gaussian_iid draws standard normals and rescales each column.
inline Eigen::MatrixXd gen_design(Index n, Index p, DesignKind kind, const StreamId& id)
{
    if (n < 1 || p < 1) detail::fail("gen_design: n and p must be positive");
    const double root_n = std::sqrt(static_cast<double>(n));
    if (kind == DesignKind::identity_scaled) {
        if (p > n) detail::fail("gen_design: identity_scaled needs p <= n, got p=", p, " n=", n);
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
        for (Index j = 0; j < p; ++j) x(j, j) = root_n;
        return x;
    }
    Stream rng(id.with_purpose(StreamPurpose::design));
    Eigen::MatrixXd x(n, p);
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
        x.col(j) *= root_n / x.col(j).norm();
    }
    return x;
}

/// Linear model Y = X beta* + xi with xi_i ~ N(0, sigma^2). Note the
/// per-coordinate variance is sigma^2 here, not sigma^2 / n as in gen_glm.
inline Eigen::VectorXd gen_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, const NoiseModel& noise,
                                      const StreamId& id)
{
    noise.validate();
    if (x.cols() != beta.size()) detail::fail("gen_regression: design has ", x.cols(), " columns, beta ", beta.size());
    Eigen::VectorXd y = x * beta;
    if (noise.sigma == 0.0) return y;
    Stream rng(id.with_purpose(StreamPurpose::noise));
    for (Index i = 0; i < y.size(); ++i) y(i) += noise.sigma * rng.normal();
    return y;
}

} // namespace dsparse
