#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "combinatorics.hpp"
#include "core.hpp"
#include "estimators.hpp"
#include "rng.hpp"

namespace dsparse {

struct Exhaustive
{
};

struct MonteCarlo
{
    std::size_t trials = 10000;
    StreamId stream{};
};

using DsripMethod = std::variant<Exhaustive, MonteCarlo>;

/// Extreme eigenvalues of X_S^T X_S over double-sparse supports S.
///
/// `delta` is 1 - lower / upper. Monte-Carlo reports only see sampled
/// supports, so their `upper` underestimates and `lower` overestimates the
/// true constants and `delta` is a lower bound on the true value.
struct DsripReport
{
    double upper = 0.0; // U_S
    double lower = 0.0; // L_S
    double delta = 0.0; // delta_S
    std::string method;
    std::size_t trials = 0;
    bool is_lower_bound_on_delta = false;
};

inline constexpr double kDsripEnumerationLimit = 1e5;
inline constexpr double kDegenerateEigenvalue = 1e-12;

namespace detail {

struct EigenRange
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;

    void include(double a, double b)
    {
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
};

inline EigenRange support_eigen_range(const Eigen::MatrixXd& x, std::span<const Index> columns)
{
    const Index k = static_cast<Index>(columns.size());
    Eigen::MatrixXd sub(x.rows(), k);
    for (Index c = 0; c < k; ++c) sub.col(c) = x.col(columns[static_cast<std::size_t>(c)]);
    const Eigen::MatrixXd gram = sub.transpose() * sub;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("dsrip: symmetric eigensolve failed");
    const auto& ev = solver.eigenvalues();
    EigenRange r;
    r.include(std::max(0.0, ev(0)), std::max(0.0, ev(k - 1)));
    return r;
}

inline void check_grouping(const Eigen::MatrixXd& x, Index m, Index d, Index s, Index s0)
{
    if (m < 1 || d < 1 || x.cols() != m * d) fail("dsrip: design has ", x.cols(), " columns, expected m*d = ", m * d);
    if (s < 1 || s > m) fail("dsrip: s must lie in [1, m], got ", s);
    if (s0 < 1 || s0 > d) fail("dsrip: s0 must lie in [1, d], got ", s0);
}

inline EigenRange eigen_range(const Eigen::MatrixXd& x, Index m, Index d, Index s, Index s0, const DsripMethod& method)
{
    check_grouping(x, m, d, s, s0);
    EigenRange range;
    if (std::holds_alternative<Exhaustive>(method)) {
        if (count_double_sparse_supports(m, d, s, s0) > kDsripEnumerationLimit) {
            throw InstanceTooLarge("dsrip: exhaustive enumeration over more than 1e5 supports");
        }
        // Maximal supports suffice for both extremes: by eigenvalue
        // interlacing a principal submatrix has lambda_max no larger and
        // lambda_min no smaller than the matrix containing it.
        for_each_double_sparse_support(m, d, s, s0, [&](std::span<const Index> cols) {
            const auto r = support_eigen_range(x, cols);
            range.include(r.lo, r.hi);
            return true;
        });
    } else {
        const auto& mc = std::get<MonteCarlo>(method);
        if (mc.trials == 0) fail("dsrip: Monte-Carlo needs at least one trial");
        Stream rng(mc.stream.with_purpose(StreamPurpose::support_sampling));
        std::vector<Index> flat;
        for (std::size_t t = 0; t < mc.trials; ++t) {
            flat.clear();
            for (Index c : rng.sample_without_replacement(m, s)) {
                for (Index r : rng.sample_without_replacement(d, s0)) flat.push_back(d * c + r);
            }
            const auto r = support_eigen_range(x, flat);
            range.include(r.lo, r.hi);
        }
    }
    return range;
}

} // namespace detail

/// Double-sparse restricted isometry constants of X over S^{m,d}(s, s0).
/// Supports with U_S below 1e-12 are degenerate and reported with delta = 1.
inline DsripReport dsrip(const Eigen::MatrixXd& x, Index m, Index d, Index s, Index s0, const DsripMethod& method)
{
    const auto range = detail::eigen_range(x, m, d, s, s0, method);
    DsripReport report;
    report.upper = range.hi;
    report.lower = range.lo;
    report.delta = range.hi < kDegenerateEigenvalue ? 1.0 : std::clamp(1.0 - range.lo / range.hi, 0.0, 1.0);
    if (auto mc = std::get_if<MonteCarlo>(&method)) {
        report.method = "monte_carlo";
        report.trials = mc->trials;
        report.is_lower_bound_on_delta = true;
    } else {
        report.method = "exhaustive";
    }
    return report;
}

struct SparseEigenConstants
{
    double tau_upper;
    double tau_lower;
};

/// tau_u = max_S sigma_max(X_S) / sqrt(n), tau_l = min_S sigma_min(X_S) / sqrt(n)
/// over S in S^{m,d}(s, s0). Callers pass the doubled budget (2s, 2s0).
inline SparseEigenConstants sparse_eigen_constants(const Eigen::MatrixXd& x, Index m, Index d, Index s, Index s0,
                                                   const DsripMethod& method)
{
    const auto range = detail::eigen_range(x, m, d, s, s0, method);
    const double root_n = std::sqrt(static_cast<double>(x.rows()));
    return {std::sqrt(range.hi) / root_n, std::sqrt(range.lo) / root_n};
}

/// Xi = Pi(X^T xi / n) reshaped to d x m.
inline GroupedMatrix noise_correlations(const Eigen::MatrixXd& x, const Eigen::VectorXd& xi, Index m, Index d)
{
    if (x.rows() != xi.size())
        detail::fail("noise_event_stat: design has ", x.rows(), " rows but noise has length ", xi.size());
    return vec_to_matrix(x.transpose() * xi / static_cast<double>(x.rows()), m, d);
}

/// max over S in S^{m,d}(s, s0) of sum_{(i,j) in S} Xi_ij^2, in closed form:
/// the top-s0 squared entries of each column, then the s best columns.
inline double noise_event_stat(const Eigen::MatrixXd& x, const Eigen::VectorXd& xi, Index m, Index d, Index s,
                               Index s0)
{
    const auto corr = noise_correlations(x, xi, m, d);
    const auto kept = project_double_sparse(corr, s, s0);
    return kept.squared_norm();
}

inline constexpr double kNoiseEventFactor = 10.0;

/// The event bound 10 sigma^2 s (log(e p / s) + s0 log(e d / s0)) / n.
inline double noise_event_bound(double sigma, double n, double p, double d, double s, double s0)
{
    const double e = std::exp(1.0);
    return kNoiseEventFactor * sigma * sigma * s * (std::log(e * p / s) + s0 * std::log(e * d / s0)) / n;
}

/// Slack of the restricted eigenvalue condition, s R_q (log d / n)^{1 - q/2}.
inline double rec_slack(double radius, double n, double s, double d, double q)
{
    if (!(q > 0.0 && q <= 1.0)) detail::fail("rec_slack: q must lie in (0, 1], got ", q);
    return s * radius * std::pow(std::log(d) / n, 1.0 - q / 2.0);
}

} // namespace dsparse
