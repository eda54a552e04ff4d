#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "combinatorics.hpp"
#include "core.hpp"
#include "threshold.hpp"

namespace dsparse {

/// Geometric threshold schedule lambda_{t+1} = sqrt(kappa) * lambda_t, run
/// while lambda_t >= lambda_inf.
struct ThresholdSchedule
{
    double lambda0 = 1.0;
    double kappa = 0.8;
    double lambda_inf = 0.1;

    void validate() const
    {
        if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) detail::fail("schedule: lambda0 must be positive, got ", lambda0);
        if (!(kappa > 0.0 && kappa < 1.0)) detail::fail("schedule: kappa must lie in (0, 1), got ", kappa);
        if (!(lambda_inf > 0.0) || !std::isfinite(lambda_inf)) {
            detail::fail("schedule: lambda_inf must be positive, got ", lambda_inf);
        }
    }
};

/// One entry of the iteration trace: the iterate beta_t and the threshold
/// lambda_t paired with it. The iteration bound at step t is stated against
/// lambda_t, so the entry for t carries lambda_t even though beta_t was
/// produced with lambda_{t-1}.
struct IterationStep
{
    double lambda = 0.0;
    Eigen::VectorXd beta;
    Index nonzero_columns = 0;
    Index max_column_nonzeros = 0;

    // Filled in only when the truth is supplied.
    std::optional<double> error;
    Index excess_size = 0;
    Index excess_columns = 0;
    Index excess_max_per_column = 0;
    bool excess_admissible = true;
    bool bound_held = true;
};

struct IterationTrace
{
    std::vector<IterationStep> steps; // iterations + 1 entries, beta_0 first

    std::size_t iterations() const { return steps.empty() ? 0 : steps.size() - 1; }

    bool all_bounds_held() const
    {
        return std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.bound_held; });
    }
    bool all_excess_admissible() const
    {
        return std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.excess_admissible; });
    }
};

struct DsihtResult
{
    Eigen::VectorXd beta_hat;
    IterationTrace trace;
    /// Set when lambda_inf > lambda0 and the loop never ran; beta_hat is beta0.
    bool empty_loop = false;
};

/// Per-iteration error constants of the two DSIHT variants.
inline const double kDsihtBoundConstant = 2.0 + std::sqrt(3.0);
inline const double kHeterogeneousBoundConstant = 2.0 + std::sqrt(2.0);

/// Default terminal threshold
/// sqrt(40 sigma^2 (log(e p / s) / s0 + log(e d / s0)) / n), natural logs.
inline constexpr double kLambdaInfFactor = 40.0;

inline double default_lambda_inf(double sigma, double n, double p, double d, double s, double s0)
{
    if (!(sigma >= 0.0) || !(n > 0.0) || !(p > 0.0) || !(d > 0.0) || !(s > 0.0) || !(s0 > 0.0)) {
        detail::fail("default_lambda_inf: arguments must be positive");
    }
    const double e = std::exp(1.0);
    const double bracket = std::log(e * p / s) / s0 + std::log(e * d / s0);
    return std::sqrt(kLambdaInfFactor * sigma * sigma * bracket / n);
}

/// Data-driven starting threshold ||X^T Y / n||_2 / sqrt(s s0).
inline double default_lambda0(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Index s, Index s0)
{
    const double n = static_cast<double>(x.rows());
    return (x.transpose() * y / n).norm() / std::sqrt(static_cast<double>(s * s0));
}

/// Number of loop passes the schedule performs, by direct simulation of the
/// floating-point recursion.
inline std::size_t schedule_length(const ThresholdSchedule& schedule)
{
    const double ratio = std::sqrt(schedule.kappa);
    std::size_t count = 0;
    for (double lambda = schedule.lambda0; lambda >= schedule.lambda_inf; lambda *= ratio) ++count;
    return count;
}

namespace detail {

inline void check_design(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Index p)
{
    if (x.rows() != y.size()) fail("design has ", x.rows(), " rows but response has length ", y.size());
    if (x.cols() != p) fail("design has ", x.cols(), " columns but the budget needs p = ", p);
    const double root_n = std::sqrt(static_cast<double>(x.rows()));
    for (Index j = 0; j < x.cols(); ++j) {
        const double norm = x.col(j).norm();
        if (!(std::abs(norm / root_n - 1.0) <= 1e-8)) {
            fail("design column ", j, " has norm ", norm, ", expected sqrt(n) = ", root_n);
        }
    }
}

template <class Operator>
DsihtResult run_dsiht(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SparsityBudget& budget,
                      const ThresholdSchedule& schedule, const Eigen::VectorXd& beta0,
                      const std::optional<Eigen::VectorXd>& truth, double bound_constant, Operator&& op)
{
    schedule.validate();
    check_design(x, y, budget.p());
    if (beta0.size() != budget.p()) fail("beta0 has length ", beta0.size(), ", expected ", budget.p());
    if (truth && truth->size() != budget.p()) fail("truth has length ", truth->size(), ", expected ", budget.p());

    const Index m = budget.m();
    const Index d = budget.d();
    const double n = static_cast<double>(x.rows());
    const double scale = std::sqrt(static_cast<double>(budget.s() * budget.s0()));

    std::optional<SupportSet> true_support;
    if (truth) true_support = support_of(vec_to_matrix(*truth, m, d));

    auto record = [&](double lambda, const Eigen::VectorXd& beta) {
        IterationStep step;
        step.lambda = lambda;
        step.beta = beta;
        const auto support = support_of(vec_to_matrix(beta, m, d));
        step.nonzero_columns = static_cast<Index>(support.columns().size());
        step.max_column_nonzeros = static_cast<Index>(support.max_per_column());
        if (truth) {
            const double err = (beta - *truth).norm();
            step.error = err;
            const auto excess = excess_support(support, *true_support);
            step.excess_size = static_cast<Index>(excess.size());
            step.excess_columns = static_cast<Index>(excess.columns().size());
            step.excess_max_per_column = static_cast<Index>(excess.max_per_column());
            step.excess_admissible = budget.is_heterogeneous()
                                         ? excess.in_heterogeneous(budget.s(), budget.total())
                                         : excess.in_double_sparse(budget.s(), budget.s0());
            step.bound_held = err <= bound_constant * scale * lambda;
        }
        return step;
    };

    DsihtResult out;
    const double ratio = std::sqrt(schedule.kappa);
    double lambda = schedule.lambda0;
    Eigen::VectorXd beta = beta0;
    Eigen::VectorXd previous = beta0;
    out.trace.steps.push_back(record(lambda, beta));

    std::size_t t = 0;
    while (lambda >= schedule.lambda_inf) {
        Eigen::VectorXd h = beta + x.transpose() * (y - x * beta) / n;
        if (!h.allFinite()) throw std::runtime_error("dsiht: non-finite gradient step at iteration " + std::to_string(t));
        const auto outcome = op(vec_to_matrix(h, m, d), lambda);
        previous = std::move(beta);
        beta = matrix_to_vec(outcome.result);
        lambda *= ratio;
        ++t;
        out.trace.steps.push_back(record(lambda, beta));
    }

    if (t == 0) {
        out.empty_loop = true;
        out.beta_hat = beta0;
    } else {
        // the algorithm reports beta_{t-1}, the iterate before the last update
        out.beta_hat = std::move(previous);
    }
    return out;
}

} // namespace detail

/// Double sparse iterative hard thresholding for a hard (s, s0) budget.
///
/// Iterates beta_{t+1} = T_{lambda_t}(beta_t + X^T (Y - X beta_t) / n) with a
/// geometric schedule and returns beta_{t-1}, the iterate preceding the last
/// update. Columns of X must have norm sqrt(n). When `truth` is supplied the
/// trace records the error, excess support and the (2 + sqrt 3) sqrt(s s0)
/// lambda_t bound at every step.
inline DsihtResult dsiht(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SparsityBudget& budget,
                         const ThresholdSchedule& schedule, const Eigen::VectorXd& beta0,
                         const std::optional<Eigen::VectorXd>& truth = std::nullopt)
{
    if (!budget.is_hard()) throw ValidationError("dsiht: needs a hard sparsity budget");
    return detail::run_dsiht(x, y, budget, schedule, beta0, truth, kDsihtBoundConstant,
                             [&](const GroupedMatrix& u, double lambda) { return threshold::apply(u, lambda, budget); });
}

/// The heterogeneous-sparsity variant (no row condition). Bound constant 2 + sqrt 2.
inline DsihtResult dsiht_heterogeneous(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const SparsityBudget& budget, const ThresholdSchedule& schedule,
                                       const Eigen::VectorXd& beta0,
                                       const std::optional<Eigen::VectorXd>& truth = std::nullopt)
{
    if (!budget.is_heterogeneous()) throw ValidationError("dsiht_heterogeneous: needs a heterogeneous budget");
    return detail::run_dsiht(x, y, budget, schedule, beta0, truth, kHeterogeneousBoundConstant,
                             [&](const GroupedMatrix& u, double lambda) {
                                 return threshold::apply_heterogeneous(u, lambda, budget);
                             });
}

/// Indices of the k largest |values|, ties broken towards the lower index.
inline std::vector<Index> top_k_indices(std::span<const double> values, Index k)
{
    std::vector<Index> order(values.size());
    std::iota(order.begin(), order.end(), Index{0});
    k = std::clamp<Index>(k, 0, static_cast<Index>(values.size()));
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
        const double ma = std::abs(values[static_cast<std::size_t>(a)]);
        const double mb = std::abs(values[static_cast<std::size_t>(b)]);
        return ma > mb || (ma == mb && a < b);
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

/// Euclidean projection onto Theta_0^{m,d}(s, s0): keep the s0 largest
/// magnitudes per column, then the s columns with the largest retained
/// energy. This is the constrained least-squares estimator of the Gaussian
/// location model.
inline GroupedMatrix project_double_sparse(const GroupedMatrix& y, Index s, Index s0)
{
    const Index d = y.rows();
    const Index m = y.cols();
    if (s < 1 || s > m) detail::fail("project_double_sparse: s must lie in [1, m], got ", s);
    if (s0 < 1 || s0 > d) detail::fail("project_double_sparse: s0 must lie in [1, d], got ", s0);

    Eigen::MatrixXd truncated = Eigen::MatrixXd::Zero(d, m);
    std::vector<double> energy(static_cast<std::size_t>(m), 0.0);
    for (Index j = 0; j < m; ++j) {
        const auto col = y.column(j);
        const std::span<const double> view(col.data(), static_cast<std::size_t>(d));
        for (Index i : top_k_indices(view, s0)) {
            truncated(i, j) = col(i);
            energy[static_cast<std::size_t>(j)] += col(i) * col(i);
        }
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, m);
    for (Index j : top_k_indices(energy, s)) out.col(j) = truncated.col(j);
    return GroupedMatrix(std::move(out));
}

inline constexpr double kBruteForceLimit = 1e6;

/// Global minimiser of ||Y - theta||_F^2 over a hard or heterogeneous budget
/// by enumerating maximal supports. The objective on a fixed support S is
/// ||Y||^2 - sum_S Y_ij^2, so the search maximises the retained energy; ties
/// keep the first support in lexicographic order.
inline GroupedMatrix constrained_ls_bruteforce(const GroupedMatrix& y, const SparsityBudget& budget)
{
    const Index d = y.rows();
    const Index m = y.cols();
    if (d != budget.d() || m != budget.m()) {
        detail::fail("constrained_ls_bruteforce: matrix is ", d, "x", m, " but budget is ", budget.d(), "x",
                     budget.m());
    }
    if (budget.is_soft()) {
        throw ValidationError("constrained_ls_bruteforce: soft budgets have no finite support enumeration");
    }
    const Index s = budget.s();
    const Eigen::MatrixXd& v = y.values();

    double best = -1.0;
    std::vector<Index> best_flat;
    auto consider = [&](std::span<const Index> flat) {
        double energy = 0.0;
        for (Index k : flat) energy += v(k) * v(k);
        if (energy > best) {
            best = energy;
            best_flat.assign(flat.begin(), flat.end());
        }
        return true;
    };

    if (budget.is_hard()) {
        const Index s0 = budget.s0();
        if (count_double_sparse_supports(m, d, s, s0) > kBruteForceLimit) {
            throw InstanceTooLarge("constrained_ls_bruteforce: more than 1e6 candidate supports");
        }
        for_each_double_sparse_support(m, d, s, s0, consider);
    } else {
        const Index total = budget.total();
        if (binomial(m, s) * binomial(s * d, total) > kBruteForceLimit) {
            throw InstanceTooLarge("constrained_ls_bruteforce: more than 1e6 candidate supports");
        }
        std::vector<Index> flat(static_cast<std::size_t>(total));
        for_each_combination(m, s, [&](std::span<const Index> cols) {
            return for_each_combination(s * d, total, [&](std::span<const Index> picks) {
                for (std::size_t k = 0; k < picks.size(); ++k) {
                    const Index c = cols[static_cast<std::size_t>(picks[k] / d)];
                    flat[k] = d * c + picks[k] % d;
                }
                return consider(flat);
            });
        });
    }

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, m);
    for (Index k : best_flat) out(k) = v(k);
    return GroupedMatrix(std::move(out));
}

/// Classical IHT: beta <- H_k(beta + X^T (Y - X beta) / n) from beta = 0,
/// where H_k keeps the k largest magnitudes (ties to the lower index).
inline Eigen::VectorXd iht_baseline(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Index k, Index steps)
{
    const Index p = x.cols();
    if (x.rows() != y.size()) detail::fail("iht_baseline: design has ", x.rows(), " rows but response ", y.size());
    if (k < 1 || k > p) detail::fail("iht_baseline: k must lie in [1, p], got ", k);
    if (steps < 0) detail::fail("iht_baseline: steps must be non-negative");
    const double n = static_cast<double>(x.rows());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (Index t = 0; t < steps; ++t) {
        const Eigen::VectorXd h = beta + x.transpose() * (y - x * beta) / n;
        if (!h.allFinite()) throw std::runtime_error("iht_baseline: non-finite gradient step");
        beta.setZero();
        for (Index i : top_k_indices(std::span<const double>(h.data(), static_cast<std::size_t>(p)), k)) beta(i) = h(i);
    }
    return beta;
}

} // namespace dsparse
