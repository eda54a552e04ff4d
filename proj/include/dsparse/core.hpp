#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace dsparse {

using Index = Eigen::Index;

/// Thrown when an argument violates an operation's preconditions.
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an exact/enumerative routine is asked for more work than its
/// guard allows.
class InstanceTooLarge : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

namespace detail {

template <class... Parts>
[[noreturn]] void fail(const Parts&... parts)
{
    std::ostringstream os;
    (os << ... << parts);
    throw ValidationError(os.str());
}

} // namespace detail

/// A d x m real matrix whose columns are the groups of a length p = m*d
/// coefficient vector. Column j holds entries d*j .. d*j + d - 1 of the
/// vector (0-based), which is exactly Eigen's column-major layout.
class GroupedMatrix
{
public:
    GroupedMatrix(Index rows, Index cols) : values_(Eigen::MatrixXd::Zero(rows, cols))
    {
        if (rows <= 0 || cols <= 0) detail::fail("GroupedMatrix: shape must be positive, got ", rows, "x", cols);
    }

    explicit GroupedMatrix(Eigen::MatrixXd values) : values_(std::move(values))
    {
        if (values_.rows() <= 0 || values_.cols() <= 0) {
            detail::fail("GroupedMatrix: shape must be positive, got ", values_.rows(), "x", values_.cols());
        }
    }

    /// d, the group size.
    Index rows() const { return values_.rows(); }
    /// m, the number of groups.
    Index cols() const { return values_.cols(); }
    Index size() const { return values_.size(); }

    double operator()(Index i, Index j) const { return values_(i, j); }
    const Eigen::MatrixXd& values() const { return values_; }
    auto column(Index j) const { return values_.col(j); }

    double frobenius_norm() const { return values_.norm(); }
    double squared_norm() const { return values_.squaredNorm(); }

    friend bool operator==(const GroupedMatrix& a, const GroupedMatrix& b)
    {
        return a.rows() == b.rows() && a.cols() == b.cols() && a.values_ == b.values_;
    }

private:
    Eigen::MatrixXd values_;
};

/// Pi: reshape beta (length m*d) into the d x m grouped matrix.
inline GroupedMatrix vec_to_matrix(const Eigen::VectorXd& beta, Index m, Index d)
{
    if (m <= 0 || d <= 0) detail::fail("vec_to_matrix: m and d must be positive");
    if (beta.size() != m * d) {
        detail::fail("vec_to_matrix: length ", beta.size(), " does not equal m*d = ", m * d);
    }
    return GroupedMatrix(Eigen::Map<const Eigen::MatrixXd>(beta.data(), d, m));
}

/// Vec: inverse of vec_to_matrix.
inline Eigen::VectorXd matrix_to_vec(const GroupedMatrix& theta)
{
    return Eigen::Map<const Eigen::VectorXd>(theta.values().data(), theta.size());
}

// ---------------------------------------------------------------------------
// Sparsity budgets

struct HardSparsity
{
    Index s0;
};

struct SoftSparsity
{
    double q;
    double radius; // R_q, the per-column l_q mass
};

/// At most s groups and at most `total` nonzeros overall. s0 is the
/// per-column energy level used by the column condition of the thresholding
/// operator and by the iteration bound.
struct HeterogeneousSparsity
{
    Index s0;
    Index total;
};

class SparsityBudget
{
public:
    using Mode = std::variant<HardSparsity, SoftSparsity, HeterogeneousSparsity>;

    static SparsityBudget hard(Index m, Index d, Index s, Index s0)
    {
        SparsityBudget b(m, d, s, HardSparsity{s0});
        if (s0 < 1 || s0 > d) detail::fail("budget: s0 must lie in [1, d], got s0=", s0, " d=", d);
        return b;
    }

    static SparsityBudget soft(Index m, Index d, Index s, double q, double radius)
    {
        SparsityBudget b(m, d, s, SoftSparsity{q, radius});
        if (!(q > 0.0 && q <= 1.0)) detail::fail("budget: q must lie in (0, 1], got ", q);
        if (!(radius > 0.0) || !std::isfinite(radius)) detail::fail("budget: R_q must be positive, got ", radius);
        return b;
    }

    static SparsityBudget heterogeneous(Index m, Index d, Index s, Index s0, Index total)
    {
        SparsityBudget b(m, d, s, HeterogeneousSparsity{s0, total});
        if (s0 < 1 || s0 > d) detail::fail("budget: s0 must lie in [1, d], got s0=", s0, " d=", d);
        if (total < 1 || total > s * d) {
            detail::fail("budget: total sparsity s' must lie in [1, s*d], got ", total);
        }
        return b;
    }

    Index m() const { return m_; }
    Index d() const { return d_; }
    Index p() const { return m_ * d_; }
    Index s() const { return s_; }
    const Mode& mode() const { return mode_; }

    bool is_hard() const { return std::holds_alternative<HardSparsity>(mode_); }
    bool is_soft() const { return std::holds_alternative<SoftSparsity>(mode_); }
    bool is_heterogeneous() const { return std::holds_alternative<HeterogeneousSparsity>(mode_); }

    /// Per-column sparsity level; defined for hard and heterogeneous modes.
    Index s0() const
    {
        if (auto h = std::get_if<HardSparsity>(&mode_)) return h->s0;
        if (auto h = std::get_if<HeterogeneousSparsity>(&mode_)) return h->s0;
        throw ValidationError("budget: s0 is not defined for soft sparsity");
    }

    Index total() const
    {
        if (auto h = std::get_if<HeterogeneousSparsity>(&mode_)) return h->total;
        throw ValidationError("budget: total sparsity is only defined for heterogeneous budgets");
    }

    const SoftSparsity& soft_params() const
    {
        if (auto h = std::get_if<SoftSparsity>(&mode_)) return *h;
        throw ValidationError("budget: not a soft sparsity budget");
    }

private:
    SparsityBudget(Index m, Index d, Index s, Mode mode) : m_(m), d_(d), s_(s), mode_(mode)
    {
        if (m < 1 || d < 1) detail::fail("budget: m and d must be positive, got m=", m, " d=", d);
        if (s < 1 || s > m) detail::fail("budget: s must lie in [1, m], got s=", s, " m=", m);
    }

    Index m_;
    Index d_;
    Index s_;
    Mode mode_;
};

/// Evaluation of the soft-sparsity regime condition d / (R_q n^{q/2}) >= C1 d^delta >= C2
/// with C1 = C2 = 1. `exponent` is the largest delta for which the first
/// inequality holds. Outside the regime generators warn, they do not reject.
struct SoftRegimeCheck
{
    double ratio;
    double exponent;
    bool satisfied;
    std::string message;
};

inline SoftRegimeCheck check_soft_regime(const SparsityBudget& budget, Index n)
{
    const auto& sp = budget.soft_params();
    const double d = static_cast<double>(budget.d());
    const double ratio = d / (sp.radius * std::pow(static_cast<double>(n), sp.q / 2.0));
    const double exponent = d > 1.0 ? std::log(ratio) / std::log(d) : 0.0;
    const bool ok = ratio >= 1.0 && exponent > 0.0 && exponent < 1.0;
    std::ostringstream os;
    if (!ok) {
        os << "soft regime check: d/(R_q n^(q/2)) = " << ratio << " gives exponent " << exponent
           << ", outside (0, 1)";
    }
    return {ratio, exponent, ok, os.str()};
}

/// Observation noise. Its variance convention depends on the model using it.
struct NoiseModel
{
    double sigma = 1.0;
    Index n = 1;

    void validate() const
    {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) detail::fail("noise: sigma must be >= 0, got ", sigma);
        if (n < 1) detail::fail("noise: n must be positive, got ", n);
    }
};

// ---------------------------------------------------------------------------
// Supports

struct Entry
{
    Index row;
    Index col;

    friend bool operator==(const Entry&, const Entry&) = default;
    friend auto operator<=>(const Entry& a, const Entry& b)
    {
        if (auto c = a.col <=> b.col; c != 0) return c;
        return a.row <=> b.row;
    }
};

/// A set of (row, column) positions on a d x m grid. Stored sorted
/// column-major and duplicate free.
class SupportSet
{
public:
    SupportSet(Index rows, Index cols) : rows_(rows), cols_(cols) {}

    SupportSet(Index rows, Index cols, std::vector<Entry> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries))
    {
        for (const auto& e : entries_) {
            if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_) {
                detail::fail("SupportSet: entry (", e.row, ",", e.col, ") outside ", rows_, "x", cols_, " grid");
            }
        }
        std::sort(entries_.begin(), entries_.end());
        entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<Entry>& entries() const { return entries_; }

    bool contains(Entry e) const { return std::binary_search(entries_.begin(), entries_.end(), e); }

    /// Distinct columns touched, increasing.
    std::vector<Index> columns() const
    {
        std::vector<Index> out;
        for (const auto& e : entries_) {
            if (out.empty() || out.back() != e.col) out.push_back(e.col);
        }
        return out;
    }

    std::size_t max_per_column() const
    {
        std::size_t best = 0;
        std::size_t run = 0;
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            run = (k > 0 && entries_[k].col == entries_[k - 1].col) ? run + 1 : 1;
            best = std::max(best, run);
        }
        return best;
    }

    /// Membership in S^{m,d}(s, s0): at most s columns, at most s0 entries per column.
    bool in_double_sparse(Index s, Index s0) const
    {
        return static_cast<Index>(columns().size()) <= s && static_cast<Index>(max_per_column()) <= s0;
    }

    /// Membership in HS^{m,d}(s, s'): at most s columns, at most s' entries.
    bool in_heterogeneous(Index s, Index total) const
    {
        return static_cast<Index>(columns().size()) <= s && static_cast<Index>(size()) <= total;
    }

    friend bool operator==(const SupportSet&, const SupportSet&) = default;

private:
    Index rows_;
    Index cols_;
    std::vector<Entry> entries_;
};

inline SupportSet support_of(const GroupedMatrix& theta)
{
    std::vector<Entry> entries;
    for (Index j = 0; j < theta.cols(); ++j) {
        for (Index i = 0; i < theta.rows(); ++i) {
            if (theta(i, j) != 0.0) entries.push_back({i, j});
        }
    }
    return SupportSet(theta.rows(), theta.cols(), std::move(entries));
}

/// candidate \ truth.
inline SupportSet excess_support(const SupportSet& candidate, const SupportSet& truth)
{
    if (candidate.rows() != truth.rows() || candidate.cols() != truth.cols()) {
        detail::fail("excess_support: grids differ (", candidate.rows(), "x", candidate.cols(), " vs ", truth.rows(),
                     "x", truth.cols(), ")");
    }
    std::vector<Entry> out;
    std::set_difference(candidate.entries().begin(), candidate.entries().end(), truth.entries().begin(),
                        truth.entries().end(), std::back_inserter(out));
    return SupportSet(candidate.rows(), candidate.cols(), std::move(out));
}

} // namespace dsparse
