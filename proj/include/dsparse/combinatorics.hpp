#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "core.hpp"

namespace dsparse {

/// C(n, k) as a double; exact for the magnitudes the guards allow.
inline double binomial(Index n, Index k)
{
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (Index i = 1; i <= k; ++i) {
        out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(out);
}

/// Visit every k-subset of [0, n) in lexicographic order. The visitor gets a
/// sorted span and returns false to stop early. Returns false if stopped.
template <class Visitor>
bool for_each_combination(Index n, Index k, Visitor&& visit)
{
    if (k < 0 || k > n) return true;
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        if (!visit(std::span<const Index>(idx))) return false;
        Index pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) return true;
        ++idx[static_cast<std::size_t>(pos)];
        for (Index i = pos + 1; i < k; ++i) {
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
        }
    }
}

/// Number of maximal supports in S^{m,d}(s, s0): s whole columns, s0 rows in each.
inline double count_double_sparse_supports(Index m, Index d, Index s, Index s0)
{
    return binomial(m, s) * std::pow(binomial(d, s0), static_cast<double>(s));
}

/// Visit every maximal support of S^{m,d}(s, s0) (exactly s columns with
/// exactly s0 rows each) as a list of flat indices d*col + row, increasing.
template <class Visitor>
bool for_each_double_sparse_support(Index m, Index d, Index s, Index s0, Visitor&& visit)
{
    std::vector<std::vector<Index>> row_sets;
    for_each_combination(d, s0, [&](std::span<const Index> rows) {
        row_sets.emplace_back(rows.begin(), rows.end());
        return true;
    });
    std::vector<Index> flat(static_cast<std::size_t>(s * s0));
    std::vector<std::size_t> choice(static_cast<std::size_t>(s));
    return for_each_combination(m, s, [&](std::span<const Index> cols) {
        std::fill(choice.begin(), choice.end(), 0);
        while (true) {
            std::size_t at = 0;
            for (std::size_t c = 0; c < cols.size(); ++c) {
                for (Index r : row_sets[choice[c]]) flat[at++] = d * cols[c] + r;
            }
            if (!visit(std::span<const Index>(flat))) return false;
            // odometer over the per-column row choices
            std::size_t c = cols.size();
            while (c > 0) {
                --c;
                if (++choice[c] < row_sets.size()) break;
                choice[c] = 0;
                if (c == 0) return true;
            }
            if (cols.empty()) return true;
        }
    });
}

} // namespace dsparse
