#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "combinatorics.hpp"
#include "core.hpp"

namespace dsparse {

// ---------------------------------------------------------------------------
// Rate formulas (natural logarithms throughout)

enum class Regime { hard, soft };

/// A minimax rate split into the cost of locating the nonzero groups and
/// the cost of estimating inside them.
struct RateValue
{
    double total = 0.0;
    double group_term = 0.0;
    double within_term = 0.0;
    Regime regime = Regime::hard;
};

/// sigma^2/n (s log(e m / s) + s s0 log(e d / s0)).
inline RateValue rate_hard(double sigma, double n, double m, double d, double s, double s0)
{
    if (!(n > 0.0) || !(s > 0.0) || !(s0 > 0.0) || s > m || s0 > d) {
        detail::fail("rate_hard: need n > 0, 0 < s <= m, 0 < s0 <= d");
    }
    const double e = std::exp(1.0);
    const double level = sigma * sigma / n;
    RateValue r;
    r.regime = Regime::hard;
    r.group_term = level * s * std::log(e * m / s);
    r.within_term = level * s * s0 * std::log(e * d / s0);
    r.total = r.group_term + r.within_term;
    return r;
}

/// sigma^2/n s log(e m / s) + s R_q (sigma^2 log(d) / n)^{1 - q/2}. s = 0 gives 0.
inline RateValue rate_soft(double sigma, double n, double m, double d, double s, double q, double radius)
{
    if (!(q > 0.0 && q <= 1.0)) detail::fail("rate_soft: q must lie in (0, 1], got ", q);
    if (!(n > 0.0) || s < 0.0 || s > m) detail::fail("rate_soft: need n > 0 and 0 <= s <= m");
    RateValue r;
    r.regime = Regime::soft;
    if (s == 0.0) return r;
    const double e = std::exp(1.0);
    r.group_term = sigma * sigma / n * s * std::log(e * m / s);
    r.within_term = s * radius * std::pow(sigma * sigma * std::log(d) / n, 1.0 - q / 2.0);
    r.total = r.group_term + r.within_term;
    return r;
}

/// Metric-entropy upper bound for Theta_0^{m,d}(s, s0):
/// s log(e m / s) + s s0 log(e d / s0).
inline double covering_bound_hard(double m, double d, double s, double s0)
{
    if (!(s > 0.0) || !(s0 > 0.0) || s > m || s0 > d) detail::fail("covering_bound_hard: need 0 < s <= m, 0 < s0 <= d");
    const double e = std::exp(1.0);
    return s * std::log(e * m / s) + s * s0 * std::log(e * d / s0);
}

struct CoveringWindow
{
    double lo;
    double hi;
};

/// Radii for which the soft covering bound applies:
/// [sqrt(s) C_q R_q^{1/q} (log d / d)^{(2-q)/(2q)}, sqrt(s) R_q^{1/q}].
inline CoveringWindow covering_window_soft(double d, double s, double q, double radius, double c_q = 1.0)
{
    const double scale = std::sqrt(s) * std::pow(radius, 1.0 / q);
    return {scale * c_q * std::pow(std::log(d) / d, (2.0 - q) / (2.0 * q)), scale};
}

/// Metric-entropy upper bound for Theta_q^{m,d}(s, R_q):
/// s log(e m / s) + s (C_q s R_q^{2/q} / eps^2)^{q/(2-q)} log d.
/// C_q is not pinned down by the theory; it defaults to 1.
inline double covering_bound_soft(double m, double d, double s, double q, double radius, double eps,
                                  double c_q = 1.0)
{
    if (!(q > 0.0 && q <= 1.0)) detail::fail("covering_bound_soft: q must lie in (0, 1], got ", q);
    if (!(s > 0.0) || s > m || !(radius > 0.0) || !(c_q > 0.0)) {
        detail::fail("covering_bound_soft: need 0 < s <= m, R_q > 0, C_q > 0");
    }
    const auto window = covering_window_soft(d, s, q, radius, c_q);
    // relative slack so the window edges themselves are accepted
    const double slack = 1e-12 * window.hi;
    if (!(eps >= window.lo - slack && eps <= window.hi + slack)) {
        detail::fail("covering_bound_soft: eps = ", eps, " outside the window [", window.lo, ", ", window.hi, "]");
    }
    const double e = std::exp(1.0);
    const double inner = c_q * s * std::pow(radius, 2.0 / q) / (eps * eps);
    return s * std::log(e * m / s) + s * std::pow(inner, q / (2.0 - q)) * std::log(d);
}

// ---------------------------------------------------------------------------
// Gilbert-Varshamov constructions

using Word = std::vector<std::uint32_t>;

inline Index hamming(const Word& a, const Word& b)
{
    Index dist = 0;
    for (std::size_t k = 0; k < a.size(); ++k) dist += a[k] != b[k];
    return dist;
}

/// Outcome of a greedy GV construction together with its counting bound.
struct GvCode
{
    std::vector<Word> words;
    Index length = 0;
    Index alphabet = 2;
    Index min_distance = 0; // guaranteed pairwise lower bound
    /// Counting bound with the ball volume summed from 0.
    double bound = 0.0;
    /// Sphere packings only: the bound with the sum started at 1 as printed
    /// in the classical statement; infinite when the radius is 0.
    double bound_from_one = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const { return words.size(); }
    bool meets_bound() const { return static_cast<double>(words.size()) >= bound; }
};

inline constexpr double kGvEnumerationLimit = 1e6;

/// Greedy maximal packing of the constant-weight sphere S_k of {0,1}^m:
/// scan weight-k words in lexicographic order of their sorted support and
/// keep a word iff it is at Hamming distance > rho from every kept word.
/// Maximality gives |code| >= C(m,k) / sum_{i=0}^{rho} C(m,i).
inline GvCode gv_sphere_packing(Index m, Index k, Index rho)
{
    if (m < 1 || k < 0 || k > m) detail::fail("gv_sphere_packing: need 0 <= k <= m, m >= 1");
    if (rho < 0) detail::fail("gv_sphere_packing: rho must be non-negative");
    if (binomial(m, k) > kGvEnumerationLimit) throw InstanceTooLarge("gv_sphere_packing: C(m, k) exceeds 1e6");

    GvCode code;
    code.length = m;
    code.alphabet = 2;
    code.min_distance = rho + 1;

    // Two weight-k words at distance 2(k - overlap); compare supports directly.
    std::vector<std::vector<Index>> kept;
    for_each_combination(m, k, [&](std::span<const Index> support) {
        for (const auto& other : kept) {
            Index overlap = 0;
            std::size_t a = 0;
            std::size_t b = 0;
            while (a < support.size() && b < other.size()) {
                if (support[a] == other[b]) {
                    ++overlap, ++a, ++b;
                } else if (support[a] < other[b]) {
                    ++a;
                } else {
                    ++b;
                }
            }
            if (2 * (k - overlap) <= rho) return true;
        }
        kept.emplace_back(support.begin(), support.end());
        return true;
    });

    for (const auto& support : kept) {
        Word w(static_cast<std::size_t>(m), 0);
        for (Index i : support) w[static_cast<std::size_t>(i)] = 1;
        code.words.push_back(std::move(w));
    }

    double ball = 0.0;
    for (Index i = 0; i <= rho; ++i) ball += binomial(m, i);
    code.bound = binomial(m, k) / ball;
    double ball_from_one = 0.0;
    for (Index i = 1; i <= rho; ++i) ball_from_one += binomial(m, i);
    code.bound_from_one = ball_from_one > 0.0 ? binomial(m, k) / ball_from_one : std::numeric_limits<double>::infinity();
    return code;
}

/// Greedy maximal q-ary code of the given length and minimum distance:
/// scan all q^length words lexicographically, keep a word iff it is at
/// distance >= min_dist from every kept word. Meets the GV bound
/// q^n / sum_{j=0}^{min_dist-1} C(n, j) (q-1)^j.
inline GvCode gv_qary_code(Index alphabet, Index length, Index min_dist, double budget = kGvEnumerationLimit)
{
    if (alphabet < 2) detail::fail("gv_qary_code: alphabet size must be >= 2, got ", alphabet);
    if (length < 1) detail::fail("gv_qary_code: length must be positive");
    if (min_dist < 1 || min_dist > length) detail::fail("gv_qary_code: min_dist must lie in [1, length]");
    const double space = std::pow(static_cast<double>(alphabet), static_cast<double>(length));
    if (space > budget) throw InstanceTooLarge("gv_qary_code: q^n exceeds the search budget");

    GvCode code;
    code.length = length;
    code.alphabet = alphabet;
    code.min_distance = min_dist;

    Word w(static_cast<std::size_t>(length), 0);
    while (true) {
        const bool far = std::all_of(code.words.begin(), code.words.end(),
                                     [&](const Word& other) { return hamming(w, other) >= min_dist; });
        if (far) code.words.push_back(w);
        Index pos = length - 1;
        while (pos >= 0 && w[static_cast<std::size_t>(pos)] + 1 == static_cast<std::uint32_t>(alphabet)) {
            w[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++w[static_cast<std::size_t>(pos)];
    }

    double ball = 0.0;
    for (Index j = 0; j < min_dist; ++j) {
        ball += binomial(length, j) * std::pow(static_cast<double>(alphabet - 1), static_cast<double>(j));
    }
    code.bound = space / ball;
    return code;
}

// ---------------------------------------------------------------------------
// Khatri-Rao packing of Theta_0^{m,d}(s, s0)

/// Packing of Theta_0^{m,d}(s, s0) over the alphabet {0, magnitude}.
///
/// Elements are kept as bit masks over the flat index d*col + row; use
/// element() / support() to materialise one.
class PackingSet
{
public:
    Index m = 0, d = 0, s = 0, s0 = 0;
    double magnitude = 1.0;
    Index target = 0;               // ceil(s s0 / 4)
    Index min_pairwise_hamming = 0; // verified over all pairs
    GvCode column_locations;        // step 1
    GvCode column_patterns;         // step 2
    GvCode pattern_code;            // step 3

    std::size_t size() const { return masks_.size(); }
    const std::vector<std::uint64_t>& mask(std::size_t k) const { return masks_[k]; }

    GroupedMatrix element(std::size_t k) const
    {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, m);
        for (Index flat = 0; flat < m * d; ++flat) {
            if (bit(k, flat)) out(flat) = magnitude;
        }
        return GroupedMatrix(std::move(out));
    }

    SupportSet support(std::size_t k) const { return support_of(element(k)); }

    /// ln |set| against the lower bound (s/4) ln(e m / s) + (s s0 / 4) ln(e d / s0).
    double log_size() const { return std::log(static_cast<double>(size())); }
    double log_size_bound() const
    {
        const double e = std::exp(1.0);
        const double sd = static_cast<double>(s);
        const double s0d = static_cast<double>(s0);
        return sd / 4.0 * std::log(e * static_cast<double>(m) / sd) +
               sd * s0d / 4.0 * std::log(e * static_cast<double>(d) / s0d);
    }

    bool stages_meet_bounds() const
    {
        return column_locations.meets_bound() && column_patterns.meets_bound() && pattern_code.meets_bound();
    }

    Index hamming(std::size_t a, std::size_t b) const
    {
        Index dist = 0;
        for (std::size_t w = 0; w < words_; ++w) dist += std::popcount(masks_[a][w] ^ masks_[b][w]);
        return dist;
    }

    void add(std::vector<std::uint64_t> mask) { masks_.push_back(std::move(mask)); }
    std::size_t words_per_mask() const { return words_; }
    void set_words(std::size_t w) { words_ = w; }

private:
    bool bit(std::size_t k, Index flat) const
    {
        return (masks_[k][static_cast<std::size_t>(flat) / 64] >> (static_cast<std::size_t>(flat) % 64)) & 1u;
    }

    std::size_t words_ = 0;
    std::vector<std::vector<std::uint64_t>> masks_;
};

inline constexpr double kPackingPairLimit = 1e10;

/// Minimum Hamming distance over all pairs, split across threads by first
/// index and reduced with min (the result does not depend on the split).
inline Index min_pairwise_distance(const PackingSet& set, unsigned threads = 0)
{
    const std::size_t count = set.size();
    if (count < 2) return std::numeric_limits<Index>::max();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::vector<Index> partial(threads, std::numeric_limits<Index>::max());
    const std::size_t words = set.words_per_mask();
    std::vector<std::uint64_t> flat(count * words);
    for (std::size_t k = 0; k < count; ++k) std::copy(set.mask(k).begin(), set.mask(k).end(), flat.begin() + k * words);
    auto work = [&](unsigned id) {
        Index best = std::numeric_limits<Index>::max();
        // interleave rows so triangular work is balanced
        for (std::size_t a = id; a < count; a += threads) {
            const std::uint64_t* ma = flat.data() + a * words;
            const std::uint64_t* mb = ma + words;
            const std::uint64_t* end = flat.data() + count * words;
            if (words == 1) {
                for (; mb != end; ++mb) best = std::min<Index>(best, std::popcount(ma[0] ^ mb[0]));
            } else if (words == 2) {
                for (; mb != end; mb += 2) {
                    best = std::min<Index>(best, std::popcount(ma[0] ^ mb[0]) + std::popcount(ma[1] ^ mb[1]));
                }
            } else {
                for (; mb != end; mb += words) {
                    Index dist = 0;
                    for (std::size_t w = 0; w < words; ++w) dist += std::popcount(ma[w] ^ mb[w]);
                    best = std::min(best, dist);
                }
            }
        }
        partial[id] = best;
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned id = 0; id < threads; ++id) pool.emplace_back(work, id);
        for (auto& t : pool) t.join();
    }
    return *std::min_element(partial.begin(), partial.end());
}

/// Four-step product construction of a ceil(s s0 / 4)-separated packing:
///  1. column locations: weight-s words of length m at distance >= ceil(s/4);
///  2. column patterns: weight-s0 words of length d at distance >= ceil(s0/2);
///  3. a |patterns|-ary code of length s at distance >= ceil(s/2);
///  4. for every location word and code word, fill the k-th chosen column
///     with the pattern named by the k-th code symbol.
/// The minimum pairwise distance is verified over all pairs; a shortfall is
/// a construction bug and throws std::logic_error.
inline PackingSet build_product_packing(Index m, Index d, Index s, Index s0, double magnitude = 1.0,
                                       unsigned threads = 0)
{
    if (s < 1 || s > m || s0 < 1 || s0 > d) detail::fail("packing: need 1 <= s <= m and 1 <= s0 <= d");
    if (!(magnitude != 0.0) || !std::isfinite(magnitude)) detail::fail("packing: magnitude must be nonzero");

    auto ceil_div = [](Index a, Index b) { return (a + b - 1) / b; };

    PackingSet set;
    set.m = m;
    set.d = d;
    set.s = s;
    set.s0 = s0;
    set.magnitude = magnitude;
    set.target = ceil_div(s * s0, 4);
    set.column_locations = gv_sphere_packing(m, s, ceil_div(s, 4) - 1);
    set.column_patterns = gv_sphere_packing(d, s0, ceil_div(s0, 2) - 1);
    const Index alphabet = static_cast<Index>(set.column_patterns.size());
    if (alphabet >= 2) {
        set.pattern_code = gv_qary_code(alphabet, s, ceil_div(s, 2));
    } else {
        // a single pattern: the only code is the constant word
        set.pattern_code.words = {Word(static_cast<std::size_t>(s), 0)};
        set.pattern_code.length = s;
        set.pattern_code.alphabet = 1;
        set.pattern_code.min_distance = ceil_div(s, 2);
        set.pattern_code.bound = 1.0;
    }

    const double elements = static_cast<double>(set.column_locations.size()) * set.pattern_code.size();
    if (elements * (elements - 1.0) / 2.0 > kPackingPairLimit) {
        throw InstanceTooLarge("packing: pairwise verification exceeds 1e10 pairs");
    }

    // sorted row positions of each column pattern
    std::vector<std::vector<Index>> patterns;
    for (const auto& w : set.column_patterns.words) {
        std::vector<Index> rows;
        for (Index i = 0; i < d; ++i) {
            if (w[static_cast<std::size_t>(i)]) rows.push_back(i);
        }
        patterns.push_back(std::move(rows));
    }

    const std::size_t words = static_cast<std::size_t>((m * d + 63) / 64);
    set.set_words(words);
    for (const auto& location : set.column_locations.words) {
        std::vector<Index> cols;
        for (Index j = 0; j < m; ++j) {
            if (location[static_cast<std::size_t>(j)]) cols.push_back(j);
        }
        for (const auto& code : set.pattern_code.words) {
            std::vector<std::uint64_t> mask(words, 0);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                for (Index r : patterns[code[k]]) {
                    const auto flat = static_cast<std::size_t>(d * cols[k] + r);
                    mask[flat / 64] |= std::uint64_t{1} << (flat % 64);
                }
            }
            set.add(std::move(mask));
        }
    }

    set.min_pairwise_hamming = set.size() < 2 ? std::numeric_limits<Index>::max() : min_pairwise_distance(set, threads);
    if (set.min_pairwise_hamming < set.target) {
        throw std::logic_error("packing: verified minimum distance " + std::to_string(set.min_pairwise_hamming) +
                               " is below the target " + std::to_string(set.target));
    }
    return set;
}

} // namespace dsparse
