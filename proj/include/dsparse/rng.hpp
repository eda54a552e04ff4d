#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace dsparse {

/// What a stream is used for. Distinct purposes of the same replicate never
/// share random numbers.
enum class StreamPurpose : std::uint64_t {
    signal = 1,
    noise = 2,
    design = 3,
    support_sampling = 4,
    generic = 5,
};

/// Identity of a random stream: (seed, cell, replicate, purpose).
/// Two runs with the same identity see the same numbers regardless of the
/// order in which streams are created.
struct StreamId {
    std::uint64_t seed = 0;
    std::uint64_t cell = 0;
    std::uint64_t replicate = 0;
    StreamPurpose purpose = StreamPurpose::generic;

    StreamId with_purpose(StreamPurpose p) const
    {
        StreamId out = *this;
        out.purpose = p;
        return out;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_stream_id(const StreamId& id)
{
    std::uint64_t h = splitmix64(id.seed);
    h = splitmix64(h ^ id.cell);
    h = splitmix64(h ^ id.replicate);
    h = splitmix64(h ^ static_cast<std::uint64_t>(id.purpose));
    return h;
}

} // namespace detail

/// Deterministic random stream. The engine is std::mt19937_64 (fully
/// specified by the standard); the distributions below are written out so the
/// numbers do not depend on the standard library implementation.
class Stream
{
public:
    explicit Stream(const StreamId& id) : engine_(detail::mix_stream_id(id)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    bool coin() { return (engine_() >> 63) != 0; }

    /// k distinct indices from [0, n), returned in increasing order.
    std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index k)
    {
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        // partial Fisher-Yates
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto j = i + static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dsparse
