/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/time.hpp"

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace dorasim {

/**
 * Seeded random stream with platform-independent output.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. The standard distributions are not portable, so the draws below
 * are implemented directly on the raw 64-bit output:
 *  - uniform_below(n): bitmask rejection on the smallest covering power of two
 *  - uniform01(): top 53 bits scaled by 2^-53
 *
 * Substreams are derived with the SplitMix64 finaliser over (seed, index), so
 * consumer k always sees the same stream regardless of how many other
 * consumers exist.
 */
class RngStream
{
  public:
    explicit RngStream(std::uint64_t seed)
        : m_seed(seed)
        , m_engine(seed)
    {
    }

    [[nodiscard]] std::uint64_t seed() const { return m_seed; }

    [[nodiscard]] RngStream substream(std::uint64_t index) const
    {
        return RngStream{mix(m_seed ^ mix(index + 0x9e3779b97f4a7c15ULL))};
    }

    std::uint64_t next_u64() { return m_engine(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n)
    {
        if (n == 0)
        {
            throw std::invalid_argument("uniform_below requires n > 0");
        }
        if (n == 1)
        {
            return 0;
        }
        const std::uint64_t mask = std::bit_ceil(n) == 0 ? ~0ULL : std::bit_ceil(n) - 1;
        for (;;)
        {
            const std::uint64_t v = m_engine() & mask;
            if (v < n)
            {
                return v;
            }
        }
    }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi)
    {
        if (hi < lo)
        {
            throw std::invalid_argument("uniform_int requires lo <= hi");
        }
        if (hi - lo == ~0ULL)
        {
            return m_engine();
        }
        return lo + uniform_below(hi - lo + 1);
    }

    /// Uniform real in [0, 1).
    double uniform01() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

    /// Uniform duration in [0, max], tick resolution.
    Duration uniform_duration(Duration max) { return Duration{uniform_int(0, max.count())}; }

    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t m_seed;
    std::mt19937_64 m_engine;
};

} // namespace dorasim
