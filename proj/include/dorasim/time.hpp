/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace dorasim {

class TimeOverflow : public std::overflow_error
{
  public:
    using std::overflow_error::overflow_error;
};

/// Non-negative length of simulated time in integer nanoseconds.
class Duration
{
  public:
    constexpr Duration() = default;
    constexpr explicit Duration(std::uint64_t ns)
        : m_ns(ns)
    {
    }

    static constexpr Duration ns(std::uint64_t v) { return Duration{v}; }
    static constexpr Duration us(std::uint64_t v) { return Duration{checked_mul(v, 1'000)}; }
    static constexpr Duration ms(std::uint64_t v) { return Duration{checked_mul(v, 1'000'000)}; }
    static constexpr Duration s(std::uint64_t v) { return Duration{checked_mul(v, 1'000'000'000)}; }

    /// Rounds to the nearest nanosecond. Negative or non-finite input is rejected.
    static Duration from_seconds(double seconds)
    {
        if (!std::isfinite(seconds) || seconds < 0.0)
        {
            throw std::invalid_argument("duration must be a finite non-negative number of seconds");
        }
        const double ns = std::round(seconds * 1e9);
        if (ns >= static_cast<double>(std::numeric_limits<std::uint64_t>::max()))
        {
            throw TimeOverflow("duration out of range");
        }
        return Duration{static_cast<std::uint64_t>(ns)};
    }

    /// Time needed to clock `bits` out at `bitrate` bits/s, rounded up to a whole tick.
    static constexpr Duration for_bits(std::uint64_t bits, std::uint64_t bitrate)
    {
        if (bitrate == 0)
        {
            throw std::invalid_argument("bitrate must be positive");
        }
        const std::uint64_t scaled = checked_mul(bits, 1'000'000'000);
        return Duration{scaled / bitrate + (scaled % bitrate != 0 ? 1 : 0)};
    }

    [[nodiscard]] constexpr std::uint64_t count() const { return m_ns; }
    [[nodiscard]] constexpr double seconds() const { return static_cast<double>(m_ns) / 1e9; }

    constexpr auto operator<=>(const Duration&) const = default;

    constexpr Duration operator+(Duration o) const { return Duration{checked_add(m_ns, o.m_ns)}; }
    constexpr Duration operator-(Duration o) const
    {
        if (o.m_ns > m_ns)
        {
            throw TimeOverflow("negative duration");
        }
        return Duration{m_ns - o.m_ns};
    }
    constexpr Duration operator*(std::uint64_t k) const { return Duration{checked_mul(m_ns, k)}; }
    constexpr Duration operator/(std::uint64_t k) const
    {
        if (k == 0)
        {
            throw std::invalid_argument("division of a duration by zero");
        }
        return Duration{m_ns / k};
    }
    constexpr Duration& operator+=(Duration o) { return *this = *this + o; }

    static constexpr std::uint64_t checked_add(std::uint64_t a, std::uint64_t b)
    {
        if (a > std::numeric_limits<std::uint64_t>::max() - b)
        {
            throw TimeOverflow("simulated time overflow");
        }
        return a + b;
    }
    static constexpr std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b)
    {
        if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b)
        {
            throw TimeOverflow("simulated time overflow");
        }
        return a * b;
    }

  private:
    std::uint64_t m_ns{0};
};

/// Point on the simulated clock, nanoseconds since simulation start.
class SimTime
{
  public:
    constexpr SimTime() = default;
    constexpr explicit SimTime(std::uint64_t ticks)
        : m_ticks(ticks)
    {
    }
    static constexpr SimTime at(Duration since_start) { return SimTime{since_start.count()}; }

    [[nodiscard]] constexpr std::uint64_t ticks() const { return m_ticks; }
    [[nodiscard]] constexpr double seconds() const { return static_cast<double>(m_ticks) / 1e9; }
    [[nodiscard]] constexpr Duration since_start() const { return Duration{m_ticks}; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(Duration d) const { return SimTime{Duration::checked_add(m_ticks, d.count())}; }
    constexpr SimTime operator-(Duration d) const
    {
        if (d.count() > m_ticks)
        {
            throw TimeOverflow("time before simulation start");
        }
        return SimTime{m_ticks - d.count()};
    }
    /// Throws TimeOverflow when `earlier` is later than *this.
    constexpr Duration operator-(SimTime earlier) const
    {
        if (earlier.m_ticks > m_ticks)
        {
            throw TimeOverflow("negative time difference");
        }
        return Duration{m_ticks - earlier.m_ticks};
    }
    constexpr SimTime& operator+=(Duration d) { return *this = *this + d; }

  private:
    std::uint64_t m_ticks{0};
};

inline std::string to_string(SimTime t)
{
    return std::to_string(t.ticks()) + "ns";
}

inline std::string to_string(Duration d)
{
    return std::to_string(d.count()) + "ns";
}

namespace literals {

constexpr Duration operator""_ns(unsigned long long v) { return Duration::ns(v); }
constexpr Duration operator""_us(unsigned long long v) { return Duration::us(v); }
constexpr Duration operator""_ms(unsigned long long v) { return Duration::ms(v); }
constexpr Duration operator""_s(unsigned long long v) { return Duration::s(v); }

} // namespace literals

} // namespace dorasim
