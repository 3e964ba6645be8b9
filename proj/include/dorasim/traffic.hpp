/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/frames.hpp"
#include "dorasim/rng.hpp"
#include "dorasim/scheduler.hpp"
#include "dorasim/time.hpp"

#include <cstdint>
#include <functional>

namespace dorasim {

/// Network-wide packet accounting; the delivery ratio is received / generated.
struct TrafficCounters
{
    std::uint64_t generated{0};
    std::uint64_t received{0};
    std::uint64_t dropped_queue{0};
    std::uint64_t dropped_channel{0};
};

struct FrameShape
{
    std::uint32_t header_bytes{12};
    std::uint32_t payload_bytes{100};
    std::uint64_t bitrate{250'000};

    [[nodiscard]] DataFrame make(MacAddress src, std::uint32_t seq) const
    {
        DataFrame f;
        f.src = src;
        f.dest = MacAddress::base_station();
        f.seq = seq;
        f.header_bytes = header_bytes;
        f.payload_bytes = payload_bytes;
        f.bitrate = bitrate;
        return f;
    }
};

/**
 * Periodic source for the duty-cycled and always-on baselines.
 *
 * Packet k is generated at phase + k * period + U[0, jitter], with the phase
 * drawn once from U[0, period). Generation stops at `until` (exclusive).
 */
class PeriodicSource
{
  public:
    using Sink = std::function<void(DataFrame)>;

    PeriodicSource(Scheduler& sched, EntityId owner, RngStream rng, Duration period, Duration jitter, SimTime until,
                   MacAddress src, FrameShape shape, TrafficCounters& counters, Sink sink)
        : m_sched(&sched)
        , m_owner(owner)
        , m_rng(std::move(rng))
        , m_period(period)
        , m_jitter(jitter)
        , m_until(until)
        , m_src(src)
        , m_shape(shape)
        , m_counters(&counters)
        , m_sink(std::move(sink))
    {
    }

    void start()
    {
        m_phase = m_rng.uniform_duration(m_period - Duration::ns(1));
        schedule_next();
    }

  private:
    void schedule_next()
    {
        const SimTime slot = SimTime::at(m_phase + m_period * m_k);
        const SimTime at = slot + m_rng.uniform_duration(m_jitter);
        if (at >= m_until)
        {
            return;
        }
        ++m_k;
        m_sched->schedule(at, m_owner, [this] {
            ++m_counters->generated;
            m_sink(m_shape.make(m_src, m_seq++));
            schedule_next();
        });
    }

    Scheduler* m_sched;
    EntityId m_owner;
    RngStream m_rng;
    Duration m_period;
    Duration m_jitter;
    SimTime m_until;
    MacAddress m_src;
    FrameShape m_shape;
    TrafficCounters* m_counters;
    Sink m_sink;
    Duration m_phase{};
    std::uint64_t m_k{0};
    std::uint32_t m_seq{0};
};

} // namespace dorasim
