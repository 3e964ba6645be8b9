/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/time.hpp"

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dorasim {

/// Identifies the simulated entity an event is addressed to (node, BS, medium).
using EntityId = std::uint32_t;

class SchedulingInPast : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

struct EventHandle
{
    std::uint64_t seq{0};
    constexpr auto operator<=>(const EventHandle&) const = default;
};

/**
 * Single-threaded discrete-event loop.
 *
 * Events are totally ordered by (fire_at, seq) where seq is the insertion
 * counter, so dispatch order depends only on what was scheduled and when.
 * The clock never moves backwards; handlers may schedule at now().
 */
class Scheduler
{
  public:
    using Action = std::function<void()>;

    [[nodiscard]] SimTime now() const { return m_now; }

    EventHandle schedule(SimTime fire_at, EntityId target, Action action)
    {
        if (fire_at < m_now)
        {
            throw SchedulingInPast("event at " + to_string(fire_at) + " scheduled while clock is at " +
                                   to_string(m_now));
        }
        const std::uint64_t seq = m_next_seq++;
        m_queue.push(Key{fire_at, seq});
        m_pending.emplace(seq, Pending{target, std::move(action)});
        return EventHandle{seq};
    }

    EventHandle schedule_in(Duration delay, EntityId target, Action action)
    {
        return schedule(m_now + delay, target, std::move(action));
    }

    /// True iff the event had not fired yet; it is then guaranteed never to fire.
    bool cancel(EventHandle h) { return m_pending.erase(h.seq) > 0; }

    [[nodiscard]] bool is_pending(EventHandle h) const { return m_pending.contains(h.seq); }
    [[nodiscard]] std::size_t pending_count() const { return m_pending.size(); }

    /// Dispatches every event with fire_at <= t_end, including ones scheduled
    /// by handlers during this call, then parks the clock at t_end.
    std::uint64_t run_until(SimTime t_end)
    {
        if (t_end < m_now)
        {
            throw SchedulingInPast("run_until target lies in the past");
        }
        std::uint64_t dispatched = 0;
        while (!m_queue.empty() && m_queue.top().fire_at <= t_end)
        {
            const Key key = m_queue.top();
            m_queue.pop();
            auto it = m_pending.find(key.seq);
            if (it == m_pending.end())
            {
                continue; // cancelled
            }
            Pending ev = std::move(it->second);
            m_pending.erase(it);
            m_now = key.fire_at;
            m_current_target = ev.target;
            ++dispatched;
            ev.action();
        }
        m_now = t_end;
        m_dispatched += dispatched;
        return dispatched;
    }

    [[nodiscard]] std::uint64_t dispatched_total() const { return m_dispatched; }
    [[nodiscard]] EntityId current_target() const { return m_current_target; }

  private:
    struct Key
    {
        SimTime fire_at;
        std::uint64_t seq;
        // std::priority_queue is a max-heap; invert to pop the smallest key first.
        bool operator<(const Key& o) const
        {
            if (fire_at != o.fire_at)
            {
                return fire_at > o.fire_at;
            }
            return seq > o.seq;
        }
    };
    struct Pending
    {
        EntityId target;
        Action action;
    };

    SimTime m_now{};
    std::uint64_t m_next_seq{0};
    std::uint64_t m_dispatched{0};
    EntityId m_current_target{0};
    std::priority_queue<Key> m_queue;
    std::unordered_map<std::uint64_t, Pending> m_pending;
};

} // namespace dorasim
