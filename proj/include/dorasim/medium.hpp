/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/frames.hpp"
#include "dorasim/radio.hpp"
#include "dorasim/scheduler.hpp"
#include "dorasim/time.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dorasim {

class AlreadyTransmitting : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

class RadioNotReceiving : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

class UnknownTransmission : public std::out_of_range
{
  public:
    using std::out_of_range::out_of_range;
};

class OverlapForbidden : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

struct Position
{
    double x{0.0};
    double y{0.0};
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/**
 * Log-distance path loss:
 *
 *   P_rx = P_tx * 10^(-L0/10) * (d0 / max(d, d0))^n      for d <= max_range
 *   P_rx = 0                                              for d >  max_range
 *
 * L0 is the loss at the reference distance d0. Exponent 2 is free space.
 */
struct Propagation
{
    double exponent{2.0};
    double reference_distance_m{1.0};
    double reference_loss_db{20.0};
    double max_range_m{100.0};

    [[nodiscard]] double received_mw(double tx_mw, double d) const
    {
        if (d > max_range_m)
        {
            return 0.0;
        }
        const double r = std::max(d, reference_distance_m);
        return tx_mw * std::pow(10.0, -reference_loss_db / 10.0) * std::pow(reference_distance_m / r, exponent);
    }
};

using PortId = std::uint32_t;
using TransmissionId = std::uint64_t;

struct Transmission
{
    TransmissionId id{0};
    PortId source{0};
    Frame frame{};
    SimTime start{};
    Duration airtime{};
    double tx_power_mw{1.0};
    bool overlapped{false};

    [[nodiscard]] SimTime end() const { return start + airtime; }
};

struct ReceptionReport
{
    Transmission transmission;
    bool corrupted{false};
    double rx_power_mw{0.0};
};

/// Piece of a received-power trace, [start, end).
struct PowerSegment
{
    SimTime start;
    SimTime end;
    double power_mw;
};

enum class ChannelState
{
    Idle,
    Busy,
};

/// Callbacks a receiver attaches with. All are optional.
struct MediumListener
{
    /// Carrier of `tx` became audible (tx start, or Rx entered mid-air).
    std::function<void(const Transmission&, double rx_mw)> on_carrier;
    /// End of `tx` while this radio is receiving.
    std::function<void(const ReceptionReport&)> on_reception;
    /// Own transmission finished; the radio may leave Tx again.
    std::function<void(const Transmission&)> on_tx_end;
};

/**
 * One shared channel with a binary collision model.
 *
 * A transmission is corrupted for everybody if any other transmission
 * overlaps it in time. A radio that was not receiving for the whole airtime
 * still gets the report, marked corrupted. Receivers whose received power is
 * below their sensitivity see nothing.
 */
class Medium
{
  public:
    Medium(Scheduler& sched, Propagation prop)
        : m_sched(&sched)
        , m_prop(prop)
    {
    }

    Medium(const Medium&) = delete;
    Medium& operator=(const Medium&) = delete;

    /// `sensitivity_mw` is the weakest power this radio registers at all.
    PortId attach(Radio& radio, Position pos, double sensitivity_mw, MediumListener listener = {})
    {
        const auto id = static_cast<PortId>(m_ports.size());
        m_ports.push_back(Port{&radio, pos, sensitivity_mw, std::move(listener),
                               radio.receiving() ? m_sched->now() : SimTime{}, radio.receiving()});
        radio.set_mode_observer([this, id](RadioMode from, RadioMode to) { on_mode_change(id, from, to); });
        return id;
    }

    void set_listener(PortId port, MediumListener listener) { m_ports.at(port).listener = std::move(listener); }

    /// When set, any overlap throws instead of silently corrupting.
    void forbid_overlap(bool on) { m_forbid_overlap = on; }

    TransmissionId begin_tx(PortId source, Frame frame, double tx_power_mw)
    {
        Port& src = m_ports.at(source);
        if (src.radio->transmitting())
        {
            throw AlreadyTransmitting("port " + std::to_string(source) + " already has a transmission in flight");
        }
        if (src.radio->mode() != RadioMode::Tx)
        {
            throw IllegalTransition("begin_tx on a radio that is not in tx");
        }
        const SimTime now = m_sched->now();
        prune(now);

        Transmission tx;
        tx.id = m_next_id++;
        tx.source = source;
        tx.frame = std::move(frame);
        tx.start = now;
        tx.airtime = airtime(tx.frame);
        tx.tx_power_mw = tx_power_mw;
        if (tx.airtime.count() == 0)
        {
            throw std::invalid_argument("transmission with zero airtime");
        }

        for (Transmission& other : m_history)
        {
            if (other.end() > now)
            {
                ++m_overlap_events;
                other.overlapped = true;
                tx.overlapped = true;
                if (m_forbid_overlap)
                {
                    throw OverlapForbidden("transmission " + std::to_string(tx.id) + " overlaps " +
                                           std::to_string(other.id) + " at " + to_string(now));
                }
            }
        }

        src.radio->mark_transmitting(true);
        ++m_tx_count;
        m_history.push_back(tx);
        const TransmissionId id = tx.id;
        m_sched->schedule(tx.end(), m_ports[source].radio->owner(), [this, id] { finish(id); });

        for (PortId p = 0; p < m_ports.size(); ++p)
        {
            if (p == source || !m_ports[p].receiving)
            {
                continue;
            }
            const double rx = power_between(tx, p);
            if (rx >= m_ports[p].sensitivity_mw && m_ports[p].listener.on_carrier)
            {
                m_ports[p].listener.on_carrier(tx, rx);
            }
        }
        return id;
    }

    /// Busy iff a transmission audible at `observer` overlaps [now - window, now).
    [[nodiscard]] ChannelState carrier_sense(PortId observer, Duration window) const
    {
        const Port& port = m_ports.at(observer);
        const SimTime now = m_sched->now();
        const SimTime from = now - window;
        if (!port.receiving || port.receiving_since > from)
        {
            throw RadioNotReceiving("carrier sense on port " + std::to_string(observer) +
                                    " which was not receiving for the whole window");
        }
        for (const Transmission& tx : m_history)
        {
            if (tx.source == observer || tx.start >= now || tx.end() <= from)
            {
                continue;
            }
            if (power_between(tx, observer) >= port.sensitivity_mw)
            {
                return ChannelState::Busy;
            }
        }
        return ChannelState::Idle;
    }

    [[nodiscard]] double rx_power_at(PortId observer, TransmissionId id) const
    {
        return power_between(find(id), observer);
    }

    [[nodiscard]] const Transmission& transmission(TransmissionId id) const { return find(id); }

    /**
     * Received power at `observer` over [from, to), as a gap-free piecewise
     * constant trace. Concurrent transmissions add up.
     */
    [[nodiscard]] std::vector<PowerSegment> power_trace(PortId observer, SimTime from, SimTime to) const
    {
        std::vector<SimTime> cuts{from, to};
        std::vector<const Transmission*> audible;
        for (const Transmission& tx : m_history)
        {
            if (tx.source == observer || tx.start >= to || tx.end() <= from)
            {
                continue;
            }
            audible.push_back(&tx);
            if (tx.start > from)
            {
                cuts.push_back(tx.start);
            }
            if (tx.end() < to)
            {
                cuts.push_back(tx.end());
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<PowerSegment> trace;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        {
            double p = 0.0;
            for (const Transmission* tx : audible)
            {
                if (tx->start <= cuts[i] && tx->end() >= cuts[i + 1])
                {
                    p += power_between(*tx, observer);
                }
            }
            trace.push_back(PowerSegment{cuts[i], cuts[i + 1], p});
        }
        return trace;
    }

    /// Transmissions audible at `observer` that overlap [from, to), oldest first.
    [[nodiscard]] std::vector<Transmission> audible(PortId observer, SimTime from, SimTime to) const
    {
        std::vector<Transmission> out;
        for (const Transmission& tx : m_history)
        {
            if (tx.source != observer && tx.start < to && tx.end() > from &&
                power_between(tx, observer) >= m_ports.at(observer).sensitivity_mw)
            {
                out.push_back(tx);
            }
        }
        return out;
    }

    /// Whether any transmission other than `id` occupies part of [from, to).
    [[nodiscard]] bool disturbed(TransmissionId id, SimTime from, SimTime to) const
    {
        for (const Transmission& tx : m_history)
        {
            if (tx.id != id && tx.start < to && tx.end() > from)
            {
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] std::uint64_t overlap_events() const { return m_overlap_events; }
    [[nodiscard]] std::uint64_t transmissions() const { return m_tx_count; }
    [[nodiscard]] std::size_t port_count() const { return m_ports.size(); }
    [[nodiscard]] Position position(PortId p) const { return m_ports.at(p).pos; }
    [[nodiscard]] const Propagation& propagation() const { return m_prop; }

    /// History older than this is dropped; queries reaching further back fail.
    void set_history_horizon(Duration d) { m_horizon = d; }

  private:
    struct Port
    {
        Radio* radio;
        Position pos;
        double sensitivity_mw;
        MediumListener listener;
        SimTime receiving_since;
        bool receiving;
    };

    const Transmission& find(TransmissionId id) const
    {
        auto it = std::lower_bound(m_history.begin(), m_history.end(), id,
                                   [](const Transmission& t, TransmissionId v) { return t.id < v; });
        if (it == m_history.end() || it->id != id)
        {
            throw UnknownTransmission("transmission " + std::to_string(id) + " is unknown or expired");
        }
        return *it;
    }

    [[nodiscard]] double power_between(const Transmission& tx, PortId observer) const
    {
        if (observer == tx.source)
        {
            return tx.tx_power_mw;
        }
        return m_prop.received_mw(tx.tx_power_mw, distance(m_ports.at(tx.source).pos, m_ports.at(observer).pos));
    }

    void on_mode_change(PortId id, RadioMode /*from*/, RadioMode /*to*/)
    {
        Port& port = m_ports[id];
        const bool now_receiving = port.radio->receiving();
        if (now_receiving && !port.receiving)
        {
            port.receiving = true;
            port.receiving_since = m_sched->now();
            // Carrier already in the air is sensed but cannot be decoded.
            std::vector<Transmission> in_air;
            for (const Transmission& tx : m_history)
            {
                if (tx.source != id && tx.start < m_sched->now() && tx.end() > m_sched->now())
                {
                    in_air.push_back(tx);
                }
            }
            for (const Transmission& tx : in_air)
            {
                const double rx = power_between(tx, id);
                if (rx >= m_ports[id].sensitivity_mw && m_ports[id].listener.on_carrier)
                {
                    m_ports[id].listener.on_carrier(tx, rx);
                }
            }
        }
        else if (!now_receiving)
        {
            port.receiving = false;
        }
    }

    void finish(TransmissionId id)
    {
        const Transmission tx = find(id);
        Port& src = m_ports[tx.source];
        src.radio->mark_transmitting(false);
        for (PortId p = 0; p < m_ports.size(); ++p)
        {
            Port& port = m_ports[p];
            if (p == tx.source || !port.receiving)
            {
                continue;
            }
            const double rx = power_between(tx, p);
            if (rx < port.sensitivity_mw || !port.listener.on_reception)
            {
                continue;
            }
            const bool heard_whole = port.receiving_since <= tx.start;
            port.listener.on_reception(ReceptionReport{tx, tx.overlapped || !heard_whole, rx});
        }
        if (src.listener.on_tx_end)
        {
            src.listener.on_tx_end(tx);
        }
    }

    void prune(SimTime now)
    {
        while (!m_history.empty() && m_history.front().end() + m_horizon < now)
        {
            m_history.pop_front();
        }
    }

    Scheduler* m_sched;
    Propagation m_prop;
    std::vector<Port> m_ports;
    std::deque<Transmission> m_history;
    TransmissionId m_next_id{0};
    Duration m_horizon{Duration::s(10)};
    std::uint64_t m_overlap_events{0};
    std::uint64_t m_tx_count{0};
    bool m_forbid_overlap{false};
};

} // namespace dorasim
