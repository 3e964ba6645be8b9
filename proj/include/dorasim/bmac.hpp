/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/medium.hpp"
#include "dorasim/radio.hpp"
#include "dorasim/rng.hpp"
#include "dorasim/scheduler.hpp"
#include "dorasim/traffic.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace dorasim::bmac {

enum class PreambleMode
{
    Carrier,
    Microframe,
};

struct BmacParams
{
    Duration slot_duration{Duration::s(1)};
    Duration check_interval{Duration::ms(10)};
    Duration cca_time{Duration::us(128)};
    PreambleMode preamble_mode{PreambleMode::Microframe};
    /// Size of one address-bearing preamble frame in microframe mode.
    std::uint32_t microframe_bytes{12};

    [[nodiscard]] Duration microframe(std::uint64_t bitrate) const
    {
        return Duration::for_bits(std::uint64_t{microframe_bytes} * 8, bitrate);
    }

    /// Shortest preamble that every receiver's sample window must intersect:
    /// slot + check interval, rounded up to whole microframes.
    [[nodiscard]] Duration preamble_length(std::uint64_t bitrate) const
    {
        const Duration min_len = slot_duration + check_interval;
        if (preamble_mode == PreambleMode::Carrier)
        {
            return min_len;
        }
        const Duration mf = microframe(bitrate);
        const std::uint64_t n = (min_len.count() + mf.count() - 1) / mf.count();
        return mf * n;
    }

    void validate() const
    {
        if (slot_duration.count() == 0 || check_interval.count() == 0 || cca_time.count() == 0)
        {
            throw std::invalid_argument("B-MAC durations must be positive");
        }
        if (check_interval >= slot_duration)
        {
            throw std::invalid_argument("B-MAC check interval must be shorter than the slot");
        }
        if (preamble_mode == PreambleMode::Microframe && microframe_bytes == 0)
        {
            throw std::invalid_argument("B-MAC microframe size must be positive");
        }
    }
};

enum class BmacState
{
    Sleep,
    CcaSample,
    RxWaitData,
    TxPreamble,
    TxData,
};

constexpr std::string_view to_string(BmacState s)
{
    switch (s)
    {
    case BmacState::Sleep: return "SLEEP";
    case BmacState::CcaSample: return "CCA_SAMPLE";
    case BmacState::RxWaitData: return "RX_WAIT_DATA";
    case BmacState::TxPreamble: return "TX_PREAMBLE";
    case BmacState::TxData: return "TX_DATA";
    }
    return "?";
}

/**
 * One B-MAC station. A sink only receives; other stations queue data for
 * the sink and send it behind a long preamble.
 *
 * Every slot the radio wakes, listens for check_interval and goes back to
 * sleep when the channel was idle. On a busy sample it stays in Rx until a
 * data frame ends or max_wait() elapses. In microframe mode it also goes
 * back to sleep as soon as it decodes a complete microframe addressed to
 * somebody else.
 *
 * Sending: 128 us CCA; idle starts the preamble followed directly by the
 * data frame, busy sleeps for U[0, slot] and retries. No acknowledgements.
 */
class Station
{
  public:
    struct Config
    {
        MacAddress address{};
        bool sink{false};
        BmacParams mac{};
        std::size_t queue_len{10};
        double tx_power_mw{1.0};
        double sensitivity_mw{dbm_to_mw(-95.0)};
        Duration data_airtime{Duration::for_bits(112 * 8, 250'000)};
    };

    Station(Scheduler& sched, Medium& medium, EntityId id, Position pos, RadioParams params, Config cfg, RngStream rng,
            TrafficCounters& counters)
        : m_sched(&sched)
        , m_medium(&medium)
        , m_id(id)
        , m_cfg(cfg)
        , m_rng(std::move(rng))
        , m_counters(&counters)
        , m_radio(sched, id, params, RadioMode::Sleep)
    {
        m_cfg.mac.validate();
        MediumListener l;
        l.on_reception = [this](const ReceptionReport& r) { on_reception(r); };
        l.on_tx_end = [this](const Transmission& tx) { on_tx_end(tx); };
        m_port = m_medium->attach(m_radio, pos, cfg.sensitivity_mw, std::move(l));
    }

    /// First sample at a uniformly drawn phase within the slot.
    void start()
    {
        const SimTime first = m_sched->now() + m_rng.uniform_duration(m_cfg.mac.slot_duration - Duration::ns(1));
        m_sched->schedule(first, m_id, [this] { on_sample_timer(); });
    }

    /// Application hand-off. Returns false when the queue was full and the frame dropped.
    bool enqueue(const DataFrame& frame)
    {
        if (m_queue.size() >= m_cfg.queue_len)
        {
            ++m_counters->dropped_queue;
            return false;
        }
        m_queue.push_back(frame);
        if (!m_attempt_pending && m_state == BmacState::Sleep)
        {
            when_settled([this] {
                if (!m_attempt_pending)
                {
                    try_send();
                }
            });
        }
        return true;
    }

    [[nodiscard]] BmacState state() const { return m_state; }
    [[nodiscard]] const Radio& radio() const { return m_radio; }
    [[nodiscard]] PortId port() const { return m_port; }
    [[nodiscard]] std::size_t queued() const { return m_queue.size(); }
    [[nodiscard]] std::uint64_t samples() const { return m_samples; }
    [[nodiscard]] std::uint64_t busy_samples() const { return m_busy_samples; }
    [[nodiscard]] std::uint64_t early_sleeps() const { return m_early_sleeps; }
    [[nodiscard]] std::uint64_t backoffs() const { return m_backoffs; }
    [[nodiscard]] std::uint64_t sent() const { return m_sent; }
    [[nodiscard]] std::uint64_t received() const { return m_received; }

    /// Longest stay in RX_WAIT_DATA: a whole preamble plus the data frame.
    [[nodiscard]] Duration max_wait() const
    {
        return m_cfg.mac.preamble_length(m_radio.params().bitrate) + m_cfg.data_airtime;
    }

  private:
    template <class F>
    void when_settled(F&& fn)
    {
        if (m_radio.mode() == RadioMode::Switching)
        {
            m_sched->schedule(*m_radio_settles_at, m_id, std::forward<F>(fn));
            return;
        }
        fn();
    }

    void set_radio(RadioMode m)
    {
        const SimTime at = m_radio.set_mode(m);
        m_radio_settles_at = at;
    }

    void go_to_sleep()
    {
        m_state = BmacState::Sleep;
        m_wait_deadline.reset();
        if (!m_attempt_pending && !m_queue.empty() && !m_cfg.sink)
        {
            // Straight from Rx into the sender's CCA, no need to power down first.
            try_send();
            return;
        }
        set_radio(RadioMode::Sleep);
    }

    void on_sample_timer()
    {
        m_sched->schedule(m_sched->now() + m_cfg.mac.slot_duration, m_id, [this] { on_sample_timer(); });
        if (m_state != BmacState::Sleep)
        {
            return;
        }
        when_settled([this] { begin_sample(); });
    }

    void begin_sample()
    {
        if (m_state != BmacState::Sleep)
        {
            return;
        }
        m_state = BmacState::CcaSample;
        m_sending_cca = false;
        ++m_samples;
        set_radio(RadioMode::Rx);
        const SimTime listening = *m_radio_settles_at;
        m_sched->schedule(listening + m_cfg.mac.check_interval, m_id, [this, listening] { end_sample(listening); });
    }

    void end_sample(SimTime listening_since)
    {
        if (m_state != BmacState::CcaSample || m_sending_cca)
        {
            return;
        }
        if (m_medium->carrier_sense(m_port, m_cfg.mac.check_interval) == ChannelState::Idle)
        {
            go_to_sleep();
            return;
        }
        ++m_busy_samples;
        ++m_wait_epoch;
        m_state = BmacState::RxWaitData;
        const SimTime deadline = m_sched->now() + max_wait();
        m_wait_deadline = deadline;
        m_sched->schedule(deadline, m_id, [this, deadline] {
            if (m_state == BmacState::RxWaitData && m_wait_deadline == deadline)
            {
                go_to_sleep();
            }
        });
        if (m_cfg.mac.preamble_mode == PreambleMode::Microframe)
        {
            schedule_microframe_decode(listening_since);
        }
    }

    /// Decodes the first microframe of the train on air that was heard from its start.
    void schedule_microframe_decode(SimTime listening_since)
    {
        const SimTime now = m_sched->now();
        for (const Transmission& tx : m_medium->audible(m_port, now, now + Duration::ns(1)))
        {
            const auto* train = std::get_if<PreambleTrain>(&tx.frame);
            if (train == nullptr || !train->addressed())
            {
                continue;
            }
            const std::uint64_t len = train->microframe.count();
            const std::uint64_t offset = listening_since > tx.start ? (listening_since - tx.start).count() : 0;
            const SimTime boundary = tx.start + Duration{(offset + len - 1) / len * len};
            const SimTime done = boundary + train->microframe;
            if (done > tx.end())
            {
                return;
            }
            const std::uint64_t epoch = m_wait_epoch;
            const TransmissionId id = tx.id;
            const MacAddress dest = train->dest;
            m_sched->schedule(std::max(done, now), m_id, [this, epoch, id, dest, boundary, done] {
                if (m_state != BmacState::RxWaitData || m_wait_epoch != epoch)
                {
                    return;
                }
                if (m_medium->disturbed(id, boundary, done))
                {
                    schedule_microframe_decode(done);
                    return;
                }
                if (dest != m_cfg.address)
                {
                    ++m_early_sleeps;
                    go_to_sleep();
                }
            });
            return;
        }
    }

    void on_reception(const ReceptionReport& r)
    {
        if (m_state != BmacState::RxWaitData)
        {
            return;
        }
        const auto* data = std::get_if<DataFrame>(&r.transmission.frame);
        if (data == nullptr)
        {
            return;
        }
        if (!r.corrupted && data->dest == m_cfg.address)
        {
            ++m_received;
            ++m_counters->received;
        }
        go_to_sleep();
    }

    void try_send()
    {
        if (m_queue.empty() || m_cfg.sink || m_state != BmacState::Sleep)
        {
            return;
        }
        m_state = BmacState::CcaSample;
        m_sending_cca = true;
        set_radio(RadioMode::Rx);
        const SimTime listening = *m_radio_settles_at;
        m_sched->schedule(listening + m_cfg.mac.cca_time, m_id, [this] { end_send_cca(); });
    }

    void end_send_cca()
    {
        if (m_medium->carrier_sense(m_port, m_cfg.mac.cca_time) == ChannelState::Busy)
        {
            ++m_backoffs;
            m_sending_cca = false;
            m_state = BmacState::Sleep;
            set_radio(RadioMode::Sleep);
            m_attempt_pending = true;
            const Duration backoff = m_rng.uniform_duration(m_cfg.mac.slot_duration);
            m_sched->schedule(m_sched->now() + backoff, m_id, [this] {
                m_attempt_pending = false;
                // A sample in progress retries from go_to_sleep() when it ends.
                if (m_state == BmacState::Sleep)
                {
                    when_settled([this] { try_send(); });
                }
            });
            return;
        }
        m_sending_cca = false;
        m_state = BmacState::TxPreamble;
        set_radio(RadioMode::Tx);
        PreambleTrain train;
        train.src = m_cfg.address;
        train.dest = m_queue.front().dest;
        train.length = m_cfg.mac.preamble_length(m_radio.params().bitrate);
        if (m_cfg.mac.preamble_mode == PreambleMode::Microframe)
        {
            train.microframe = m_cfg.mac.microframe(m_radio.params().bitrate);
        }
        m_medium->begin_tx(m_port, train, m_cfg.tx_power_mw);
    }

    void on_tx_end(const Transmission&)
    {
        if (m_state == BmacState::TxPreamble)
        {
            m_state = BmacState::TxData;
            m_medium->begin_tx(m_port, m_queue.front(), m_cfg.tx_power_mw);
            return;
        }
        m_queue.pop_front();
        ++m_sent;
        go_to_sleep();
    }

    Scheduler* m_sched;
    Medium* m_medium;
    EntityId m_id;
    Config m_cfg;
    RngStream m_rng;
    TrafficCounters* m_counters;
    Radio m_radio;
    PortId m_port{0};
    BmacState m_state{BmacState::Sleep};
    std::deque<DataFrame> m_queue;
    std::optional<SimTime> m_radio_settles_at;
    std::optional<SimTime> m_wait_deadline;
    std::uint64_t m_wait_epoch{0};
    bool m_attempt_pending{false};
    bool m_sending_cca{false};
    std::uint64_t m_samples{0};
    std::uint64_t m_busy_samples{0};
    std::uint64_t m_early_sleeps{0};
    std::uint64_t m_backoffs{0};
    std::uint64_t m_sent{0};
    std::uint64_t m_received{0};
};

} // namespace dorasim::bmac
