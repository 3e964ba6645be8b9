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
#include <stdexcept>
#include <string_view>

namespace dorasim::csma154 {

struct CsmaParams
{
    std::uint32_t min_be{3};
    std::uint32_t max_be{5};
    std::uint32_t max_csma_backoffs{4};
    Duration cca_time{Duration::us(128)};
    /// aUnitBackoffPeriod: 20 symbols at 62.5 ksymbol/s.
    Duration unit_backoff{Duration::us(320)};

    void validate() const
    {
        if (min_be > max_be)
        {
            throw std::invalid_argument("min_be must not exceed max_be");
        }
        if (max_be > 63)
        {
            throw std::invalid_argument("max_be out of range");
        }
        if (cca_time.count() == 0 || unit_backoff.count() == 0)
        {
            throw std::invalid_argument("CSMA durations must be positive");
        }
    }
};

/// Random backoff in whole unit periods, uniform on [0, 2^be - 1].
inline std::uint64_t draw_backoff_periods(RngStream& rng, std::uint32_t be)
{
    return rng.uniform_below(std::uint64_t{1} << be);
}

/// Exponent after a busy CCA, clamped at max_be.
constexpr std::uint32_t next_be(std::uint32_t be, const CsmaParams& p)
{
    return std::min(be + 1, p.max_be);
}

enum class CsmaState
{
    RxIdle,
    Backoff,
    Cca,
    TxData,
};

constexpr std::string_view to_string(CsmaState s)
{
    switch (s)
    {
    case CsmaState::RxIdle: return "RX_IDLE";
    case CsmaState::Backoff: return "BACKOFF";
    case CsmaState::Cca: return "CCA";
    case CsmaState::TxData: return "TX_DATA";
    }
    return "?";
}

enum class SendOutcome
{
    Delivered,
    ChannelAccessFailure,
};

/**
 * Unslotted CSMA-CA station with an always-on receiver.
 *
 * The radio is in Rx whenever it is not transmitting. A sink only receives
 * and counts data frames addressed to it.
 */
class Station
{
  public:
    struct Config
    {
        MacAddress address{};
        bool sink{false};
        CsmaParams mac{};
        std::size_t queue_len{10};
        double tx_power_mw{1.0};
        double sensitivity_mw{dbm_to_mw(-95.0)};
    };

    Station(Scheduler& sched, Medium& medium, EntityId id, Position pos, RadioParams params, Config cfg, RngStream rng,
            TrafficCounters& counters)
        : m_sched(&sched)
        , m_medium(&medium)
        , m_id(id)
        , m_cfg(cfg)
        , m_rng(std::move(rng))
        , m_counters(&counters)
        , m_radio(sched, id, params, RadioMode::Rx)
    {
        m_cfg.mac.validate();
        MediumListener l;
        l.on_reception = [this](const ReceptionReport& r) { on_reception(r); };
        l.on_tx_end = [this](const Transmission&) { on_tx_end(); };
        m_port = m_medium->attach(m_radio, pos, cfg.sensitivity_mw, std::move(l));
    }

    bool enqueue(const DataFrame& frame)
    {
        if (m_queue.size() >= m_cfg.queue_len)
        {
            ++m_counters->dropped_queue;
            return false;
        }
        m_queue.push_back(frame);
        if (m_state == CsmaState::RxIdle)
        {
            begin_access();
        }
        return true;
    }

    [[nodiscard]] CsmaState state() const { return m_state; }
    [[nodiscard]] const Radio& radio() const { return m_radio; }
    [[nodiscard]] PortId port() const { return m_port; }
    [[nodiscard]] std::uint32_t backoff_exponent() const { return m_be; }
    [[nodiscard]] std::uint32_t backoff_count() const { return m_nb; }
    [[nodiscard]] std::uint64_t sent() const { return m_sent; }
    [[nodiscard]] std::uint64_t access_failures() const { return m_failures; }
    [[nodiscard]] std::uint64_t received() const { return m_received; }
    [[nodiscard]] std::uint64_t busy_ccas() const { return m_busy_ccas; }

    /// Observes every completed send attempt, for tests.
    void set_outcome_observer(std::function<void(SendOutcome, SimTime)> obs) { m_outcome_obs = std::move(obs); }

  private:
    void begin_access()
    {
        m_nb = 0;
        m_be = m_cfg.mac.min_be;
        backoff();
    }

    void backoff()
    {
        m_state = CsmaState::Backoff;
        const Duration delay = m_cfg.mac.unit_backoff * draw_backoff_periods(m_rng, m_be);
        m_sched->schedule(m_sched->now() + delay, m_id, [this] {
            m_state = CsmaState::Cca;
            m_sched->schedule(m_sched->now() + m_cfg.mac.cca_time, m_id, [this] { end_cca(); });
        });
    }

    void end_cca()
    {
        if (m_medium->carrier_sense(m_port, m_cfg.mac.cca_time) == ChannelState::Idle)
        {
            m_state = CsmaState::TxData;
            m_radio.set_mode(RadioMode::Tx);
            m_medium->begin_tx(m_port, m_queue.front(), m_cfg.tx_power_mw);
            return;
        }
        ++m_busy_ccas;
        ++m_nb;
        m_be = next_be(m_be, m_cfg.mac);
        if (m_nb > m_cfg.mac.max_csma_backoffs)
        {
            ++m_failures;
            ++m_counters->dropped_channel;
            finish(SendOutcome::ChannelAccessFailure);
            return;
        }
        backoff();
    }

    void on_tx_end()
    {
        m_radio.set_mode(RadioMode::Rx);
        ++m_sent;
        finish(SendOutcome::Delivered);
    }

    void finish(SendOutcome outcome)
    {
        m_queue.pop_front();
        if (m_outcome_obs)
        {
            m_outcome_obs(outcome, m_sched->now());
        }
        m_state = CsmaState::RxIdle;
        if (!m_queue.empty())
        {
            begin_access();
        }
    }

    void on_reception(const ReceptionReport& r)
    {
        if (!m_cfg.sink || r.corrupted)
        {
            return;
        }
        if (const auto* data = std::get_if<DataFrame>(&r.transmission.frame); data != nullptr && data->dest == m_cfg.address)
        {
            ++m_received;
            ++m_counters->received;
        }
    }

    Scheduler* m_sched;
    Medium* m_medium;
    EntityId m_id;
    Config m_cfg;
    RngStream m_rng;
    TrafficCounters* m_counters;
    Radio m_radio;
    PortId m_port{0};
    CsmaState m_state{CsmaState::RxIdle};
    std::deque<DataFrame> m_queue;
    std::uint32_t m_nb{0};
    std::uint32_t m_be{3};
    std::uint64_t m_sent{0};
    std::uint64_t m_failures{0};
    std::uint64_t m_received{0};
    std::uint64_t m_busy_ccas{0};
    std::function<void(SendOutcome, SimTime)> m_outcome_obs;
};

} // namespace dorasim::csma154
