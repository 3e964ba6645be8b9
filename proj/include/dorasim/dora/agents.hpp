/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/dora/decider.hpp"
#include "dorasim/dora/fsm.hpp"
#include "dorasim/medium.hpp"
#include "dorasim/radio.hpp"
#include "dorasim/scheduler.hpp"
#include "dorasim/traffic.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dorasim::dora {

/**
 * Polling base station (BSMAC) driving one main radio.
 *
 * Wake-up timers sit on a fixed grid, first_poll + k * poll_spacing, so the
 * polling period does not drift with response latency.
 */
class BaseStation
{
  public:
    struct Config
    {
        std::size_t node_count{5};
        Duration t_out{Duration::ms(10)};
        Duration poll_spacing{Duration::s(3)};
        SimTime first_poll{};
        Duration wuc_preamble{Duration::ms(4)};
        std::uint64_t wuc_bitrate{32'000};
        double tx_power_mw{1.0};
        double sensitivity_mw{dbm_to_mw(-95.0)};
    };

    BaseStation(Scheduler& sched, Medium& medium, EntityId id, Position pos, RadioParams params, Config cfg,
                TrafficCounters& counters)
        : m_sched(&sched)
        , m_medium(&medium)
        , m_id(id)
        , m_cfg(cfg)
        , m_counters(&counters)
        , m_radio(sched, id, params, RadioMode::Rx)
        , m_polls(cfg.node_count, 0)
        , m_delivered(cfg.node_count, 0)
    {
        m_state.node_count = cfg.node_count;
        m_state.t_out = cfg.t_out;
        MediumListener l;
        l.on_reception = [this](const ReceptionReport& r) { on_reception(r); };
        l.on_tx_end = [this](const Transmission&) { feed(bs_in::TxComplete{}); };
        m_port = m_medium->attach(m_radio, pos, cfg.sensitivity_mw, std::move(l));
    }

    void start()
    {
        m_next_timer_at = m_cfg.first_poll;
        arm_timer();
    }

    [[nodiscard]] const BsMacState& state() const { return m_state; }
    [[nodiscard]] const Radio& radio() const { return m_radio; }
    [[nodiscard]] PortId port() const { return m_port; }
    /// Number of wake-up calls addressed to each node index.
    [[nodiscard]] const std::vector<std::uint64_t>& polls() const { return m_polls; }
    [[nodiscard]] const std::vector<std::uint64_t>& delivered() const { return m_delivered; }
    [[nodiscard]] std::uint64_t timeouts() const { return m_timeouts; }
    [[nodiscard]] std::uint64_t rounds() const { return m_rounds; }
    /// Reception time of the most recent data frame, relative to its wake-up call start.
    [[nodiscard]] std::optional<Duration> last_latency() const { return m_last_latency; }

  private:
    void arm_timer()
    {
        m_sched->schedule(m_next_timer_at, m_id, [this] { feed(bs_in::TimerFired{}); });
    }

    void on_reception(const ReceptionReport& r)
    {
        if (r.corrupted || m_state.phase != BsPhase::WaitData)
        {
            return;
        }
        if (const auto* data = std::get_if<DataFrame>(&r.transmission.frame))
        {
            if (data->dest == MacAddress::base_station())
            {
                feed(bs_in::DataRx{*data});
            }
        }
    }

    void feed(const BsInput& in)
    {
        BsStep step = bs_step(m_state, in);
        m_state = step.state;
        SimTime ready = m_sched->now();
        for (const BsAction& a : step.actions)
        {
            std::visit(overloaded{
                           [&](const bs_act::RadioToTx&) { ready = m_radio.set_mode(RadioMode::Tx); },
                           [&](const bs_act::SendWakeUpCall& w) {
                               ++m_polls.at(m_state.current_target);
                               ++m_rounds;
                               m_wuc_started = ready;
                               WakeUpCall frame = WakeUpCall::addressed_to(w.dest, m_cfg.wuc_preamble);
                               frame.bitrate = m_cfg.wuc_bitrate;
                               m_sched->schedule(ready, m_id,
                                                 [this, frame] { m_medium->begin_tx(m_port, frame, m_cfg.tx_power_mw); });
                           },
                           [&](const bs_act::RadioToRx&) { ready = m_radio.set_mode(RadioMode::Rx); },
                           [&](const bs_act::ArmTimeout& t) {
                               m_timeout = m_sched->schedule(ready + t.after, m_id, [this] {
                                   m_timeout.reset();
                                   feed(bs_in::Timeout{});
                               });
                           },
                           [&](const bs_act::CancelTimeout&) {
                               if (m_timeout)
                               {
                                   m_sched->cancel(*m_timeout);
                                   m_timeout.reset();
                               }
                           },
                           [&](const bs_act::ScheduleNextTimer&) {
                               m_next_timer_at = m_next_timer_at + m_cfg.poll_spacing;
                               arm_timer();
                           },
                           [&](const bs_act::Delivered& d) {
                               ++m_counters->received;
                               const std::size_t idx = d.frame.src.value - 1u;
                               if (idx < m_delivered.size())
                               {
                                   ++m_delivered[idx];
                               }
                               m_last_latency = m_sched->now() - m_wuc_started;
                           },
                           [&](const bs_act::TimedOut&) { ++m_timeouts; },
                       },
                       a);
        }
    }

    Scheduler* m_sched;
    Medium* m_medium;
    EntityId m_id;
    Config m_cfg;
    TrafficCounters* m_counters;
    Radio m_radio;
    PortId m_port{0};
    BsMacState m_state{};
    SimTime m_next_timer_at{};
    SimTime m_wuc_started{};
    std::optional<EventHandle> m_timeout;
    std::vector<std::uint64_t> m_polls;
    std::vector<std::uint64_t> m_delivered;
    std::uint64_t m_timeouts{0};
    std::uint64_t m_rounds{0};
    std::optional<Duration> m_last_latency;
};

/**
 * Sensor node with a wake-up receiver (DoRa-MAC) and a main radio (Mac_Main)
 * joined by a zero-latency control channel.
 *
 * Control messages and the application's data are delivered as events at
 * the current tick, so they run after the emitting transition finished.
 */
class Node
{
  public:
    struct Config
    {
        std::uint32_t index{0};
        Duration decider_min_duration{Duration::us(3800)};
        double wakeup_threshold_mw{dbm_to_mw(-55.0)};
        double data_sensitivity_mw{dbm_to_mw(-95.0)};
        double tx_power_mw{1.0};
        FrameShape frame{};
        /// A disabled node keeps both radios asleep and never answers.
        bool enabled{true};
    };

    Node(Scheduler& sched, Medium& medium, EntityId id, Position pos, RadioParams main_params, RadioParams wur_params,
         Config cfg, TrafficCounters& counters)
        : m_sched(&sched)
        , m_medium(&medium)
        , m_id(id)
        , m_cfg(cfg)
        , m_counters(&counters)
        , m_main(sched, id, main_params, RadioMode::Sleep)
        , m_wur(sched, id, wur_params, cfg.enabled ? RadioMode::Rx : RadioMode::Sleep)
    {
        m_wur_state.own = MacAddress::for_node(cfg.index);
        MediumListener main_l;
        main_l.on_tx_end = [this](const Transmission&) { feed_main(main_in::TxComplete{}); };
        m_main_port = m_medium->attach(m_main, pos, cfg.data_sensitivity_mw, std::move(main_l));

        MediumListener wur_l;
        if (cfg.enabled)
        {
            wur_l.on_carrier = [this](const Transmission& tx, double) { on_carrier(tx); };
            wur_l.on_reception = [this](const ReceptionReport& r) { on_reception(r); };
        }
        m_wur_port = m_medium->attach(m_wur, pos, cfg.wakeup_threshold_mw, std::move(wur_l));
    }

    [[nodiscard]] const WurMacState& wur_state() const { return m_wur_state; }
    [[nodiscard]] const MainMacState& main_state() const { return m_main_state; }
    [[nodiscard]] const Radio& main_radio() const { return m_main; }
    [[nodiscard]] const Radio& wake_up_radio() const { return m_wur; }
    [[nodiscard]] MacAddress address() const { return m_wur_state.own; }
    [[nodiscard]] std::uint64_t wakeups() const { return m_wakeups; }
    [[nodiscard]] std::uint64_t decoded_calls() const { return m_decoded; }
    [[nodiscard]] std::uint64_t tx_count() const { return m_tx_count; }

  private:
    void on_carrier(const Transmission& tx)
    {
        if (m_wur_state.phase != WurPhase::Listen || m_decider_pending)
        {
            return;
        }
        m_decider_pending = true;
        const SimTime from = m_sched->now();
        const SimTime to = from + m_cfg.decider_min_duration;
        const TransmissionId id = tx.id;
        m_sched->schedule(to, m_id, [this, id, from, to] {
            m_decider_pending = false;
            if (m_wur_state.phase != WurPhase::Listen)
            {
                return;
            }
            const auto trace = m_medium->power_trace(m_wur_port, from, to);
            if (decide_wakeup(trace, m_cfg.wakeup_threshold_mw, m_cfg.decider_min_duration))
            {
                m_decoding = id;
                feed_wur(wur_in::PreambleOk{});
            }
        });
    }

    void on_reception(const ReceptionReport& r)
    {
        if (m_wur_state.phase != WurPhase::DecodeAddress || !m_decoding || r.transmission.id != *m_decoding)
        {
            return;
        }
        m_decoding.reset();
        ++m_decoded;
        wur_in::AddrDecoded d{MacAddress::broadcast(), false};
        if (const auto* wuc = std::get_if<WakeUpCall>(&r.transmission.frame); wuc != nullptr && !r.corrupted)
        {
            d = wur_in::AddrDecoded{wuc->dest, wuc->checksum_ok()};
        }
        feed_wur(d);
    }

    void feed_wur(const WurInput& in)
    {
        WurStep step = wur_step(m_wur_state, in);
        m_wur_state = step.state;
        for (const WurAction& a : step.actions)
        {
            std::visit(overloaded{
                           [&](const wur_act::DecodeAddress&) { start_decode(); },
                           [&](const wur_act::BackToListen&) { m_wur.set_mode(RadioMode::Rx); },
                           [&](const wur_act::EmitWakeup&) {
                               ++m_wakeups;
                               m_sched->schedule(m_sched->now(), m_id, [this] { feed_main(main_in::WakeupCtrl{}); });
                           },
                           [&](const wur_act::RequestAppData&) {
                               m_sched->schedule(m_sched->now(), m_id, [this] {
                                   ++m_counters->generated;
                                   feed_main(main_in::AppData{m_cfg.frame.make(address(), m_seq++)});
                               });
                           },
                       },
                       a);
        }
        if (m_wur_state.phase == WurPhase::WakeUp)
        {
            feed_wur(wur_in::WakeupSent{});
        }
    }

    void start_decode()
    {
        const Transmission& tx = m_medium->transmission(*m_decoding);
        SimTime addr_start = tx.start + preamble_duration(tx.frame);
        if (addr_start < m_sched->now())
        {
            addr_start = m_sched->now();
        }
        const TransmissionId id = tx.id;
        m_sched->schedule(addr_start, m_id, [this, id] {
            if (m_wur_state.phase == WurPhase::DecodeAddress && m_decoding == id)
            {
                m_wur.set_mode(RadioMode::Active);
            }
        });
        // Fallback in case the frame fades below sensitivity and no report arrives.
        m_sched->schedule(tx.end(), m_id, [this, id] {
            if (m_wur_state.phase == WurPhase::DecodeAddress && m_decoding == id)
            {
                m_decoding.reset();
                feed_wur(wur_in::AddrDecoded{MacAddress::broadcast(), false});
            }
        });
    }

    void feed_main(const MainInput& in)
    {
        MainStep step = mainmac_step(m_main_state, in);
        m_main_state = step.state;
        SimTime ready = m_sched->now();
        for (const MainAction& a : step.actions)
        {
            std::visit(overloaded{
                           [&](const main_act::RadioToTx&) { ready = m_main.set_mode(RadioMode::Tx); },
                           [&](const main_act::Transmit& t) {
                               const DataFrame frame = t.frame;
                               m_sched->schedule(ready, m_id, [this, frame] {
                                   ++m_tx_count;
                                   m_medium->begin_tx(m_main_port, frame, m_cfg.tx_power_mw);
                               });
                           },
                           [&](const main_act::EmitTxDone&) {
                               m_sched->schedule(m_sched->now(), m_id, [this] { feed_wur(wur_in::TxDoneCtrl{}); });
                           },
                           [&](const main_act::RadioToSleep&) { m_main.set_mode(RadioMode::Sleep); },
                       },
                       a);
        }
    }

    Scheduler* m_sched;
    Medium* m_medium;
    EntityId m_id;
    Config m_cfg;
    TrafficCounters* m_counters;
    Radio m_main;
    Radio m_wur;
    PortId m_main_port{0};
    PortId m_wur_port{0};
    WurMacState m_wur_state{};
    MainMacState m_main_state{};
    bool m_decider_pending{false};
    std::optional<TransmissionId> m_decoding;
    std::uint32_t m_seq{0};
    std::uint64_t m_wakeups{0};
    std::uint64_t m_decoded{0};
    std::uint64_t m_tx_count{0};
};

} // namespace dorasim::dora
