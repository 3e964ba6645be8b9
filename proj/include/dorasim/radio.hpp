/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/scheduler.hpp"
#include "dorasim/time.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dorasim {

class IllegalTransition : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

class ZeroElapsed : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Electrical profile of one transceiver. Currents in amperes, voltage in volts.
struct RadioParams
{
    double supply_voltage{3.3};
    double sleep_current{900e-9};
    double rx_current{16.6e-3};
    double tx_current{21.2e-3};
    /// Current while decoding (wake-up receiver only); equals rx_current for a main radio.
    double active_current{16.6e-3};
    std::uint64_t bitrate{250'000};
    Duration switch_time{Duration::us(300)};

    /// Main transceiver: 3.3 V, 900 nA / 16.6 mA / 21.2 mA, 250 kbps.
    static RadioParams main_radio() { return RadioParams{}; }

    /// Wake-up receiver: 200 nA sleep, 1.1 uA listening, 9 mA while decoding, 32 kbps.
    static RadioParams wake_up_receiver()
    {
        RadioParams p;
        p.sleep_current = 200e-9;
        p.rx_current = 1.1e-6;
        p.tx_current = 0.0;
        p.active_current = 9e-3;
        p.bitrate = 32'000;
        p.switch_time = Duration{};
        return p;
    }

    void validate() const
    {
        if (!(supply_voltage > 0.0))
        {
            throw std::invalid_argument("supply_voltage must be positive");
        }
        if (sleep_current < 0.0 || rx_current < 0.0 || tx_current < 0.0 || active_current < 0.0)
        {
            throw std::invalid_argument("radio currents must be non-negative");
        }
        if (bitrate == 0)
        {
            throw std::invalid_argument("bitrate must be positive");
        }
    }
};

enum class RadioMode : std::size_t
{
    Sleep = 0,
    Rx,
    Tx,
    Switching,
    Active,
};

inline constexpr std::size_t radio_mode_count = 5;

constexpr std::string_view to_string(RadioMode m)
{
    switch (m)
    {
    case RadioMode::Sleep: return "sleep";
    case RadioMode::Rx: return "rx";
    case RadioMode::Tx: return "tx";
    case RadioMode::Switching: return "switching";
    case RadioMode::Active: return "active";
    }
    return "?";
}

/// Current drawn in `m`. Switching is billed at the receive current.
constexpr double mode_current(const RadioParams& p, RadioMode m)
{
    switch (m)
    {
    case RadioMode::Sleep: return p.sleep_current;
    case RadioMode::Rx: return p.rx_current;
    case RadioMode::Tx: return p.tx_current;
    case RadioMode::Switching: return p.rx_current;
    case RadioMode::Active: return p.active_current;
    }
    return 0.0;
}

/**
 * Per-mode residency of one radio.
 *
 * Residencies are exact tick counts. Charge and energy are evaluated from
 * them on demand, summing current x seconds over the modes in enum order and
 * multiplying by the supply voltage once, so the only rounding is the double
 * evaluation of that one expression.
 */
class EnergyLedger
{
  public:
    EnergyLedger() = default;
    explicit EnergyLedger(RadioParams params)
        : m_params(params)
    {
    }

    void add(RadioMode m, Duration d) { m_residency[static_cast<std::size_t>(m)] += d; }

    [[nodiscard]] Duration residency(RadioMode m) const { return m_residency[static_cast<std::size_t>(m)]; }
    [[nodiscard]] const std::array<Duration, radio_mode_count>& residencies() const { return m_residency; }

    [[nodiscard]] Duration total() const
    {
        Duration sum;
        for (const Duration& d : m_residency)
        {
            sum += d;
        }
        return sum;
    }

    /// Coulombs.
    [[nodiscard]] double charge() const
    {
        double q = 0.0;
        for (std::size_t i = 0; i < radio_mode_count; ++i)
        {
            q += mode_current(m_params, static_cast<RadioMode>(i)) * m_residency[i].seconds();
        }
        return q;
    }

    /// Joules.
    [[nodiscard]] double energy() const { return m_params.supply_voltage * charge(); }

    [[nodiscard]] const RadioParams& params() const { return m_params; }

  private:
    RadioParams m_params{};
    std::array<Duration, radio_mode_count> m_residency{};
};

/// Watts. Throws ZeroElapsed when elapsed is zero.
inline double mean_power(const EnergyLedger& ledger, Duration elapsed)
{
    if (elapsed.count() == 0)
    {
        throw ZeroElapsed("mean power over an empty interval");
    }
    return ledger.energy() / elapsed.seconds();
}

/**
 * Transceiver state machine with residency accounting.
 *
 * Any transition into or out of Sleep passes through a Switching interval of
 * params.switch_time (skipped when that is zero). Rx, Tx and Active switch
 * among themselves instantly. The mode flip at the end of a switching
 * interval is scheduled inside set_mode(), before the caller can schedule
 * anything at the returned time, so a continuation scheduled for
 * effective_at always observes the target mode.
 */
class Radio
{
  public:
    using ModeObserver = std::function<void(RadioMode from, RadioMode to)>;

    Radio(Scheduler& sched, EntityId owner, RadioParams params, RadioMode initial = RadioMode::Sleep)
        : m_sched(&sched)
        , m_owner(owner)
        , m_params(params)
        , m_ledger(params)
        , m_mode(initial)
        , m_mode_since(sched.now())
        , m_ledger_closed_at(sched.now())
    {
        m_params.validate();
    }

    Radio(const Radio&) = delete;
    Radio& operator=(const Radio&) = delete;
    Radio(Radio&&) = delete;
    Radio& operator=(Radio&&) = delete;
    ~Radio()
    {
        if (m_flip)
        {
            m_sched->cancel(*m_flip);
        }
    }

    [[nodiscard]] RadioMode mode() const { return m_mode; }
    [[nodiscard]] SimTime mode_since() const { return m_mode_since; }
    [[nodiscard]] std::optional<RadioMode> switching_target() const { return m_switch_target; }
    [[nodiscard]] const RadioParams& params() const { return m_params; }
    [[nodiscard]] EntityId owner() const { return m_owner; }
    [[nodiscard]] bool transmitting() const { return m_transmitting; }

    /// True for modes in which the front end is demodulating (Rx or Active).
    [[nodiscard]] bool receiving() const { return m_mode == RadioMode::Rx || m_mode == RadioMode::Active; }

    void set_mode_observer(ModeObserver obs) { m_observer = std::move(obs); }

    /// Requests `target`; returns the time at which the radio is in it.
    SimTime set_mode(RadioMode target)
    {
        if (target == RadioMode::Switching)
        {
            throw IllegalTransition("Switching is not a requestable mode");
        }
        const SimTime now = m_sched->now();
        if (m_mode == RadioMode::Switching)
        {
            if (m_switch_target == target)
            {
                return m_switch_done_at;
            }
            throw IllegalTransition(std::string("radio busy switching to ") + std::string(to_string(*m_switch_target)) +
                                    ", cannot retarget to " + std::string(to_string(target)));
        }
        if (target == m_mode)
        {
            return now;
        }
        if (m_transmitting)
        {
            throw IllegalTransition(std::string("cannot leave tx for ") + std::string(to_string(target)) +
                                    " while a transmission is in flight");
        }
        const bool crosses_sleep = m_mode == RadioMode::Sleep || target == RadioMode::Sleep;
        if (crosses_sleep && m_params.switch_time.count() > 0)
        {
            enter(RadioMode::Switching);
            m_switch_target = target;
            m_switch_done_at = now + m_params.switch_time;
            m_flip = m_sched->schedule(m_switch_done_at, m_owner, [this] {
                m_flip.reset();
                const RadioMode t = *m_switch_target;
                m_switch_target.reset();
                enter(t);
            });
            return m_switch_done_at;
        }
        enter(target);
        return now;
    }

    /// Called by the medium around an outgoing transmission.
    void mark_transmitting(bool on)
    {
        if (on && m_mode != RadioMode::Tx)
        {
            throw IllegalTransition("transmission started while radio is not in tx");
        }
        m_transmitting = on;
    }

    /// Ledger with the open interval closed at now(); does not mutate the radio.
    [[nodiscard]] EnergyLedger ledger() const
    {
        EnergyLedger l = m_ledger;
        l.add(m_mode, m_sched->now() - m_ledger_closed_at);
        return l;
    }

  private:
    void enter(RadioMode m)
    {
        const SimTime now = m_sched->now();
        m_ledger.add(m_mode, now - m_ledger_closed_at);
        m_ledger_closed_at = now;
        const RadioMode from = m_mode;
        m_mode = m;
        m_mode_since = now;
        if (m_observer)
        {
            m_observer(from, m);
        }
    }

    Scheduler* m_sched;
    EntityId m_owner;
    RadioParams m_params;
    EnergyLedger m_ledger;
    RadioMode m_mode;
    SimTime m_mode_since;
    SimTime m_ledger_closed_at;
    std::optional<RadioMode> m_switch_target;
    SimTime m_switch_done_at{};
    std::optional<EventHandle> m_flip;
    bool m_transmitting{false};
    ModeObserver m_observer;
};

} // namespace dorasim
