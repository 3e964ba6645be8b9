/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/frames.hpp"
#include "dorasim/time.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// The three DoRa MAC state machines, free of any I/O. Each step function
// maps (state, input) to the next state plus a list of actions for the
// driver to carry out, in order.

namespace dorasim::dora {

/// Input not accepted by the current state. Always an FSM wiring bug.
class IllegalInput : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Base station polling MAC

enum class BsPhase
{
    WaitTimer,
    SendWuc,
    WaitData,
};

constexpr std::string_view to_string(BsPhase p)
{
    switch (p)
    {
    case BsPhase::WaitTimer: return "WAIT_TIMER";
    case BsPhase::SendWuc: return "SEND_WUC";
    case BsPhase::WaitData: return "WAIT_DATA";
    }
    return "?";
}

struct BsMacState
{
    BsPhase phase{BsPhase::WaitTimer};
    std::size_t current_target{0};
    std::size_t node_count{1};
    Duration t_out{Duration::ms(10)};
};

namespace bs_in {
struct TimerFired
{
};
struct TxComplete
{
};
struct DataRx
{
    DataFrame frame;
};
struct Timeout
{
};
} // namespace bs_in

using BsInput = std::variant<bs_in::TimerFired, bs_in::TxComplete, bs_in::DataRx, bs_in::Timeout>;

namespace bs_act {
struct RadioToTx
{
};
struct SendWakeUpCall
{
    MacAddress dest;
};
struct RadioToRx
{
};
struct ArmTimeout
{
    Duration after;
};
struct CancelTimeout
{
};
struct ScheduleNextTimer
{
};
struct Delivered
{
    DataFrame frame;
};
struct TimedOut
{
    std::size_t target;
};
} // namespace bs_act

using BsAction = std::variant<bs_act::RadioToTx, bs_act::SendWakeUpCall, bs_act::RadioToRx, bs_act::ArmTimeout,
                              bs_act::CancelTimeout, bs_act::ScheduleNextTimer, bs_act::Delivered, bs_act::TimedOut>;

struct BsStep
{
    BsMacState state;
    std::vector<BsAction> actions;
};

inline BsStep bs_step(BsMacState s, const BsInput& input)
{
    if (s.node_count == 0)
    {
        throw IllegalInput("base station polls an empty node set");
    }
    auto illegal = [&](std::string_view what) -> BsStep {
        throw IllegalInput(std::string("BSMAC: ") + std::string(what) + " in state " + std::string(to_string(s.phase)));
    };
    auto advance = [&s] {
        s.current_target = (s.current_target + 1) % s.node_count;
        s.phase = BsPhase::WaitTimer;
    };
    return std::visit(
        overloaded{
            [&](const bs_in::TimerFired&) -> BsStep {
                if (s.phase != BsPhase::WaitTimer)
                {
                    return illegal("timer_fired");
                }
                s.phase = BsPhase::SendWuc;
                const MacAddress dest = MacAddress::for_node(static_cast<std::uint32_t>(s.current_target));
                return BsStep{s, {bs_act::RadioToTx{}, bs_act::SendWakeUpCall{dest}}};
            },
            [&](const bs_in::TxComplete&) -> BsStep {
                if (s.phase != BsPhase::SendWuc)
                {
                    return illegal("tx_complete");
                }
                s.phase = BsPhase::WaitData;
                return BsStep{s, {bs_act::RadioToRx{}, bs_act::ArmTimeout{s.t_out}}};
            },
            [&](const bs_in::DataRx& rx) -> BsStep {
                if (s.phase != BsPhase::WaitData)
                {
                    return illegal("data_rx");
                }
                if (rx.frame.src != MacAddress::for_node(static_cast<std::uint32_t>(s.current_target)))
                {
                    return illegal("data_rx from a node that was not polled");
                }
                advance();
                return BsStep{s, {bs_act::CancelTimeout{}, bs_act::Delivered{rx.frame}, bs_act::ScheduleNextTimer{}}};
            },
            [&](const bs_in::Timeout&) -> BsStep {
                if (s.phase != BsPhase::WaitData)
                {
                    return illegal("timeout");
                }
                const std::size_t missed = s.current_target;
                advance();
                return BsStep{s, {bs_act::TimedOut{missed}, bs_act::ScheduleNextTimer{}}};
            },
        },
        input);
}

// ---------------------------------------------------------------------------
// Node wake-up radio MAC

enum class WurPhase
{
    Listen,
    DecodeAddress,
    WakeUp,
    WaitTxDone,
};

constexpr std::string_view to_string(WurPhase p)
{
    switch (p)
    {
    case WurPhase::Listen: return "LISTEN";
    case WurPhase::DecodeAddress: return "DECODE_ADDRESS";
    case WurPhase::WakeUp: return "WAKE_UP";
    case WurPhase::WaitTxDone: return "WAIT_TX_DONE";
    }
    return "?";
}

struct WurMacState
{
    WurPhase phase{WurPhase::Listen};
    MacAddress own{};
};

namespace wur_in {
/// Decider accepted the preamble.
struct PreambleOk
{
};
struct AddrDecoded
{
    MacAddress addr;
    bool checksum_ok;
};
/// Wakeup control and data request have left the WAKE_UP state.
struct WakeupSent
{
};
struct TxDoneCtrl
{
};
} // namespace wur_in

using WurInput = std::variant<wur_in::PreambleOk, wur_in::AddrDecoded, wur_in::WakeupSent, wur_in::TxDoneCtrl>;

namespace wur_act {
/// Bill the receiver at its active current while the address field is on air.
struct DecodeAddress
{
};
struct BackToListen
{
};
struct EmitWakeup
{
};
struct RequestAppData
{
};
} // namespace wur_act

using WurAction = std::variant<wur_act::DecodeAddress, wur_act::BackToListen, wur_act::EmitWakeup, wur_act::RequestAppData>;

struct WurStep
{
    WurMacState state;
    std::vector<WurAction> actions;
};

inline WurStep wur_step(WurMacState s, const WurInput& input)
{
    auto illegal = [&](std::string_view what) -> WurStep {
        throw IllegalInput(std::string("DoRa-MAC: ") + std::string(what) + " in state " + std::string(to_string(s.phase)));
    };
    return std::visit(
        overloaded{
            [&](const wur_in::PreambleOk&) -> WurStep {
                if (s.phase != WurPhase::Listen)
                {
                    return illegal("preamble_ok");
                }
                s.phase = WurPhase::DecodeAddress;
                return WurStep{s, {wur_act::DecodeAddress{}}};
            },
            [&](const wur_in::AddrDecoded& d) -> WurStep {
                if (s.phase != WurPhase::DecodeAddress)
                {
                    return illegal("addr_decoded");
                }
                if (!d.checksum_ok || d.addr != s.own)
                {
                    s.phase = WurPhase::Listen;
                    return WurStep{s, {wur_act::BackToListen{}}};
                }
                s.phase = WurPhase::WakeUp;
                return WurStep{s, {wur_act::BackToListen{}, wur_act::EmitWakeup{}, wur_act::RequestAppData{}}};
            },
            [&](const wur_in::WakeupSent&) -> WurStep {
                if (s.phase != WurPhase::WakeUp)
                {
                    return illegal("wakeup_sent");
                }
                s.phase = WurPhase::WaitTxDone;
                return WurStep{s, {}};
            },
            [&](const wur_in::TxDoneCtrl&) -> WurStep {
                if (s.phase != WurPhase::WaitTxDone)
                {
                    return illegal("tx_done_ctrl");
                }
                s.phase = WurPhase::Listen;
                return WurStep{s, {}};
            },
        },
        input);
}

// ---------------------------------------------------------------------------
// Node main-radio MAC

enum class MainPhase
{
    Sleep,
    IdleWaitData,
    Tx,
};

constexpr std::string_view to_string(MainPhase p)
{
    switch (p)
    {
    case MainPhase::Sleep: return "SLEEP";
    case MainPhase::IdleWaitData: return "IDLE_WAIT_DATA";
    case MainPhase::Tx: return "TX";
    }
    return "?";
}

struct MainMacState
{
    MainPhase phase{MainPhase::Sleep};
};

namespace main_in {
struct WakeupCtrl
{
};
struct AppData
{
    DataFrame frame;
};
struct TxComplete
{
};
} // namespace main_in

using MainInput = std::variant<main_in::WakeupCtrl, main_in::AppData, main_in::TxComplete>;

namespace main_act {
struct RadioToTx
{
};
struct Transmit
{
    DataFrame frame;
};
struct EmitTxDone
{
};
struct RadioToSleep
{
};
} // namespace main_act

using MainAction = std::variant<main_act::RadioToTx, main_act::Transmit, main_act::EmitTxDone, main_act::RadioToSleep>;

struct MainStep
{
    MainMacState state;
    std::vector<MainAction> actions;
};

inline MainStep mainmac_step(MainMacState s, const MainInput& input)
{
    auto illegal = [&](std::string_view what) -> MainStep {
        throw IllegalInput(std::string("Mac_Main: ") + std::string(what) + " in state " + std::string(to_string(s.phase)));
    };
    return std::visit(
        overloaded{
            [&](const main_in::WakeupCtrl&) -> MainStep {
                if (s.phase != MainPhase::Sleep)
                {
                    return illegal("wakeup_ctrl");
                }
                s.phase = MainPhase::IdleWaitData;
                return MainStep{s, {}};
            },
            [&](const main_in::AppData& d) -> MainStep {
                if (s.phase != MainPhase::IdleWaitData)
                {
                    return illegal("app_data");
                }
                s.phase = MainPhase::Tx;
                return MainStep{s, {main_act::RadioToTx{}, main_act::Transmit{d.frame}}};
            },
            [&](const main_in::TxComplete&) -> MainStep {
                if (s.phase != MainPhase::Tx)
                {
                    return illegal("tx_complete");
                }
                s.phase = MainPhase::Sleep;
                return MainStep{s, {main_act::EmitTxDone{}, main_act::RadioToSleep{}}};
            },
        },
        input);
}

} // namespace dorasim::dora
