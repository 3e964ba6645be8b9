/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "oracles.hpp"

#include "dorasim/dora/agents.hpp"
#include "dorasim/dora/decider.hpp"
#include "dorasim/dora/fsm.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <vector>

using namespace dorasim;
using namespace dorasim::dora;
using namespace dorasim::literals;

// Decider ------------------------------------------------------------------

TEST(Decider, BoundaryCases)
{
    const double thr = dbm_to_mw(-55.0);
    for (const auto& c : oracle::decider_cases(thr, 3800_us))
    {
        EXPECT_EQ(decide_wakeup(c.trace, thr, 3800_us), c.expected) << c.name;
    }
}

TEST(Decider, GapBetweenSegmentsBreaksContinuity)
{
    const SimTime t0{};
    const std::vector<PowerSegment> trace{{t0, t0 + 2_ms, 1.0}, {t0 + 2_ms + 1_ns, t0 + 5_ms, 1.0}};
    EXPECT_FALSE(decide_wakeup(trace, 0.5, 3_ms));
    EXPECT_TRUE(decide_wakeup(trace, 0.5, 2_ms));
}

TEST(Decider, DataFrameIsTooShortForDefaultMinimum)
{
    const SimTime t0{};
    const std::vector<PowerSegment> trace{{t0, t0 + Duration{oracle::data_airtime_ns}, 1.0}};
    EXPECT_FALSE(decide_wakeup(trace, 0.5, 3800_us));
}

// BSMAC ----------------------------------------------------------------------

namespace {

std::vector<std::size_t> poll_targets(std::size_t n, std::size_t rounds)
{
    BsMacState s;
    s.node_count = n;
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < rounds; ++r)
    {
        BsStep st = bs_step(s, bs_in::TimerFired{});
        const auto& send = std::get<bs_act::SendWakeUpCall>(st.actions.at(1));
        out.push_back(send.dest.value - 1u);
        st = bs_step(st.state, bs_in::TxComplete{});
        st = bs_step(st.state, bs_in::Timeout{});
        s = st.state;
    }
    return out;
}

} // namespace

TEST(BsStep, RoundRobinOverTenRounds)
{
    EXPECT_EQ(poll_targets(5, 10), (std::vector<std::size_t>{0, 1, 2, 3, 4, 0, 1, 2, 3, 4}));
}

TEST(BsStep, TransitionsAndActions)
{
    BsMacState s;
    s.node_count = 5;
    BsStep st = bs_step(s, bs_in::TimerFired{});
    EXPECT_EQ(st.state.phase, BsPhase::SendWuc);
    ASSERT_EQ(st.actions.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<bs_act::RadioToTx>(st.actions[0]));

    st = bs_step(st.state, bs_in::TxComplete{});
    EXPECT_EQ(st.state.phase, BsPhase::WaitData);
    ASSERT_EQ(st.actions.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<bs_act::RadioToRx>(st.actions[0]));
    EXPECT_EQ(std::get<bs_act::ArmTimeout>(st.actions[1]).after, 10_ms);

    DataFrame f;
    f.src = MacAddress::for_node(0);
    st = bs_step(st.state, bs_in::DataRx{f});
    EXPECT_EQ(st.state.phase, BsPhase::WaitTimer);
    EXPECT_EQ(st.state.current_target, 1u);
    ASSERT_EQ(st.actions.size(), 3u);
    EXPECT_TRUE(std::holds_alternative<bs_act::CancelTimeout>(st.actions[0]));
    EXPECT_TRUE(std::holds_alternative<bs_act::ScheduleNextTimer>(st.actions[2]));
}

TEST(BsStep, UnexpectedInputsAreIllegal)
{
    BsMacState s;
    s.node_count = 3;
    EXPECT_THROW(bs_step(s, bs_in::Timeout{}), IllegalInput);
    EXPECT_THROW(bs_step(s, bs_in::TxComplete{}), IllegalInput);
    BsStep st = bs_step(s, bs_in::TimerFired{});
    EXPECT_THROW(bs_step(st.state, bs_in::TimerFired{}), IllegalInput);
    st = bs_step(st.state, bs_in::TxComplete{});
    DataFrame stranger;
    stranger.src = MacAddress::for_node(2);
    EXPECT_THROW(bs_step(st.state, bs_in::DataRx{stranger}), IllegalInput);
}

// DoRa-MAC -------------------------------------------------------------------

TEST(WurStep, AddressMismatchReturnsToListen)
{
    WurMacState s;
    s.own = MacAddress::for_node(1);
    WurStep st = wur_step(s, wur_in::PreambleOk{});
    EXPECT_EQ(st.state.phase, WurPhase::DecodeAddress);
    st = wur_step(st.state, wur_in::AddrDecoded{MacAddress::for_node(2), true});
    EXPECT_EQ(st.state.phase, WurPhase::Listen);
    for (const auto& a : st.actions)
    {
        EXPECT_FALSE(std::holds_alternative<wur_act::EmitWakeup>(a));
    }
}

TEST(WurStep, AddressMatchEmitsOneWakeup)
{
    WurMacState s;
    s.own = MacAddress::for_node(2);
    WurStep st = wur_step(wur_step(s, wur_in::PreambleOk{}).state, wur_in::AddrDecoded{MacAddress::for_node(2), true});
    EXPECT_EQ(st.state.phase, WurPhase::WakeUp);
    int wakeups = 0;
    int requests = 0;
    for (const auto& a : st.actions)
    {
        wakeups += std::holds_alternative<wur_act::EmitWakeup>(a);
        requests += std::holds_alternative<wur_act::RequestAppData>(a);
    }
    EXPECT_EQ(wakeups, 1);
    EXPECT_EQ(requests, 1);
    st = wur_step(st.state, wur_in::WakeupSent{});
    EXPECT_EQ(st.state.phase, WurPhase::WaitTxDone);
    st = wur_step(st.state, wur_in::TxDoneCtrl{});
    EXPECT_EQ(st.state.phase, WurPhase::Listen);
}

TEST(WurStep, BadChecksumReturnsToListen)
{
    WurMacState s;
    s.own = MacAddress::for_node(2);
    WurStep st = wur_step(wur_step(s, wur_in::PreambleOk{}).state, wur_in::AddrDecoded{MacAddress::for_node(2), false});
    EXPECT_EQ(st.state.phase, WurPhase::Listen);
}

TEST(WurStep, UnexpectedInputsAreIllegal)
{
    WurMacState s;
    EXPECT_THROW(wur_step(s, wur_in::TxDoneCtrl{}), IllegalInput);
    EXPECT_THROW(wur_step(s, wur_in::AddrDecoded{MacAddress::for_node(0), true}), IllegalInput);
}

TEST(Checksum, DetectsAddressCorruption)
{
    WakeUpCall w = WakeUpCall::addressed_to(MacAddress::for_node(3));
    EXPECT_TRUE(w.checksum_ok());
    w.dest = MacAddress::for_node(4);
    EXPECT_FALSE(w.checksum_ok());
    EXPECT_EQ(w.address_airtime().count(), oracle::wuc_address_ns);
}

// Mac_Main -------------------------------------------------------------------

TEST(MainStep, AppDataWithoutWakeupIsIllegal)
{
    DataFrame f;
    EXPECT_THROW(mainmac_step(MainMacState{}, main_in::AppData{f}), IllegalInput);
}

TEST(MainStep, FullCycle)
{
    MainStep st = mainmac_step(MainMacState{}, main_in::WakeupCtrl{});
    EXPECT_EQ(st.state.phase, MainPhase::IdleWaitData);
    EXPECT_TRUE(st.actions.empty());
    st = mainmac_step(st.state, main_in::AppData{DataFrame{}});
    EXPECT_EQ(st.state.phase, MainPhase::Tx);
    ASSERT_EQ(st.actions.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<main_act::RadioToTx>(st.actions[0]));
    EXPECT_TRUE(std::holds_alternative<main_act::Transmit>(st.actions[1]));
    st = mainmac_step(st.state, main_in::TxComplete{});
    EXPECT_EQ(st.state.phase, MainPhase::Sleep);
}

// End to end -----------------------------------------------------------------

namespace {

struct Network
{
    Scheduler sched;
    Medium medium{sched, Propagation{}};
    TrafficCounters counters;
    std::unique_ptr<BaseStation> bs;
    std::vector<std::unique_ptr<Node>> nodes;

    Network(std::size_t n, Duration spacing, std::vector<bool> alive = {})
    {
        BaseStation::Config bc;
        bc.node_count = n;
        bc.poll_spacing = spacing;
        bs = std::make_unique<BaseStation>(sched, medium, 0, Position{10, 10}, RadioParams::main_radio(), bc, counters);
        for (std::uint32_t i = 0; i < n; ++i)
        {
            Node::Config nc;
            nc.index = i;
            nc.enabled = alive.empty() || alive[i];
            nodes.push_back(std::make_unique<Node>(sched, medium, i + 1, Position{2.0 + 3.0 * i, 4.0},
                                                   RadioParams::main_radio(), RadioParams::wake_up_receiver(), nc,
                                                   counters));
        }
    }
};

} // namespace

TEST(DoraNetwork, LatencyMatchesHandComputation)
{
    Network net(1, 1_s);
    net.medium.forbid_overlap(true);
    net.bs->start();
    net.sched.run_until(SimTime::at(500_ms));
    ASSERT_TRUE(net.bs->last_latency());
    EXPECT_EQ(net.bs->last_latency()->count(), oracle::dora_latency_ns);
    // Data completes within T_out of the wake-up call's end.
    EXPECT_LT(oracle::dora_latency_ns - oracle::wuc_preamble_ns - oracle::wuc_address_ns, 10'000'000u);
    EXPECT_EQ(net.counters.received, 1u);
    EXPECT_EQ(net.bs->timeouts(), 0u);
}

TEST(DoraNetwork, OnlyTheAddressedNodeWakes)
{
    Network net(5, 10_s);
    net.bs->start();
    net.sched.run_until(SimTime::at(1_s)); // one poll, to node index 0
    const SimTime end = net.sched.now();
    EXPECT_EQ(net.nodes[0]->wakeups(), 1u);
    for (std::size_t i = 1; i < 5; ++i)
    {
        EXPECT_EQ(net.nodes[i]->wakeups(), 0u);
        EXPECT_EQ(net.nodes[i]->decoded_calls(), 1u);
        EXPECT_EQ(net.nodes[i]->wur_state().phase, WurPhase::Listen);
        EXPECT_EQ(net.nodes[i]->main_radio().ledger().residency(RadioMode::Sleep), end.since_start());
        EXPECT_EQ(net.nodes[i]->wake_up_radio().ledger().residency(RadioMode::Active).count(), oracle::wuc_address_ns);
    }
}

TEST(DoraNetwork, DeadNodeTimesOutTenMillisecondsAfterCall)
{
    Network net(2, 1_s, {false, true});
    net.bs->start();
    const SimTime wuc_end = SimTime::at(Duration{oracle::wuc_preamble_ns + oracle::wuc_address_ns});
    net.sched.run_until(wuc_end);
    const EnergyLedger at_call_end = net.bs->radio().ledger();
    net.sched.run_until(wuc_end + 10_ms - 1_ns);
    EXPECT_EQ(net.bs->timeouts(), 0u);
    EXPECT_EQ(net.bs->state().phase, BsPhase::WaitData);
    net.sched.run_until(wuc_end + 10_ms);
    EXPECT_EQ(net.bs->timeouts(), 1u);
    EXPECT_EQ(net.bs->state().phase, BsPhase::WaitTimer);
    EXPECT_EQ(net.bs->state().current_target, 1u);
    const EnergyLedger at_timeout = net.bs->radio().ledger();
    EXPECT_EQ(at_timeout.residency(RadioMode::Rx) - at_call_end.residency(RadioMode::Rx), 10_ms);

    net.sched.run_until(SimTime::at(1500_ms));
    EXPECT_EQ(net.counters.received, 1u); // the live node answers the next round
}

TEST(DoraNetwork, CorruptedCallReturnsToListen)
{
    Network net(1, 10_s);
    Radio jammer_radio(net.sched, 99, RadioParams::main_radio(), RadioMode::Tx);
    const PortId jammer = net.medium.attach(jammer_radio, Position{3, 3}, dbm_to_mw(-95.0));
    net.bs->start();
    // Hit the address field, after the decider has accepted the preamble.
    net.sched.schedule(SimTime::at(4200_us), 99, [&] { net.medium.begin_tx(jammer, DataFrame{}, 1.0); });
    net.sched.run_until(SimTime::at(100_ms));
    const Node& n = *net.nodes[0];
    EXPECT_EQ(n.decoded_calls(), 1u);
    EXPECT_EQ(n.wakeups(), 0u);
    EXPECT_EQ(n.wur_state().phase, WurPhase::Listen);
    EXPECT_EQ(n.main_radio().ledger().residency(RadioMode::Tx), Duration{});
    EXPECT_EQ(net.bs->timeouts(), 1u);
}

TEST(DoraNetwork, TwoCyclesGiveTwoEqualTxIntervals)
{
    Network net(1, 1_s);
    net.bs->start();
    net.sched.run_until(SimTime::at(1500_ms));
    const Node& n = *net.nodes[0];
    EXPECT_EQ(n.tx_count(), 2u);
    EXPECT_EQ(n.main_radio().ledger().residency(RadioMode::Tx).count(), 2 * oracle::data_airtime_ns);
    EXPECT_EQ(n.main_radio().ledger().residency(RadioMode::Switching).count(), 4 * oracle::switch_ns);
}

TEST(DoraNetwork, NoOverlapsOverManyRounds)
{
    Network net(5, 600_ms);
    net.medium.forbid_overlap(true);
    net.bs->start();
    EXPECT_NO_THROW(net.sched.run_until(SimTime::at(Duration::s(600) - Duration{1})));
    EXPECT_EQ(net.medium.overlap_events(), 0u);
    EXPECT_EQ(net.bs->rounds(), 1000u);
    EXPECT_EQ(net.counters.received, 1000u);
    for (auto p : net.bs->polls())
    {
        EXPECT_EQ(p, 200u);
    }
}
