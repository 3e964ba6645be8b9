/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "dorasim/medium.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <vector>

using namespace dorasim;
using namespace dorasim::literals;

namespace {

DataFrame data_frame(std::uint16_t src)
{
    DataFrame f;
    f.src = MacAddress{src};
    return f;
}

/// Scheduler, medium and a row of radios with report recorders.
struct Bench
{
    Scheduler sched;
    Medium medium;
    std::vector<std::unique_ptr<Radio>> radios;
    std::vector<PortId> ports;
    std::vector<std::vector<ReceptionReport>> reports;
    std::vector<int> carriers;

    explicit Bench(Propagation prop = {})
        : medium(sched, prop)
    {
    }

    PortId add(RadioMode initial, Position pos, double sensitivity_mw = dbm_to_mw(-95.0))
    {
        const std::size_t i = radios.size();
        radios.push_back(std::make_unique<Radio>(sched, static_cast<EntityId>(i), RadioParams::main_radio(), initial));
        reports.emplace_back();
        carriers.push_back(0);
        MediumListener l;
        l.on_reception = [this, i](const ReceptionReport& r) { reports[i].push_back(r); };
        l.on_carrier = [this, i](const Transmission&, double) { ++carriers[i]; };
        ports.push_back(medium.attach(*radios.back(), pos, sensitivity_mw, std::move(l)));
        return ports.back();
    }
};

} // namespace

TEST(Propagation, UnityGainAtTenMetres)
{
    Propagation p;
    p.reference_loss_db = 0.0;
    // Friis-style 1/d^2 with unity gain at 1 m: 1 mW / 100.
    EXPECT_DOUBLE_EQ(p.received_mw(1.0, 10.0), 0.01);
}

TEST(Propagation, DefaultModelAtTenMetres)
{
    // 20 dB at 1 m plus 20 log10(10) = 40 dB below 0 dBm.
    EXPECT_NEAR(mw_to_dbm(Propagation{}.received_mw(1.0, 10.0)), -40.0, 1e-9);
}

TEST(Propagation, ArenaIsConnectedForWakeUp)
{
    // Farthest point of a 20 m x 20 m arena from its centre.
    const double worst = Propagation{}.received_mw(1.0, std::hypot(10.0, 10.0));
    EXPECT_GE(worst, dbm_to_mw(-55.0));
}

TEST(Medium, LoneTransmissionIsReportedCleanAtItsEnd)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    b.add(RadioMode::Rx, {5, 0});
    const DataFrame f = data_frame(1);
    b.medium.begin_tx(tx, f, 1.0);
    b.sched.run_until(SimTime::at(f.airtime()) - 1_ns);
    EXPECT_TRUE(b.reports[1].empty());
    b.sched.run_until(SimTime::at(f.airtime()));
    ASSERT_EQ(b.reports[1].size(), 1u);
    EXPECT_FALSE(b.reports[1][0].corrupted);
    EXPECT_EQ(b.carriers[1], 1);
    EXPECT_TRUE(b.reports[0].empty());
}

TEST(Medium, OneNanosecondOverlapCorruptsBoth)
{
    Bench b;
    const PortId a = b.add(RadioMode::Tx, {0, 0});
    const PortId c = b.add(RadioMode::Tx, {1, 0});
    b.add(RadioMode::Rx, {5, 0});
    b.add(RadioMode::Rx, {6, 0});
    const DataFrame f = data_frame(1);
    b.medium.begin_tx(a, f, 1.0);
    b.sched.schedule(SimTime::at(f.airtime()) - 1_ns, 1, [&] { b.medium.begin_tx(c, data_frame(2), 1.0); });
    b.sched.run_until(SimTime::at(1_s));
    for (std::size_t rx : {2u, 3u})
    {
        ASSERT_EQ(b.reports[rx].size(), 2u);
        EXPECT_TRUE(b.reports[rx][0].corrupted);
        EXPECT_TRUE(b.reports[rx][1].corrupted);
    }
    EXPECT_EQ(b.medium.overlap_events(), 1u);
}

TEST(Medium, BackToBackTransmissionsDoNotOverlap)
{
    Bench b;
    const PortId a = b.add(RadioMode::Tx, {0, 0});
    const PortId c = b.add(RadioMode::Tx, {1, 0});
    b.add(RadioMode::Rx, {5, 0});
    const DataFrame f = data_frame(1);
    b.medium.begin_tx(a, f, 1.0);
    b.sched.schedule(SimTime::at(f.airtime()), 1, [&] { b.medium.begin_tx(c, data_frame(2), 1.0); });
    b.sched.run_until(SimTime::at(1_s));
    ASSERT_EQ(b.reports[2].size(), 2u);
    EXPECT_FALSE(b.reports[2][0].corrupted);
    EXPECT_FALSE(b.reports[2][1].corrupted);
    EXPECT_EQ(b.medium.overlap_events(), 0u);
}

TEST(Medium, NoListenersNoReportsButSenderPays)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    b.add(RadioMode::Sleep, {5, 0});
    b.add(RadioMode::Sleep, {6, 0});
    const DataFrame f = data_frame(1);
    b.medium.begin_tx(tx, f, 1.0);
    b.sched.run_until(SimTime::at(f.airtime()));
    EXPECT_TRUE(b.reports[1].empty());
    EXPECT_TRUE(b.reports[2].empty());
    EXPECT_EQ(b.radios[0]->ledger().residency(RadioMode::Tx), f.airtime());
}

TEST(Medium, SecondTransmissionFromSamePortThrows)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    b.medium.begin_tx(tx, data_frame(1), 1.0);
    EXPECT_THROW(b.medium.begin_tx(tx, data_frame(1), 1.0), AlreadyTransmitting);
}

TEST(Medium, RadioEnteringRxMidAirSensesButCannotDecode)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    b.add(RadioMode::Sleep, {5, 0});
    b.radios[1]->set_mode(RadioMode::Rx); // 300 us switch, lands mid-frame
    b.medium.begin_tx(tx, data_frame(1), 1.0);
    b.sched.run_until(SimTime::at(1_s));
    EXPECT_EQ(b.carriers[1], 1);
    ASSERT_EQ(b.reports[1].size(), 1u);
    EXPECT_TRUE(b.reports[1][0].corrupted);
}

TEST(CarrierSense, IdleChannel)
{
    Bench b;
    const PortId obs = b.add(RadioMode::Rx, {0, 0});
    b.sched.run_until(SimTime::at(1_ms));
    EXPECT_EQ(b.medium.carrier_sense(obs, 128_us), ChannelState::Idle);
}

TEST(CarrierSense, TransmissionSpanningWindow)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    const PortId obs = b.add(RadioMode::Rx, {3, 0});
    b.medium.begin_tx(tx, data_frame(1), 1.0);
    b.sched.run_until(SimTime::at(1_ms));
    EXPECT_EQ(b.medium.carrier_sense(obs, 128_us), ChannelState::Busy);
}

TEST(CarrierSense, TransmissionEndingOneNanosecondIntoWindow)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    const PortId obs = b.add(RadioMode::Rx, {3, 0});
    const DataFrame f = data_frame(1);
    b.medium.begin_tx(tx, f, 1.0);
    // Window [end - 1 ns, end - 1 ns + 128 us).
    const SimTime window_start = SimTime::at(f.airtime()) - 1_ns;
    b.sched.run_until(window_start + 128_us);
    EXPECT_EQ(b.medium.carrier_sense(obs, 128_us), ChannelState::Busy);
    b.sched.run_until(window_start + 128_us + 1_ns);
    EXPECT_EQ(b.medium.carrier_sense(obs, 128_us), ChannelState::Idle);
}

TEST(CarrierSense, RequiresReceivingForWholeWindow)
{
    Bench b;
    const PortId obs = b.add(RadioMode::Sleep, {0, 0});
    b.sched.run_until(SimTime::at(1_ms));
    EXPECT_THROW((void)b.medium.carrier_sense(obs, 128_us), RadioNotReceiving);
    b.radios[0]->set_mode(RadioMode::Rx);
    b.sched.run_until(SimTime::at(1_ms) + 300_us + 100_us);
    EXPECT_THROW((void)b.medium.carrier_sense(obs, 128_us), RadioNotReceiving);
    b.sched.run_until(SimTime::at(1_ms) + 300_us + 128_us);
    EXPECT_EQ(b.medium.carrier_sense(obs, 128_us), ChannelState::Idle);
}

TEST(RxPower, LoopbackIsTransmitPower)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    const TransmissionId id = b.medium.begin_tx(tx, data_frame(1), 0.5);
    EXPECT_EQ(b.medium.rx_power_at(tx, id), 0.5);
}

TEST(RxPower, BeyondRangeIsBelowEveryThreshold)
{
    Bench b;
    const PortId tx = b.add(RadioMode::Tx, {0, 0});
    const PortId far = b.add(RadioMode::Rx, {150, 0});
    const TransmissionId id = b.medium.begin_tx(tx, data_frame(1), 1.0);
    EXPECT_LT(b.medium.rx_power_at(far, id), dbm_to_mw(-200.0));
    b.sched.run_until(SimTime::at(1_s));
    EXPECT_TRUE(b.reports[1].empty());
}

TEST(RxPower, UnknownTransmissionThrows)
{
    Bench b;
    const PortId obs = b.add(RadioMode::Rx, {0, 0});
    EXPECT_THROW((void)b.medium.rx_power_at(obs, 42), UnknownTransmission);
}

TEST(PowerTrace, SumsOverlappingSignalsWithoutGaps)
{
    Bench b;
    const PortId a = b.add(RadioMode::Tx, {0, 0});
    const PortId c = b.add(RadioMode::Tx, {0, 0});
    const PortId obs = b.add(RadioMode::Rx, {10, 0});
    b.medium.begin_tx(a, data_frame(1), 1.0);
    b.sched.schedule(SimTime::at(1_ms), 1, [&] { b.medium.begin_tx(c, data_frame(2), 1.0); });
    b.sched.run_until(SimTime::at(10_ms));
    const auto trace = b.medium.power_trace(obs, SimTime{}, SimTime::at(10_ms));
    ASSERT_FALSE(trace.empty());
    EXPECT_EQ(trace.front().start, SimTime{});
    EXPECT_EQ(trace.back().end, SimTime::at(10_ms));
    for (std::size_t i = 1; i < trace.size(); ++i)
    {
        EXPECT_EQ(trace[i].start, trace[i - 1].end);
    }
    const double one = Propagation{}.received_mw(1.0, 10.0);
    bool saw_double = false;
    for (const PowerSegment& s : trace)
    {
        saw_double = saw_double || std::abs(s.power_mw - 2 * one) < 1e-15;
    }
    EXPECT_TRUE(saw_double);
}
