/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#include "oracles.hpp"

#include "dorasim/config.hpp"
#include "dorasim/report.hpp"
#include "dorasim/scenario.hpp"
#include "dorasim/sweep.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

using namespace dorasim;
using namespace dorasim::literals;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::vector<std::string> problems_of(const std::string& text)
{
    try
    {
        parse(text);
    }
    catch (const ConfigInvalid& e)
    {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle)
{
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

} // namespace

TEST(Config, EmptyFileGivesDefaults)
{
    const ExperimentConfig c = parse("");
    EXPECT_EQ(c.scenario.n_nodes, 5u);
    EXPECT_EQ(c.scenario.t_ipa, 15_s);
    EXPECT_EQ(c.scenario.duration, Duration::s(3600));
    EXPECT_EQ(c.sweep.t_ipa.size(), 8u);
    EXPECT_EQ(c.sweep.seeds, 10u);
}

TEST(Config, ShippedFileMatchesDefaults)
{
    const ExperimentConfig file = load_config(DORASIM_SOURCE_DIR "/configs/table1.ini");
    const ExperimentConfig def = parse("");
    EXPECT_EQ(file.scenario.main_radio.rx_current, def.scenario.main_radio.rx_current);
    EXPECT_EQ(file.scenario.wake_up_radio.active_current, def.scenario.wake_up_radio.active_current);
    EXPECT_EQ(file.scenario.bmac.slot_duration, def.scenario.bmac.slot_duration);
    EXPECT_EQ(file.scenario.csma.unit_backoff, def.scenario.csma.unit_backoff);
    EXPECT_EQ(file.scenario.dora.t_out, def.scenario.dora.t_out);
    EXPECT_EQ(file.sweep.t_ipa, def.sweep.t_ipa);
    EXPECT_EQ(file.scenario.base_station_position().x, 10.0);
}

TEST(Config, ZeroDurationIsInvalid)
{
    EXPECT_TRUE(mentions(problems_of("[common]\nduration_s = 0\n"), "common.duration_s"));
}

TEST(Config, ReportsEveryProblem)
{
    const auto p = problems_of("[common]\nprotocol = aloha\nn_nodes = 0\nbogus = 1\n[csma154]\nmin_be = 9\n");
    EXPECT_TRUE(mentions(p, "common.protocol"));
    EXPECT_TRUE(mentions(p, "common.n_nodes"));
    EXPECT_TRUE(mentions(p, "common.bogus"));
    EXPECT_TRUE(mentions(p, "csma154"));
}

TEST(Config, ParsesListsAndPlacement)
{
    const ExperimentConfig c = parse("[common]\nn_nodes = 2\nplacement = 1 2; 3 4\n"
                                     "[sweep]\nt_ipa_points = 2, 4.5\nprotocols = bmac\nseeds = 3\n");
    ASSERT_EQ(c.scenario.placement.size(), 2u);
    EXPECT_EQ(c.scenario.placement[1].y, 4.0);
    EXPECT_EQ(c.sweep.t_ipa, (std::vector<Duration>{2_s, 4500_ms}));
    EXPECT_EQ(c.sweep.protocols, (std::vector<Protocol>{Protocol::Bmac}));
}

TEST(Config, MissingFile)
{
    EXPECT_THROW(load_config("/nonexistent/dir/x.ini"), ConfigInvalid);
}

TEST(Scenario, DoraDeliversEveryPolledPacket)
{
    ScenarioConfig s;
    const RunMetrics m = run_scenario(s);
    EXPECT_EQ(m.packets_generated, 1200u);
    EXPECT_EQ(m.packets_received_at_bs, 1200u);
    EXPECT_EQ(m.pdr, 1.0);
    EXPECT_EQ(m.overlapping_transmissions, 0u);
    EXPECT_EQ(m.poll_timeouts, 0u);
}

TEST(Scenario, CsmaPowerSitsOnTheRxFloor)
{
    for (const Duration t : {1_s, 15_s})
    {
        ScenarioConfig s;
        s.protocol = Protocol::Csma154;
        s.t_ipa = t;
        s.duration = Duration::s(600);
        const RunMetrics m = run_scenario(s);
        EXPECT_GE(m.network_mean_power_w, oracle::rx_floor_w);
        EXPECT_LE(m.network_mean_power_w, 1.02 * oracle::rx_floor_w);
    }
}

TEST(Scenario, ResidenciesCoverTheRun)
{
    for (Protocol p : {Protocol::Dora, Protocol::Bmac, Protocol::Csma154})
    {
        ScenarioConfig s;
        s.protocol = p;
        s.duration = Duration::s(120);
        const RunMetrics m = run_scenario(s);
        for (const auto& d : m.nodes)
        {
            for (const auto& l : d.radios)
            {
                EXPECT_EQ(l.total(), s.duration) << to_string(p);
            }
        }
        for (const auto& l : m.base_station.radios)
        {
            EXPECT_EQ(l.total(), s.duration) << to_string(p);
        }
    }
}

TEST(Scenario, IncludingTheBaseStationRaisesDoraPower)
{
    ScenarioConfig s;
    s.duration = Duration::s(60);
    const double without = run_scenario(s).network_mean_power_w;
    s.include_bs_in_power = true;
    EXPECT_GT(run_scenario(s).network_mean_power_w, 100 * without);
}

TEST(Scenario, InvalidConfigThrows)
{
    ScenarioConfig s;
    s.duration = Duration{};
    EXPECT_THROW(run_scenario(s), ConfigInvalid);
}

namespace {

ExperimentConfig small_sweep()
{
    ExperimentConfig e;
    e.scenario.duration = Duration::s(60);
    e.sweep.seeds = 2;
    return e;
}

} // namespace

TEST(Sweep, OneRowPerProtocolPointAndSeed)
{
    const auto rows = run_sweep(small_sweep(), 2);
    EXPECT_EQ(rows.size(), 3u * 8u * 2u);
    EXPECT_EQ(summarize(rows, 2900, 3.3).size(), 24u);
    EXPECT_EQ(rows.front().protocol, Protocol::Dora);
    EXPECT_EQ(rows.back().protocol, Protocol::Csma154);
}

TEST(Sweep, ThreadCountDoesNotChangeOutput)
{
    EXPECT_EQ(results_csv(run_sweep(small_sweep(), 1)), results_csv(run_sweep(small_sweep(), 3)));
}

TEST(Csv, SingleRunLayout)
{
    ScenarioConfig s;
    s.duration = Duration::s(60);
    const std::string csv = results_csv({run_scenario(s)});
    std::istringstream in(csv);
    std::string header;
    std::string row;
    std::string extra;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(header, "protocol,t_ipa_s,seed,mean_power_w,pdr,energy_node0_j,energy_node1_j,energy_node2_j,"
                      "energy_node3_j,energy_node4_j,packets_generated,packets_received");
    EXPECT_EQ(row.rfind("dora,15,1,", 0), 0u);
    EXPECT_EQ(csv, results_csv({run_scenario(s)}));
}

TEST(Csv, NumbersRoundTrip)
{
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, EmptyTableWritesNothing)
{
    const fs::path p = fs::temp_directory_path() / "dorasim_empty_results.csv";
    fs::remove(p);
    EXPECT_THROW(emit_csv({}, p), EmptyTable);
    EXPECT_FALSE(fs::exists(p));
}

TEST(Csv, UnwritablePathIsIoError)
{
    ScenarioConfig s;
    s.duration = Duration::s(10);
    EXPECT_THROW(emit_csv({run_scenario(s)}, "/nonexistent/dir/results.csv"), IoError);
}

TEST(Summary, SavingAndLifetimeColumns)
{
    RunMetrics a;
    a.protocol = Protocol::Dora;
    a.t_ipa = 15_s;
    a.network_mean_power_w = 0.001;
    RunMetrics c = a;
    c.protocol = Protocol::Csma154;
    c.network_mean_power_w = 0.1;
    const auto rows = summarize({a, c}, 2900, 3.3);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_DOUBLE_EQ(*rows[0].saving_pct, 99.0);
    EXPECT_DOUBLE_EQ(rows[0].lifetime_h, 2.9 * 3.3 / 0.001);
    EXPECT_DOUBLE_EQ(*rows[1].saving_pct, 0.0);
}

TEST(Charts, ProduceSvg)
{
    const auto rows = summarize(run_sweep(small_sweep(), 1), 2900, 3.3);
    const auto [power, pdr] = summary_charts(rows);
    EXPECT_EQ(power.rfind("<svg", 0), 0u);
    EXPECT_NE(power.find("csma154"), std::string::npos);
    EXPECT_NE(pdr.find("Packet delivery ratio"), std::string::npos);
}
