/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/bmac.hpp"
#include "dorasim/config.hpp"
#include "dorasim/csma154.hpp"
#include "dorasim/dora/agents.hpp"
#include "dorasim/medium.hpp"
#include "dorasim/radio.hpp"
#include "dorasim/rng.hpp"
#include "dorasim/scheduler.hpp"
#include "dorasim/traffic.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

namespace dorasim {

/// Energy picture of one device: a ledger per radio it carries.
struct DeviceMetrics
{
    std::vector<EnergyLedger> radios;
    double energy_j{0.0};
    double mean_power_w{0.0};
};

struct RunMetrics
{
    Protocol protocol{Protocol::Dora};
    Duration t_ipa{};
    std::uint64_t seed{0};
    Duration elapsed{};
    std::vector<DeviceMetrics> nodes;
    DeviceMetrics base_station;
    /// Average over sensor nodes; includes the base station only when configured so.
    double network_mean_power_w{0.0};
    std::uint64_t packets_generated{0};
    std::uint64_t packets_received_at_bs{0};
    std::uint64_t dropped_queue{0};
    std::uint64_t dropped_channel{0};
    /// received / generated; 1 when nothing was generated.
    double pdr{1.0};
    std::uint64_t overlapping_transmissions{0};
    std::uint64_t transmissions{0};
    /// DoRa only: wake-up calls sent to each node, and rounds that timed out.
    std::vector<std::uint64_t> polls;
    std::uint64_t poll_timeouts{0};
    std::uint64_t events{0};
};

namespace detail {

inline std::vector<Position> place_nodes(const ScenarioConfig& cfg, const RngStream& root)
{
    if (!cfg.placement.empty())
    {
        return cfg.placement;
    }
    RngStream rng = root.substream(0xa7e7a);
    std::vector<Position> out;
    out.reserve(cfg.n_nodes);
    for (std::size_t i = 0; i < cfg.n_nodes; ++i)
    {
        const double x = rng.uniform01() * cfg.arena_width_m;
        const double y = rng.uniform01() * cfg.arena_height_m;
        out.push_back(Position{x, y});
    }
    return out;
}

inline DeviceMetrics device_metrics(std::vector<EnergyLedger> ledgers, Duration elapsed)
{
    DeviceMetrics d;
    d.radios = std::move(ledgers);
    for (const EnergyLedger& l : d.radios)
    {
        d.energy_j += l.energy();
    }
    d.mean_power_w = d.energy_j / elapsed.seconds();
    return d;
}

} // namespace detail

/**
 * Builds the network described by `cfg`, runs it for cfg.duration and
 * collects the metrics. Entity 0 is the base station, entity i+1 node i.
 *
 * Random substreams of the run seed: 0 base station MAC, i+1 node i MAC,
 * 1'000'000+i node i traffic, 0xa7e7a placement.
 */
inline RunMetrics run_scenario(const ScenarioConfig& cfg)
{
    cfg.validate();

    Scheduler sched;
    Medium medium(sched, cfg.link.propagation);
    const RngStream root(cfg.seed);
    TrafficCounters counters;
    const std::vector<Position> positions = detail::place_nodes(cfg, root);
    const Position bs_pos = cfg.base_station_position();
    const double tx_mw = dbm_to_mw(cfg.link.tx_power_dbm);
    const double data_sens = dbm_to_mw(cfg.link.data_sensitivity_dbm);
    const SimTime end = SimTime::at(cfg.duration);
    const FrameShape shape{cfg.header_bytes, cfg.payload_bytes, cfg.main_radio.bitrate};

    RunMetrics m;
    m.protocol = cfg.protocol;
    m.t_ipa = cfg.t_ipa;
    m.seed = cfg.seed;
    m.elapsed = cfg.duration;

    std::vector<std::vector<EnergyLedger>> node_ledgers;
    std::vector<EnergyLedger> bs_ledgers;

    switch (cfg.protocol)
    {
    case Protocol::Dora: {
        medium.forbid_overlap(true);
        dora::BaseStation::Config bc;
        bc.node_count = cfg.n_nodes;
        bc.t_out = cfg.dora.t_out;
        bc.poll_spacing = cfg.poll_spacing();
        bc.wuc_preamble = cfg.dora.wuc_preamble;
        bc.wuc_bitrate = cfg.wake_up_radio.bitrate;
        bc.tx_power_mw = tx_mw;
        bc.sensitivity_mw = data_sens;
        dora::BaseStation bs(sched, medium, 0, bs_pos, cfg.main_radio, bc, counters);

        std::vector<std::unique_ptr<dora::Node>> nodes;
        for (std::uint32_t i = 0; i < cfg.n_nodes; ++i)
        {
            dora::Node::Config nc;
            nc.index = i;
            nc.decider_min_duration = cfg.dora.decider_min_duration;
            nc.wakeup_threshold_mw = dbm_to_mw(cfg.link.wakeup_threshold_dbm);
            nc.data_sensitivity_mw = data_sens;
            nc.tx_power_mw = tx_mw;
            nc.frame = shape;
            nc.enabled = std::find(cfg.dead_nodes.begin(), cfg.dead_nodes.end(), i) == cfg.dead_nodes.end();
            nodes.push_back(std::make_unique<dora::Node>(sched, medium, i + 1, positions[i], cfg.main_radio,
                                                         cfg.wake_up_radio, nc, counters));
        }
        bs.start();
        m.events = sched.run_until(end);
        for (const auto& n : nodes)
        {
            node_ledgers.push_back({n->main_radio().ledger(), n->wake_up_radio().ledger()});
        }
        bs_ledgers.push_back(bs.radio().ledger());
        m.polls = bs.polls();
        m.poll_timeouts = bs.timeouts();
        break;
    }
    case Protocol::Bmac: {
        const Duration data_airtime = shape.make(MacAddress{}, 0).airtime();
        bmac::Station::Config sc;
        sc.address = MacAddress::base_station();
        sc.sink = true;
        sc.mac = cfg.bmac;
        sc.queue_len = cfg.queue_len;
        sc.tx_power_mw = tx_mw;
        sc.sensitivity_mw = data_sens;
        sc.data_airtime = data_airtime;
        bmac::Station bs(sched, medium, 0, bs_pos, cfg.main_radio, sc, root.substream(0), counters);

        std::vector<std::unique_ptr<bmac::Station>> nodes;
        std::vector<std::unique_ptr<PeriodicSource>> sources;
        for (std::uint32_t i = 0; i < cfg.n_nodes; ++i)
        {
            sc.address = MacAddress::for_node(i);
            sc.sink = false;
            nodes.push_back(std::make_unique<bmac::Station>(sched, medium, i + 1, positions[i], cfg.main_radio, sc,
                                                            root.substream(i + 1), counters));
            bmac::Station* st = nodes.back().get();
            sources.push_back(std::make_unique<PeriodicSource>(
                sched, i + 1, root.substream(1'000'000 + i), cfg.node_period(), cfg.app_jitter, end,
                MacAddress::for_node(i), shape, counters, [st](DataFrame f) { st->enqueue(f); }));
        }
        bs.start();
        for (auto& n : nodes)
        {
            n->start();
        }
        for (auto& s : sources)
        {
            s->start();
        }
        m.events = sched.run_until(end);
        for (const auto& n : nodes)
        {
            node_ledgers.push_back({n->radio().ledger()});
        }
        bs_ledgers.push_back(bs.radio().ledger());
        break;
    }
    case Protocol::Csma154: {
        csma154::Station::Config sc;
        sc.address = MacAddress::base_station();
        sc.sink = true;
        sc.mac = cfg.csma;
        sc.queue_len = cfg.queue_len;
        sc.tx_power_mw = tx_mw;
        sc.sensitivity_mw = data_sens;
        csma154::Station bs(sched, medium, 0, bs_pos, cfg.main_radio, sc, root.substream(0), counters);

        std::vector<std::unique_ptr<csma154::Station>> nodes;
        std::vector<std::unique_ptr<PeriodicSource>> sources;
        for (std::uint32_t i = 0; i < cfg.n_nodes; ++i)
        {
            sc.address = MacAddress::for_node(i);
            sc.sink = false;
            nodes.push_back(std::make_unique<csma154::Station>(sched, medium, i + 1, positions[i], cfg.main_radio, sc,
                                                               root.substream(i + 1), counters));
            csma154::Station* st = nodes.back().get();
            sources.push_back(std::make_unique<PeriodicSource>(
                sched, i + 1, root.substream(1'000'000 + i), cfg.node_period(), cfg.app_jitter, end,
                MacAddress::for_node(i), shape, counters, [st](DataFrame f) { st->enqueue(f); }));
        }
        for (auto& s : sources)
        {
            s->start();
        }
        m.events = sched.run_until(end);
        for (const auto& n : nodes)
        {
            node_ledgers.push_back({n->radio().ledger()});
        }
        bs_ledgers.push_back(bs.radio().ledger());
        break;
    }
    }

    for (auto& l : node_ledgers)
    {
        m.nodes.push_back(detail::device_metrics(std::move(l), cfg.duration));
    }
    m.base_station = detail::device_metrics(std::move(bs_ledgers), cfg.duration);

    double sum = 0.0;
    for (const DeviceMetrics& d : m.nodes)
    {
        sum += d.mean_power_w;
    }
    std::size_t count = m.nodes.size();
    if (cfg.include_bs_in_power)
    {
        sum += m.base_station.mean_power_w;
        ++count;
    }
    m.network_mean_power_w = sum / static_cast<double>(count);

    m.packets_generated = counters.generated;
    m.packets_received_at_bs = counters.received;
    m.dropped_queue = counters.dropped_queue;
    m.dropped_channel = counters.dropped_channel;
    m.pdr = counters.generated == 0
                ? 1.0
                : static_cast<double>(counters.received) / static_cast<double>(counters.generated);
    m.overlapping_transmissions = medium.overlap_events();
    m.transmissions = medium.transmissions();
    return m;
}

} // namespace dorasim
