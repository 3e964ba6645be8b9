/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/bmac.hpp"
#include "dorasim/csma154.hpp"
#include "dorasim/medium.hpp"
#include "dorasim/radio.hpp"
#include "dorasim/time.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dorasim {

/// Rejected configuration; what() lists one diagnostic per line, each naming the field.
class ConfigInvalid : public std::runtime_error
{
  public:
    explicit ConfigInvalid(std::vector<std::string> problems)
        : std::runtime_error(join(problems))
        , m_problems(std::move(problems))
    {
    }

    [[nodiscard]] const std::vector<std::string>& problems() const { return m_problems; }

  private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out;
        for (const auto& p : v)
        {
            out += p;
            out += '\n';
        }
        return out;
    }

    std::vector<std::string> m_problems;
};

enum class Protocol
{
    Dora,
    Bmac,
    Csma154,
};

constexpr std::string_view to_string(Protocol p)
{
    switch (p)
    {
    case Protocol::Dora: return "dora";
    case Protocol::Bmac: return "bmac";
    case Protocol::Csma154: return "csma154";
    }
    return "?";
}

inline std::optional<Protocol> parse_protocol(std::string_view s)
{
    if (s == "dora")
    {
        return Protocol::Dora;
    }
    if (s == "bmac")
    {
        return Protocol::Bmac;
    }
    if (s == "csma154")
    {
        return Protocol::Csma154;
    }
    return std::nullopt;
}

/// What the inter packet arrival time is measured between.
enum class IpaScope
{
    /// Consecutive packets of one node: each node sends once per t_ipa.
    Node,
    /// Consecutive packets at the base station: each node sends once per n_nodes * t_ipa.
    Bs,
};

struct DoraParams
{
    Duration t_out{Duration::ms(10)};
    Duration wuc_preamble{Duration::ms(4)};
    Duration decider_min_duration{Duration::us(3800)};
};

struct LinkParams
{
    double tx_power_dbm{0.0};
    double data_sensitivity_dbm{-95.0};
    double wakeup_threshold_dbm{-55.0};
    Propagation propagation{};
};

struct ScenarioConfig
{
    Protocol protocol{Protocol::Dora};
    std::size_t n_nodes{5};
    double arena_width_m{20.0};
    double arena_height_m{20.0};
    std::uint32_t payload_bytes{100};
    std::uint32_t header_bytes{12};
    std::size_t queue_len{10};
    Duration duration{Duration::s(3600)};
    std::uint64_t seed{1};
    Duration t_ipa{Duration::s(15)};
    IpaScope ipa_scope{IpaScope::Node};
    Duration app_jitter{Duration::ms(100)};
    /// Empty means uniform-random placement inside the arena.
    std::vector<Position> placement{};
    /// Defaults to the arena centre.
    std::optional<Position> bs_position{};
    bool include_bs_in_power{false};
    double battery_mah{2900.0};
    /// Node indices that never answer (both radios off); diagnostics only.
    std::vector<std::uint32_t> dead_nodes{};

    RadioParams main_radio{RadioParams::main_radio()};
    RadioParams wake_up_radio{RadioParams::wake_up_receiver()};
    LinkParams link{};
    DoraParams dora{};
    bmac::BmacParams bmac{};
    csma154::CsmaParams csma{};

    /// Interval between two packets of the same node.
    [[nodiscard]] Duration node_period() const
    {
        return ipa_scope == IpaScope::Node ? t_ipa : t_ipa * n_nodes;
    }

    [[nodiscard]] Position base_station_position() const
    {
        return bs_position.value_or(Position{arena_width_m / 2.0, arena_height_m / 2.0});
    }

    [[nodiscard]] std::vector<std::string> problems() const
    {
        std::vector<std::string> out;
        auto check = [&out](bool ok, std::string msg) {
            if (!ok)
            {
                out.push_back(std::move(msg));
            }
        };
        check(n_nodes >= 1, "common.n_nodes: must be at least 1");
        check(n_nodes <= 0xfffd, "common.n_nodes: must fit the 16-bit address space");
        check(arena_width_m > 0.0 && arena_height_m > 0.0, "common.arena_*_m: arena must have positive size");
        check(payload_bytes > 0, "common.payload_bytes: must be positive");
        check(queue_len > 0, "common.queue_len: must be positive");
        check(duration.count() > 0, "common.duration_s: must be positive");
        check(t_ipa.count() > 0, "common.t_ipa_s: must be positive");
        check(app_jitter < node_period() || t_ipa.count() == 0,
              "common.app_jitter_s: must be shorter than the per-node packet period");
        check(placement.empty() || placement.size() == n_nodes,
              "common.placement: needs exactly n_nodes coordinates or uniform-random");
        for (const Position& p : placement)
        {
            check(p.x >= 0.0 && p.y >= 0.0 && p.x <= arena_width_m && p.y <= arena_height_m,
                  "common.placement: coordinate outside the arena");
        }
        for (std::uint32_t d : dead_nodes)
        {
            check(d < n_nodes, "common.dead_nodes: index " + std::to_string(d) + " out of range");
        }
        check(battery_mah >= 0.0, "common.battery_mah: must be non-negative");
        auto check_radio = [&](const RadioParams& r, const std::string& sec) {
            check(r.supply_voltage > 0.0, sec + ".supply_voltage_v: must be positive");
            check(r.sleep_current >= 0.0 && r.rx_current >= 0.0 && r.tx_current >= 0.0 && r.active_current >= 0.0,
                  sec + ": currents must be non-negative");
            check(r.bitrate > 0, sec + ".bitrate_bps: must be positive");
        };
        check_radio(main_radio, "radio_main");
        check_radio(wake_up_radio, "radio_wur");
        check(link.propagation.reference_distance_m > 0.0, "medium.reference_distance_m: must be positive");
        check(link.propagation.exponent > 0.0, "medium.path_loss_exponent: must be positive");
        check(link.propagation.max_range_m > 0.0, "medium.max_range_m: must be positive");

        check(dora.t_out.count() > 0, "dora.timeout_s: must be positive");
        check(dora.decider_min_duration <= dora.wuc_preamble,
              "dora.decider_min_duration_s: cannot exceed the wake-up preamble");
        if (protocol == Protocol::Dora && t_ipa.count() > 0 && n_nodes >= 1)
        {
            const WakeUpCall w = WakeUpCall::addressed_to(MacAddress::for_node(0), dora.wuc_preamble);
            const Duration spacing = poll_spacing();
            check(spacing >= w.airtime() + dora.t_out,
                  "common.t_ipa_s: polling spacing shorter than one wake-up call plus the timeout window");
        }
        check(bmac.slot_duration.count() > 0 && bmac.check_interval.count() > 0 && bmac.check_interval < bmac.slot_duration,
              "bmac.check_interval_s: must be positive and shorter than bmac.slot_duration_s");
        check(bmac.cca_time.count() > 0, "bmac.cca_time_s: must be positive");
        check(bmac.preamble_mode == bmac::PreambleMode::Carrier || bmac.microframe_bytes > 0,
              "bmac.microframe_bytes: must be positive in microframe mode");
        check(csma.min_be <= csma.max_be, "csma154.min_be: must not exceed csma154.max_be");
        check(csma.max_be <= 63, "csma154.max_be: out of range");
        check(csma.cca_time.count() > 0 && csma.unit_backoff.count() > 0,
              "csma154.cca_time_s/unit_backoff_s: must be positive");
        return out;
    }

    /// Distance between consecutive wake-up calls of the polling base station.
    [[nodiscard]] Duration poll_spacing() const { return ipa_scope == IpaScope::Node ? t_ipa / n_nodes : t_ipa; }

    void validate() const
    {
        auto p = problems();
        if (!p.empty())
        {
            throw ConfigInvalid(std::move(p));
        }
    }
};

struct SweepSpec
{
    std::vector<Duration> t_ipa{Duration::s(8),  Duration::s(9),  Duration::s(10), Duration::s(11),
                                Duration::s(12), Duration::s(13), Duration::s(14), Duration::s(15)};
    std::vector<Protocol> protocols{Protocol::Dora, Protocol::Bmac, Protocol::Csma154};
    std::size_t seeds{10};

    void validate() const
    {
        std::vector<std::string> out;
        if (t_ipa.empty())
        {
            out.emplace_back("sweep.t_ipa_points: at least one point required");
        }
        for (const Duration& d : t_ipa)
        {
            if (d.count() == 0)
            {
                out.emplace_back("sweep.t_ipa_points: values must be positive");
            }
        }
        if (protocols.empty())
        {
            out.emplace_back("sweep.protocols: at least one protocol required");
        }
        if (seeds == 0)
        {
            out.emplace_back("sweep.seeds: must be positive");
        }
        if (!out.empty())
        {
            throw ConfigInvalid(std::move(out));
        }
    }
};

struct ExperimentConfig
{
    ScenarioConfig scenario{};
    SweepSpec sweep{};
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
    {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos)
        {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

/// Reads known keys out of a property tree, collecting diagnostics and flagging unknown ones.
class Reader
{
  public:
    explicit Reader(const boost::property_tree::ptree& tree)
        : m_tree(tree)
    {
    }

    template <class T>
    void number(const std::string& key, T& out)
    {
        read(key, [&](const std::string& raw) {
            std::size_t pos = 0;
            if constexpr (std::is_floating_point_v<T>)
            {
                out = static_cast<T>(std::stod(raw, &pos));
            }
            else
            {
                if (!raw.empty() && raw.front() == '-')
                {
                    throw std::invalid_argument("negative");
                }
                out = static_cast<T>(std::stoull(raw, &pos));
            }
            if (pos != raw.size())
            {
                throw std::invalid_argument("trailing characters");
            }
        });
    }

    void seconds(const std::string& key, Duration& out)
    {
        read(key, [&](const std::string& raw) {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size())
            {
                throw std::invalid_argument("trailing characters");
            }
            out = Duration::from_seconds(v);
        });
    }

    void boolean(const std::string& key, bool& out)
    {
        read(key, [&](const std::string& raw) {
            if (raw == "true" || raw == "1" || raw == "yes")
            {
                out = true;
            }
            else if (raw == "false" || raw == "0" || raw == "no")
            {
                out = false;
            }
            else
            {
                throw std::invalid_argument("expected true or false");
            }
        });
    }

    void text(const std::string& key, const std::function<void(const std::string&)>& apply) { read(key, apply); }

    /// Adds one diagnostic per key present in the file but never read.
    void finish()
    {
        for (const auto& [section, body] : m_tree)
        {
            if (body.empty())
            {
                if (!m_seen.contains(section))
                {
                    m_problems.push_back(section + ": unknown key outside any section");
                }
                continue;
            }
            for (const auto& [key, value] : body)
            {
                const std::string path = section + "." + key;
                if (!m_seen.contains(path))
                {
                    m_problems.push_back(path + ": unknown key");
                }
            }
        }
    }

    [[nodiscard]] std::vector<std::string>& problems() { return m_problems; }

  private:
    void read(const std::string& key, const std::function<void(const std::string&)>& apply)
    {
        m_seen.insert(key);
        const auto v = m_tree.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
        if (!v)
        {
            return;
        }
        try
        {
            apply(*v);
        }
        catch (const std::exception& e)
        {
            m_problems.push_back(key + ": cannot parse '" + *v + "' (" + e.what() + ")");
        }
    }

    const boost::property_tree::ptree& m_tree;
    std::set<std::string> m_seen;
    std::vector<std::string> m_problems;
};

inline void read_radio(Reader& r, const std::string& sec, RadioParams& p)
{
    r.number(sec + ".supply_voltage_v", p.supply_voltage);
    r.number(sec + ".sleep_current_a", p.sleep_current);
    r.number(sec + ".rx_current_a", p.rx_current);
    r.number(sec + ".tx_current_a", p.tx_current);
    r.number(sec + ".active_current_a", p.active_current);
    r.number(sec + ".bitrate_bps", p.bitrate);
    r.seconds(sec + ".switch_time_s", p.switch_time);
}

} // namespace detail

/**
 * Parses the INI-style experiment file. Sections: common, radio_main,
 * radio_wur, medium, dora, bmac, csma154, sweep. Keys left out keep their
 * defaults; unknown keys are errors.
 */
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>")
{
    boost::property_tree::ptree tree;
    try
    {
        boost::property_tree::ini_parser::read_ini(in, tree);
    }
    catch (const boost::property_tree::ini_parser_error& e)
    {
        throw ConfigInvalid({origin + ":" + std::to_string(e.line()) + ": " + e.message()});
    }

    ExperimentConfig cfg;
    ScenarioConfig& s = cfg.scenario;
    detail::Reader r(tree);

    r.text("common.protocol", [&](const std::string& v) {
        const auto p = parse_protocol(v);
        if (!p)
        {
            throw std::invalid_argument("expected dora, bmac or csma154");
        }
        s.protocol = *p;
    });
    r.number("common.n_nodes", s.n_nodes);
    r.number("common.arena_width_m", s.arena_width_m);
    r.number("common.arena_height_m", s.arena_height_m);
    r.number("common.payload_bytes", s.payload_bytes);
    r.number("common.header_bytes", s.header_bytes);
    r.number("common.queue_len", s.queue_len);
    r.seconds("common.duration_s", s.duration);
    r.number("common.seed", s.seed);
    r.seconds("common.t_ipa_s", s.t_ipa);
    r.text("common.ipa_scope", [&](const std::string& v) {
        if (v == "node")
        {
            s.ipa_scope = IpaScope::Node;
        }
        else if (v == "bs")
        {
            s.ipa_scope = IpaScope::Bs;
        }
        else
        {
            throw std::invalid_argument("expected node or bs");
        }
    });
    r.seconds("common.app_jitter_s", s.app_jitter);
    r.text("common.placement", [&](const std::string& v) {
        s.placement.clear();
        if (v == "uniform-random")
        {
            return;
        }
        for (const std::string& xy : detail::split_list(v, ';'))
        {
            const auto parts = detail::split_list(xy, ' ');
            if (parts.size() != 2)
            {
                throw std::invalid_argument("expected 'x y; x y; ...' or uniform-random");
            }
            s.placement.push_back(Position{std::stod(parts[0]), std::stod(parts[1])});
        }
    });
    r.text("common.bs_position", [&](const std::string& v) {
        const auto parts = detail::split_list(v, ' ');
        if (parts.size() != 2)
        {
            throw std::invalid_argument("expected 'x y'");
        }
        s.bs_position = Position{std::stod(parts[0]), std::stod(parts[1])};
    });
    r.boolean("common.include_bs_in_power", s.include_bs_in_power);
    r.number("common.battery_mah", s.battery_mah);
    r.text("common.dead_nodes", [&](const std::string& v) {
        s.dead_nodes.clear();
        for (const std::string& item : detail::split_list(v))
        {
            s.dead_nodes.push_back(static_cast<std::uint32_t>(std::stoul(item)));
        }
    });

    detail::read_radio(r, "radio_main", s.main_radio);
    detail::read_radio(r, "radio_wur", s.wake_up_radio);

    r.number("medium.tx_power_dbm", s.link.tx_power_dbm);
    r.number("medium.data_sensitivity_dbm", s.link.data_sensitivity_dbm);
    r.number("medium.wakeup_threshold_dbm", s.link.wakeup_threshold_dbm);
    r.number("medium.path_loss_exponent", s.link.propagation.exponent);
    r.number("medium.reference_distance_m", s.link.propagation.reference_distance_m);
    r.number("medium.reference_loss_db", s.link.propagation.reference_loss_db);
    r.number("medium.max_range_m", s.link.propagation.max_range_m);

    r.seconds("dora.timeout_s", s.dora.t_out);
    r.seconds("dora.wuc_preamble_s", s.dora.wuc_preamble);
    r.seconds("dora.decider_min_duration_s", s.dora.decider_min_duration);

    r.seconds("bmac.slot_duration_s", s.bmac.slot_duration);
    r.seconds("bmac.check_interval_s", s.bmac.check_interval);
    r.seconds("bmac.cca_time_s", s.bmac.cca_time);
    r.text("bmac.preamble_mode", [&](const std::string& v) {
        if (v == "microframe")
        {
            s.bmac.preamble_mode = bmac::PreambleMode::Microframe;
        }
        else if (v == "carrier")
        {
            s.bmac.preamble_mode = bmac::PreambleMode::Carrier;
        }
        else
        {
            throw std::invalid_argument("expected microframe or carrier");
        }
    });
    r.number("bmac.microframe_bytes", s.bmac.microframe_bytes);

    r.number("csma154.min_be", s.csma.min_be);
    r.number("csma154.max_be", s.csma.max_be);
    r.number("csma154.max_csma_backoffs", s.csma.max_csma_backoffs);
    r.seconds("csma154.cca_time_s", s.csma.cca_time);
    r.seconds("csma154.unit_backoff_s", s.csma.unit_backoff);

    r.text("sweep.t_ipa_points", [&](const std::string& v) {
        cfg.sweep.t_ipa.clear();
        for (const std::string& item : detail::split_list(v))
        {
            cfg.sweep.t_ipa.push_back(Duration::from_seconds(std::stod(item)));
        }
    });
    r.text("sweep.protocols", [&](const std::string& v) {
        cfg.sweep.protocols.clear();
        for (const std::string& item : detail::split_list(v))
        {
            const auto p = parse_protocol(item);
            if (!p)
            {
                throw std::invalid_argument("unknown protocol '" + item + "'");
            }
            cfg.sweep.protocols.push_back(*p);
        }
    });
    r.number("sweep.seeds", cfg.sweep.seeds);

    r.finish();
    auto problems = std::move(r.problems());
    for (auto& p : cfg.scenario.problems())
    {
        problems.push_back(std::move(p));
    }
    try
    {
        cfg.sweep.validate();
    }
    catch (const ConfigInvalid& e)
    {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!problems.empty())
    {
        for (auto& p : problems)
        {
            p = origin + ": " + p;
        }
        throw ConfigInvalid(std::move(problems));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ConfigInvalid({path + ": cannot open config file"});
    }
    return parse_config(in, path);
}

} // namespace dorasim
