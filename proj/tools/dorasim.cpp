/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

// Command-line front end: run one scenario, sweep t_ipa, or check a config.

#include "dorasim/config.hpp"
#include "dorasim/report.hpp"
#include "dorasim/scenario.hpp"
#include "dorasim/sweep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace dorasim;

namespace {

void prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
    {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

void write_outputs(const std::vector<RunMetrics>& rows, const ScenarioConfig& base, const fs::path& dir, bool charts)
{
    prepare_dir(dir);
    emit_csv(rows, dir / "results.csv");
    const auto summary = summarize(rows, base.battery_mah, base.main_radio.supply_voltage);
    write_file(dir / "summary.csv", summary_csv(summary));
    if (charts)
    {
        auto [power, pdr] = summary_charts(summary);
        write_file(dir / "power.svg", power);
        write_file(dir / "pdr.svg", pdr);
    }
}

void print_run(const RunMetrics& m)
{
    fmt::print("protocol          {}\n", to_string(m.protocol));
    fmt::print("t_ipa             {} s\n", m.t_ipa.seconds());
    fmt::print("seed              {}\n", m.seed);
    fmt::print("mean node power   {:.6g} mW\n", m.network_mean_power_w * 1e3);
    fmt::print("packets           {} generated, {} received\n", m.packets_generated, m.packets_received_at_bs);
    fmt::print("pdr               {}\n", m.pdr);
    fmt::print("drops             {} queue, {} channel\n", m.dropped_queue, m.dropped_channel);
    fmt::print("overlaps          {} of {} transmissions\n", m.overlapping_transmissions, m.transmissions);
    if (!m.polls.empty())
    {
        fmt::print("poll timeouts     {}\n", m.poll_timeouts);
    }
    fmt::print("events            {}\n", m.events);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Single-hop wake-up radio MAC simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Run one scenario");
    std::optional<std::string> protocol;
    std::optional<double> t_ipa;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    run->add_option("--config", config_path, "Experiment file")->required();
    run->add_option("--protocol", protocol, "dora, bmac or csma154");
    run->add_option("--t-ipa", t_ipa, "Inter packet arrival time in seconds");
    run->add_option("--seed", seed, "Run seed");
    run->add_option("--duration", duration, "Simulated seconds");
    run->add_option("--out", out_dir, "Directory for results.csv and summary.csv");

    auto* sweep = app.add_subcommand("sweep", "Sweep t_ipa over all configured protocols");
    std::optional<std::size_t> seeds;
    std::string points;
    unsigned threads = 0;
    bool charts = true;
    sweep->add_option("--config", config_path, "Experiment file")->required();
    sweep->add_option("--seeds", seeds, "Seeds per point");
    sweep->add_option("--points", points, "Comma-separated t_ipa values in seconds");
    sweep->add_option("--out", out_dir, "Output directory")->default_val("out");
    sweep->add_option("--threads", threads, "Worker threads, 0 for all cores");
    sweep->add_flag("!--no-charts", charts, "Skip power.svg and pdr.svg");

    auto* validate = app.add_subcommand("validate", "Check a config file");
    validate->add_option("--config", config_path, "Experiment file")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        ExperimentConfig exp = load_config(config_path);
        if (*validate)
        {
            fmt::print("{}: ok ({} nodes, {} sweep points, {} seeds)\n", config_path, exp.scenario.n_nodes,
                       exp.sweep.t_ipa.size(), exp.sweep.seeds);
            return 0;
        }
        if (*run)
        {
            ScenarioConfig& s = exp.scenario;
            if (protocol)
            {
                const auto p = parse_protocol(*protocol);
                if (!p)
                {
                    throw ConfigInvalid({"--protocol: expected dora, bmac or csma154"});
                }
                s.protocol = *p;
            }
            if (t_ipa)
            {
                s.t_ipa = Duration::from_seconds(*t_ipa);
            }
            if (seed)
            {
                s.seed = *seed;
            }
            if (duration)
            {
                s.duration = Duration::from_seconds(*duration);
            }
            const RunMetrics m = run_scenario(s);
            print_run(m);
            if (!out_dir.empty())
            {
                write_outputs({m}, s, out_dir, false);
            }
            return 0;
        }
        if (seeds)
        {
            exp.sweep.seeds = *seeds;
        }
        if (!points.empty())
        {
            exp.sweep.t_ipa.clear();
            for (const std::string& item : detail::split_list(points))
            {
                exp.sweep.t_ipa.push_back(Duration::from_seconds(std::stod(item)));
            }
        }
        const auto rows = run_sweep(exp, threads);
        write_outputs(rows, exp.scenario, out_dir, charts);
        const auto summary = summarize(rows, exp.scenario.battery_mah, exp.scenario.main_radio.supply_voltage);
        std::cout << summary_csv(summary);
        fmt::print(stderr, "{} runs written to {}\n", rows.size(), out_dir);
        return 0;
    }
    catch (const ConfigInvalid& e)
    {
        for (const auto& p : e.problems())
        {
            fmt::print(stderr, "error: {}\n", p);
        }
        return 2;
    }
    catch (const std::exception& e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
