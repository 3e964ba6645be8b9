/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dorasim {

class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class EmptyTable : public std::invalid_argument
{
  public:
    EmptyTable()
        : std::invalid_argument("no results to write")
    {
    }
};

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v)
{
    return fmt::format("{}", v);
}

/**
 * results.csv: one row per run. Node energy columns run up to the largest
 * node count in the table; runs with fewer nodes leave the tail empty.
 */
inline std::string results_csv(const std::vector<RunMetrics>& rows)
{
    if (rows.empty())
    {
        throw EmptyTable();
    }
    std::size_t width = 0;
    for (const RunMetrics& r : rows)
    {
        width = std::max(width, r.nodes.size());
    }
    std::string out = "protocol,t_ipa_s,seed,mean_power_w,pdr";
    for (std::size_t i = 0; i < width; ++i)
    {
        out += fmt::format(",energy_node{}_j", i);
    }
    out += ",packets_generated,packets_received\n";
    for (const RunMetrics& r : rows)
    {
        out += fmt::format("{},{},{},{},{}", to_string(r.protocol), format_number(r.t_ipa.seconds()), r.seed,
                           format_number(r.network_mean_power_w), format_number(r.pdr));
        for (std::size_t i = 0; i < width; ++i)
        {
            out += ',';
            if (i < r.nodes.size())
            {
                out += format_number(r.nodes[i].energy_j);
            }
        }
        out += fmt::format(",{},{}\n", r.packets_generated, r.packets_received_at_bs);
    }
    return out;
}

struct SummaryRow
{
    Protocol protocol{Protocol::Dora};
    Duration t_ipa{};
    std::size_t runs{0};
    double power_mean_w{0.0};
    double power_min_w{0.0};
    double power_max_w{0.0};
    double pdr_mean{0.0};
    double pdr_min{0.0};
    double pdr_max{0.0};
    /// 1 - P / P_csma154 at the same point, in percent; empty without a csma154 row.
    std::optional<double> saving_pct;
    /// battery_mah * V / P, in hours.
    double lifetime_h{0.0};
};

/// Seed-averaged rows keyed by (protocol, t_ipa), in key order.
inline std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& rows, double battery_mah, double supply_v)
{
    std::map<std::pair<Protocol, Duration>, SummaryRow> acc;
    for (const RunMetrics& r : rows)
    {
        auto [it, fresh] = acc.try_emplace({r.protocol, r.t_ipa});
        SummaryRow& s = it->second;
        if (fresh)
        {
            s.protocol = r.protocol;
            s.t_ipa = r.t_ipa;
            s.power_min_w = s.power_max_w = r.network_mean_power_w;
            s.pdr_min = s.pdr_max = r.pdr;
        }
        ++s.runs;
        s.power_mean_w += r.network_mean_power_w;
        s.pdr_mean += r.pdr;
        s.power_min_w = std::min(s.power_min_w, r.network_mean_power_w);
        s.power_max_w = std::max(s.power_max_w, r.network_mean_power_w);
        s.pdr_min = std::min(s.pdr_min, r.pdr);
        s.pdr_max = std::max(s.pdr_max, r.pdr);
    }
    std::vector<SummaryRow> out;
    for (auto& [key, s] : acc)
    {
        s.power_mean_w /= static_cast<double>(s.runs);
        s.pdr_mean /= static_cast<double>(s.runs);
        s.lifetime_h = s.power_mean_w > 0.0 ? battery_mah * 1e-3 * supply_v / s.power_mean_w : 0.0;
        out.push_back(s);
    }
    for (SummaryRow& s : out)
    {
        auto ref = acc.find({Protocol::Csma154, s.t_ipa});
        if (ref != acc.end() && ref->second.power_mean_w > 0.0)
        {
            s.saving_pct = 100.0 * (1.0 - s.power_mean_w / ref->second.power_mean_w);
        }
    }
    return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows)
{
    if (rows.empty())
    {
        throw EmptyTable();
    }
    std::string out = "protocol,t_ipa_s,runs,mean_power_w,min_power_w,max_power_w,mean_pdr,min_pdr,max_pdr,"
                      "saving_vs_csma154_pct,projected_lifetime_h\n";
    for (const SummaryRow& s : rows)
    {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", to_string(s.protocol), format_number(s.t_ipa.seconds()),
                           s.runs, format_number(s.power_mean_w), format_number(s.power_min_w),
                           format_number(s.power_max_w), format_number(s.pdr_mean), format_number(s.pdr_min),
                           format_number(s.pdr_max), s.saving_pct ? format_number(*s.saving_pct) : std::string{},
                           format_number(s.lifetime_h));
    }
    return out;
}

/// Writes `content` to `path`. Nothing is created when the write cannot start.
inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
    {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f)
    {
        throw IoError("write to " + path.string() + " failed");
    }
}

inline void emit_csv(const std::vector<RunMetrics>& rows, const std::filesystem::path& path)
{
    write_file(path, results_csv(rows));
}

// Line charts -----------------------------------------------------------

struct ChartSeries
{
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct ChartSpec
{
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y{false};
    std::optional<std::pair<double, double>> y_range;
};

namespace detail {

inline std::string svg_escape(const std::string& s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string tick_label(double v)
{
    return fmt::format("{:.3g}", v);
}

} // namespace detail

inline std::string line_chart_svg(const ChartSpec& spec, const std::vector<ChartSeries>& series)
{
    constexpr double width = 640;
    constexpr double height = 420;
    constexpr double left = 80;
    constexpr double right = 150;
    constexpr double top = 40;
    constexpr double bottom = 60;
    static const char* const colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
    for (const ChartSeries& s : series)
    {
        for (auto [x, y] : s.points)
        {
            if (spec.log_y && y <= 0.0)
            {
                continue;
            }
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    if (!std::isfinite(x_lo))
    {
        x_lo = 0, x_hi = 1, y_lo = spec.log_y ? 1e-6 : 0, y_hi = 1;
    }
    if (spec.y_range)
    {
        std::tie(y_lo, y_hi) = *spec.y_range;
    }
    if (spec.log_y)
    {
        y_lo = std::pow(10.0, std::floor(std::log10(y_lo)));
        y_hi = std::pow(10.0, std::ceil(std::log10(y_hi)));
        if (y_hi <= y_lo)
        {
            y_hi = y_lo * 10.0;
        }
    }
    if (x_hi <= x_lo)
    {
        x_hi = x_lo + 1.0;
    }
    if (y_hi <= y_lo)
    {
        y_hi = y_lo + 1.0;
    }

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) {
        const double f = spec.log_y ? (std::log10(y) - std::log10(y_lo)) / (std::log10(y_hi) - std::log10(y_lo))
                                    : (y - y_lo) / (y_hi - y_lo);
        return top + (1.0 - f) * ph;
    };

    std::ostringstream o;
    o << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)",
                     width, height)
      << '\n';
    o << fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)", width, height) << '\n';
    o << fmt::format(R"(<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>)", left + pw / 2,
                     detail::svg_escape(spec.title))
      << '\n';
    o << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)", left, top, pw, ph)
      << '\n';

    // y ticks
    std::vector<double> yticks;
    if (spec.log_y)
    {
        for (double v = y_lo; v <= y_hi * 1.0001; v *= 10.0)
        {
            yticks.push_back(v);
        }
    }
    else
    {
        for (int i = 0; i <= 5; ++i)
        {
            yticks.push_back(y_lo + (y_hi - y_lo) * i / 5.0);
        }
    }
    for (double v : yticks)
    {
        const double y = sy(v);
        o << fmt::format(R"(<line x1="{}" y1="{:.2f}" x2="{}" y2="{:.2f}" stroke="#ddd"/>)", left, y, left + pw, y)
          << '\n';
        o << fmt::format(R"(<text x="{}" y="{:.2f}" text-anchor="end" dy="4">{}</text>)", left - 6, y,
                         detail::tick_label(v))
          << '\n';
    }
    // x ticks at the data abscissae
    std::vector<double> xs;
    for (const ChartSeries& s : series)
    {
        for (auto [x, y] : s.points)
        {
            xs.push_back(x);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double v : xs)
    {
        o << fmt::format(R"(<text x="{:.2f}" y="{}" text-anchor="middle">{}</text>)", sx(v), top + ph + 18,
                         detail::tick_label(v))
          << '\n';
    }
    o << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)", left + pw / 2, height - 18,
                     detail::svg_escape(spec.x_label))
      << '\n';
    o << fmt::format(R"svg(<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>)svg",
                     top + ph / 2, detail::svg_escape(spec.y_label))
      << '\n';

    for (std::size_t i = 0; i < series.size(); ++i)
    {
        const char* colour = colours[i % std::size(colours)];
        std::string pts;
        for (auto [x, y] : series[i].points)
        {
            if (spec.log_y && y <= 0.0)
            {
                continue;
            }
            pts += fmt::format("{:.2f},{:.2f} ", sx(x), sy(y));
        }
        o << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>)", colour, pts) << '\n';
        for (auto [x, y] : series[i].points)
        {
            if (spec.log_y && y <= 0.0)
            {
                continue;
            }
            o << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="{}"/>)", sx(x), sy(y), colour) << '\n';
        }
        const double ly = top + 16 + 18 * static_cast<double>(i);
        o << fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)", left + pw + 12, ly,
                         left + pw + 36, ly, colour)
          << '\n';
        o << fmt::format(R"(<text x="{}" y="{}" dy="4">{}</text>)", left + pw + 42, ly,
                         detail::svg_escape(series[i].label))
          << '\n';
    }
    o << "</svg>\n";
    return o.str();
}

/// Mean power and PDR charts from the seed-averaged summary.
inline std::pair<std::string, std::string> summary_charts(const std::vector<SummaryRow>& rows)
{
    std::map<Protocol, ChartSeries> power, pdr;
    for (const SummaryRow& s : rows)
    {
        power[s.protocol].label = std::string(to_string(s.protocol));
        power[s.protocol].points.emplace_back(s.t_ipa.seconds(), s.power_mean_w * 1e3);
        pdr[s.protocol].label = std::string(to_string(s.protocol));
        pdr[s.protocol].points.emplace_back(s.t_ipa.seconds(), s.pdr_mean);
    }
    std::vector<ChartSeries> ps, ds;
    for (auto& [p, s] : power)
    {
        ps.push_back(s);
    }
    for (auto& [p, s] : pdr)
    {
        ds.push_back(s);
    }
    ChartSpec pspec{"Mean power consumption", "Inter packet arrival time (s)", "Mean power (mW)", true, {}};
    ChartSpec dspec{"Packet delivery ratio", "Inter packet arrival time (s)", "PDR", false, std::pair{0.0, 1.05}};
    return {line_chart_svg(pspec, ps), line_chart_svg(dspec, ds)};
}

} // namespace dorasim
