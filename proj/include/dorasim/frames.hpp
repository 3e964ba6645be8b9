/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/time.hpp"

#include <cstdint>
#include <variant>

namespace dorasim {

/// 16-bit link-layer address.
struct MacAddress
{
    std::uint16_t value{0};

    static constexpr MacAddress broadcast() { return MacAddress{0xffff}; }
    static constexpr MacAddress base_station() { return MacAddress{0x0000}; }
    /// Sensor nodes are numbered from 1 so that node index 0 maps to address 1.
    static constexpr MacAddress for_node(std::uint32_t index) { return MacAddress{static_cast<std::uint16_t>(index + 1)}; }

    constexpr auto operator<=>(const MacAddress&) const = default;
};

/// One's-complement sum of the two address octets, inverted.
constexpr std::uint8_t address_checksum(MacAddress a)
{
    const unsigned sum = (a.value >> 8) + (a.value & 0xffu);
    const unsigned folded = (sum & 0xffu) + (sum >> 8);
    return static_cast<std::uint8_t>(~folded & 0xffu);
}

/// Wake-up call: unmodulated preamble followed by address and checksum at the WuR bitrate.
struct WakeUpCall
{
    Duration preamble{Duration::ms(4)};
    MacAddress dest{};
    std::uint8_t check{0};
    std::uint32_t address_bits{16};
    std::uint32_t checksum_bits{8};
    std::uint64_t bitrate{32'000};

    static WakeUpCall addressed_to(MacAddress dest, Duration preamble = Duration::ms(4))
    {
        WakeUpCall w;
        w.preamble = preamble;
        w.dest = dest;
        w.check = address_checksum(dest);
        return w;
    }

    [[nodiscard]] Duration address_airtime() const { return Duration::for_bits(address_bits + checksum_bits, bitrate); }
    [[nodiscard]] Duration airtime() const { return preamble + address_airtime(); }
    [[nodiscard]] bool checksum_ok() const { return check == address_checksum(dest); }
};

struct DataFrame
{
    MacAddress src{};
    MacAddress dest{MacAddress::base_station()};
    std::uint32_t seq{0};
    std::uint32_t header_bytes{12}; // src, dst, seq, len, FCS
    std::uint32_t payload_bytes{100};
    std::uint64_t bitrate{250'000};

    [[nodiscard]] std::uint64_t bits() const { return (std::uint64_t{header_bytes} + payload_bytes) * 8; }
    [[nodiscard]] Duration airtime() const { return Duration::for_bits(bits(), bitrate); }
};

/**
 * LPL preamble sent as one continuous transmission.
 *
 * With microframe > 0 the train is a back-to-back run of short frames each
 * carrying (src, dest), so an overhearer can learn the destination from any
 * complete microframe. With microframe == 0 it is a bare carrier.
 */
struct PreambleTrain
{
    MacAddress src{};
    MacAddress dest{};
    Duration length{};
    Duration microframe{};

    [[nodiscard]] Duration airtime() const { return length; }
    [[nodiscard]] bool addressed() const { return microframe.count() > 0; }
};

using Frame = std::variant<WakeUpCall, DataFrame, PreambleTrain>;

inline Duration airtime(const Frame& f)
{
    return std::visit([](const auto& x) { return x.airtime(); }, f);
}

/// Portion of the airtime carrying no decodable bits.
inline Duration preamble_duration(const Frame& f)
{
    if (const auto* w = std::get_if<WakeUpCall>(&f))
    {
        return w->preamble;
    }
    if (const auto* p = std::get_if<PreambleTrain>(&f))
    {
        return p->length;
    }
    return Duration{};
}

} // namespace dorasim
