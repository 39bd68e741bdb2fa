#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "smurfids/errors.hpp"

namespace smurfids {

struct Timestamp {
    uint32_t sec = 0;
    uint32_t usec = 0;

    double seconds() const { return static_cast<double>(sec) + static_cast<double>(usec) * 1e-6; }

    static Timestamp from_seconds(double s);

    auto operator<=>(const Timestamp&) const = default;
};

// One captured packet, link layer already stripped: `bytes` starts at the
// IPv4 header.
struct CapturedPacket {
    Timestamp ts;
    std::vector<uint8_t> bytes;
};

// Reads a classic pcap file (magic 0xA1B2C3D4, microsecond timestamps),
// either byte order. The link type must be Ethernet; frames whose ethertype
// is not IPv4 are skipped. Throws BadCaptureFile on magic mismatch, a
// non-Ethernet link type, or a truncated record.
std::vector<CapturedPacket> read_capture(const std::filesystem::path& path);

// Writes native-order classic pcap, wrapping each packet in an Ethernet II
// frame. Throws IoFailure when the file cannot be written.
void write_capture(const std::filesystem::path& path, std::span<const CapturedPacket> packets);

}  // namespace smurfids
