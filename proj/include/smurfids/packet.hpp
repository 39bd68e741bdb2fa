#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smurfids/errors.hpp"

namespace smurfids {

constexpr uint8_t kProtoIcmp = 1;
constexpr uint8_t kProtoTcp = 6;
constexpr uint8_t kProtoUdp = 17;

/*
 *   0                   1                   2                   3
 *   0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |Version|  IHL  |Type of Service|          Total Length         |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |         Identification        |Flags|      Fragment Offset    |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |  Time to Live |    Protocol   |         Header Checksum       |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |                       Source Address                          |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |                    Destination Address                        |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *  |                    Options                    |    Padding    |
 *  +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 */

// Parsed IPv4 datagram. `total_length` is what the header declares;
// `actual_length` is what was observed on the wire. The two may disagree,
// which is exactly what the normalizer looks for.
struct IpDatagram {
    uint8_t version = 4;
    uint8_t header_length = 5;  // 32-bit words
    uint8_t tos = 0;
    uint16_t total_length = 20;
    uint32_t actual_length = 20;
    uint16_t identification = 0;
    bool df_flag = false;
    bool mf_flag = false;
    uint16_t fragment_offset = 0;  // 8-byte units
    uint8_t ttl = 64;
    uint8_t protocol = 0;
    uint16_t header_checksum = 0;
    uint32_t src_addr = 0;
    uint32_t dst_addr = 0;
    std::vector<uint8_t> options;  // preserved opaquely
    std::vector<uint8_t> payload;  // everything past the header, never truncated by parse

    size_t header_bytes() const { return static_cast<size_t>(header_length) * 4; }
};

// RFC 1071 Internet checksum: one's-complement of the one's-complement sum
// of 16-bit big-endian words, odd lengths padded with a zero byte. A buffer
// whose embedded checksum field is correct sums to 0 under verification.
uint16_t internet_checksum(std::span<const uint8_t> bytes);

// Decodes an IPv4 header per the layout above. Throws MalformedHeader on
// inputs shorter than 20 bytes, bad version (UnsupportedProtocol for 6),
// header_length < 5, or header_length extending past the input.
IpDatagram parse_ipv4(std::span<const uint8_t> bytes);

// Emits header + options + payload. When recompute_checksum is set the
// emitted header checksum is made self-verifying; otherwise the stored
// field is written untouched, so parse followed by serialize(false) is the
// identity on bytes.
std::vector<uint8_t> serialize(const IpDatagram& dgram, bool recompute_checksum);

struct IcmpHeader {
    uint8_t icmp_type = 0;  // 8 = echo request, 0 = echo reply
    uint8_t code = 0;
    uint16_t checksum = 0;
    uint16_t identifier = 0;
    uint16_t sequence = 0;
};

constexpr uint8_t kIcmpEchoReply = 0;
constexpr uint8_t kIcmpEchoRequest = 8;
constexpr size_t kIcmpHeaderBytes = 8;

// Throws MalformedHeader when the message is shorter than 8 bytes.
IcmpHeader parse_icmp(std::span<const uint8_t> message);

// Checksum over the whole ICMP message with the checksum field taken as zero.
uint16_t icmp_checksum(std::span<const uint8_t> message);

struct TcpHeader {
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    uint32_t seq = 0;
    uint32_t ack = 0;
    uint8_t data_offset = 5;  // 32-bit words
    uint8_t reserved = 0;     // low nibble of offset byte
    uint8_t flags = 0;
    uint16_t window = 0;
    uint16_t checksum = 0;
    uint16_t urgent = 0;
};

constexpr uint8_t kTcpFin = 0x01;
constexpr uint8_t kTcpSyn = 0x02;
constexpr uint8_t kTcpRst = 0x04;
constexpr uint8_t kTcpAck = 0x10;
constexpr size_t kTcpHeaderBytes = 20;

// Throws MalformedHeader when the segment is shorter than 20 bytes.
TcpHeader parse_tcp(std::span<const uint8_t> segment);

// Checksum over the IPv4 pseudo-header plus the segment, checksum field
// taken as zero.
uint16_t tcp_checksum(uint32_t src_addr, uint32_t dst_addr, std::span<const uint8_t> segment);

// Dotted-quad helpers; parse throws Error on anything that is not a.b.c.d.
uint32_t parse_addr(std::string_view text);
std::string format_addr(uint32_t addr);

}  // namespace smurfids
