#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smurfids/packet.hpp"
#include "smurfids/pcap.hpp"

namespace smurfids {

enum class Reason {
    BadIpChecksum,
    BadHeaderLength,
    DeclaredLenExceedsActual,
    OverlongTrimmed,
    TtlRaised,
    DfCleared,
    MfInvalid,
    BroadcastEcho,
    BadIcmpChecksum,
    MalformedIcmp,
    BadTcpChecksum,
    TcpReservedCleared,
    MalformedTcp,
};

// Rule identifier as it appears in logs and JSON, e.g. BAD_IP_CHECKSUM.
std::string_view reason_name(Reason r);

struct Subnet {
    uint32_t addr = 0;
    int prefix_len = 24;

    uint32_t mask() const;
    bool contains(uint32_t a) const;
    uint32_t broadcast_addr() const;
};

// Parses "a.b.c.d/len"; throws Error on malformed input.
Subnet parse_subnet(std::string_view text);

struct NormalizerConfig {
    uint8_t ttl_floor = 64;         // every emitted packet leaves with ttl >= this
    uint8_t max_internal_path = 32; // hop count the floor must clear
    bool clear_df = true;
    bool verify_ip_checksum = true;
    bool verify_icmp_checksum = true;
    bool drop_broadcast_echo = true;
    bool trim_overlong = true;
    // Directed-broadcast detection needs topology knowledge the packet alone
    // lacks; echo requests to the broadcast address of any subnet listed here
    // are treated as amplification attempts. 255.255.255.255 always matches.
    std::vector<Subnet> local_subnets;

    bool valid() const { return ttl_floor > max_internal_path; }
};

enum class Action { Pass, Modified, Dropped };

struct Verdict {
    Action action = Action::Pass;
    bool alerted = false;
    std::vector<Reason> reasons;
};

struct NormalizationLog {
    uint64_t total = 0;
    uint64_t passed = 0;
    uint64_t modified = 0;
    uint64_t dropped = 0;
    uint64_t alerted = 0;
    uint64_t inserted = 0;  // category exists in the log interface; no rule inserts
    std::map<std::string, uint64_t> per_reason;

    void record(const Verdict& v);
};

std::string to_json_string(const NormalizationLog& log, int indent = -1);

using NormalizeResult = std::pair<Verdict, std::optional<IpDatagram>>;

// IP-level rules, applied in this order:
//   1. verify header checksum              -> drop BAD_IP_CHECKSUM
//   2. header_length in [5,15] and fitting -> drop BAD_HEADER_LENGTH
//   3. total_length > actual_length        -> drop DECLARED_LEN_EXCEEDS_ACTUAL
//   4. actual_length > total_length        -> trim payload, OVERLONG_TRIMMED
//   5. ttl < ttl_floor                     -> raise ttl, TTL_RAISED
//   6. DF set (when clear_df)              -> clear, DF_CLEARED
//   7. MF set with empty payload           -> drop MF_INVALID
//   8. anything modified                   -> header checksum recomputed
// Checksum comes first so the other rules never run on garbage; the fixed
// order is what makes a second pass a no-op.
NormalizeResult normalize_ip(const IpDatagram& dgram, const NormalizerConfig& config);

// ICMP rules: message >= 8 bytes (MALFORMED_ICMP), checksum over header +
// payload (BAD_ICMP_CHECKSUM), echo request to a broadcast destination
// dropped and alerted (BROADCAST_ECHO) — the Smurf amplification vector.
NormalizeResult normalize_icmp(const IpDatagram& dgram, const NormalizerConfig& config);

// TCP rules: segment >= 20 bytes (MALFORMED_TCP), checksum over the
// pseudo-header (BAD_TCP_CHECKSUM), reserved bits cleared and alerted
// (TCP_RESERVED_CLEARED) with the checksum recomputed.
NormalizeResult normalize_tcp(const IpDatagram& dgram, const NormalizerConfig& config);

// normalize_ip followed by the protocol-specific normalizer; verdicts merged.
NormalizeResult normalize_packet(const IpDatagram& dgram, const NormalizerConfig& config);

struct TimedDatagram {
    Timestamp ts;
    IpDatagram dgram;
};

// Runs every packet through normalize_packet in order. Dropped packets are
// withheld from the output; the log satisfies total = passed+modified+dropped.
std::pair<std::vector<TimedDatagram>, NormalizationLog> normalize_stream(
    std::span<const TimedDatagram> packets, const NormalizerConfig& config);

}  // namespace smurfids
